#pragma once

#include <charconv>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "crashlens/error.hpp"

namespace crashlens {

using Instant = std::chrono::sys_time<std::chrono::milliseconds>;

/// Half-open UTC interval [start, end).
struct TimeInterval {
  Instant start;
  Instant end;

  bool contains(Instant t) const { return start <= t && t < end; }
  bool empty() const { return end <= start; }
  std::chrono::milliseconds length() const { return end - start; }

  static TimeInterval unbounded() {
    return {Instant{std::chrono::milliseconds{std::numeric_limits<std::int64_t>::min()}},
            Instant{std::chrono::milliseconds{std::numeric_limits<std::int64_t>::max()}}};
  }
  bool is_unbounded() const { return *this == unbounded(); }

  friend bool operator==(const TimeInterval&, const TimeInterval&) = default;
};

namespace detail {

inline bool read_int(std::string_view s, std::size_t pos, std::size_t len, int& out) {
  if (pos + len > s.size()) return false;
  auto first = s.data() + pos;
  auto last = first + len;
  for (auto p = first; p != last; ++p) {
    if (*p < '0' || *p > '9') return false;
  }
  return std::from_chars(first, last, out).ec == std::errc{};
}

}  // namespace detail

/// Parses RFC-3339 timestamps ("2022-03-07T10:15:00Z", "...T10:15:00.123+02:00")
/// and plain dates ("2022-03-07", taken as 00:00 UTC). Fractional seconds are
/// truncated to milliseconds.
inline std::optional<Instant> try_parse_timestamp(std::string_view text) {
  using namespace std::chrono;
  int y, mo, d;
  if (text.size() < 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
  if (!detail::read_int(text, 0, 4, y) || !detail::read_int(text, 5, 2, mo) ||
      !detail::read_int(text, 8, 2, d)) {
    return std::nullopt;
  }
  year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) return std::nullopt;
  Instant t = time_point_cast<milliseconds>(sys_days{ymd});
  if (text.size() == 10) return t;

  if (text[10] != 'T' && text[10] != 't' && text[10] != ' ') return std::nullopt;
  int hh, mm, ss;
  if (text.size() < 19 || text[13] != ':' || text[16] != ':' ||
      !detail::read_int(text, 11, 2, hh) || !detail::read_int(text, 14, 2, mm) ||
      !detail::read_int(text, 17, 2, ss) || hh > 23 || mm > 59 || ss > 60) {
    return std::nullopt;
  }
  t += hours{hh} + minutes{mm} + seconds{ss};

  std::size_t pos = 19;
  if (pos < text.size() && text[pos] == '.') {
    ++pos;
    int scale = 100;
    int millis = 0;
    std::size_t digits = 0;
    while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') {
      millis += (text[pos] - '0') * scale;
      scale /= 10;
      ++pos;
      ++digits;
    }
    if (digits == 0) return std::nullopt;
    t += milliseconds{millis};
  }

  if (pos >= text.size()) return std::nullopt;
  if (text[pos] == 'Z' || text[pos] == 'z') {
    return pos + 1 == text.size() ? std::optional<Instant>{t} : std::nullopt;
  }
  if (text[pos] != '+' && text[pos] != '-') return std::nullopt;
  int oh, om;
  if (pos + 6 != text.size() || text[pos + 3] != ':' ||
      !detail::read_int(text, pos + 1, 2, oh) || !detail::read_int(text, pos + 4, 2, om)) {
    return std::nullopt;
  }
  auto offset = hours{oh} + minutes{om};
  return text[pos] == '+' ? t - offset : t + offset;
}

inline Instant parse_timestamp(std::string_view text) {
  if (auto t = try_parse_timestamp(text)) return *t;
  throw FormatFailure("invalid timestamp: '" + std::string(text) + "'");
}

/// UTC rendering; milliseconds are printed only when non-zero.
inline std::string format_timestamp(Instant t) {
  using namespace std::chrono;
  auto day_point = floor<days>(t);
  year_month_day ymd{day_point};
  hh_mm_ss<milliseconds> tod{t - day_point};
  char buf[40];
  int n = std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02d",
                        static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                        static_cast<unsigned>(ymd.day()), static_cast<int>(tod.hours().count()),
                        static_cast<int>(tod.minutes().count()),
                        static_cast<int>(tod.seconds().count()));
  std::string out(buf, static_cast<std::size_t>(n));
  if (auto ms = tod.subseconds().count(); ms != 0) {
    std::snprintf(buf, sizeof buf, ".%03d", static_cast<int>(ms));
    out += buf;
  }
  out += 'Z';
  return out;
}

/// "<start>..<end>"; either side may be empty for an open bound.
inline TimeInterval parse_interval(std::string_view text) {
  auto sep = text.find("..");
  if (sep == std::string_view::npos) {
    throw ConfigError("window must be written as <start>..<end>: '" + std::string(text) + "'");
  }
  TimeInterval window = TimeInterval::unbounded();
  auto lhs = text.substr(0, sep);
  auto rhs = text.substr(sep + 2);
  auto parse_side = [&](std::string_view side) {
    auto t = try_parse_timestamp(side);
    if (!t) throw ConfigError("invalid window bound: '" + std::string(side) + "'");
    return *t;
  };
  if (!lhs.empty()) window.start = parse_side(lhs);
  if (!rhs.empty()) window.end = parse_side(rhs);
  if (window.empty()) throw ConfigError("window is empty: '" + std::string(text) + "'");
  return window;
}

inline std::string format_interval(const TimeInterval& w) {
  std::string out;
  if (w.start != TimeInterval::unbounded().start) out += format_timestamp(w.start);
  out += "..";
  if (w.end != TimeInterval::unbounded().end) out += format_timestamp(w.end);
  return out;
}

}  // namespace crashlens
