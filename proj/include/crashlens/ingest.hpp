#pragma once

#include <chrono>
#include <fstream>
#include <istream>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "crashlens/error.hpp"
#include "crashlens/time.hpp"
#include "crashlens/trace_model.hpp"

namespace crashlens {

struct CrashCorpus {
  std::vector<CrashReport> reports;
  Instant window_start;
  Instant window_end;
  std::size_t skipped_count = 0;

  TimeInterval window() const { return {window_start, window_end}; }
  std::size_t size() const { return reports.size(); }
  bool empty() const { return reports.empty(); }
};

/// crash_id -> position in corpus.reports. Views point into the corpus.
using CorpusIndex = std::unordered_map<std::string_view, std::size_t>;

inline CorpusIndex index_by_id(const CrashCorpus& corpus) {
  CorpusIndex index;
  index.reserve(corpus.reports.size());
  for (std::size_t i = 0; i < corpus.reports.size(); ++i) {
    index.emplace(corpus.reports[i].crash_id, i);
  }
  return index;
}

struct LoadOptions {
  // Strict: the first malformed record or duplicate id aborts the load.
  // Lenient: such records are skipped and counted.
  bool strict = false;
};

/// Shares parsed traces between reports whose raw text is byte-identical.
class TraceCache {
 public:
  std::shared_ptr<const StackTrace> parse(const std::string& raw) {
    if (auto it = cache_.find(raw); it != cache_.end()) return it->second;
    auto trace = std::make_shared<const StackTrace>(parse_stack_trace(raw));
    cache_.emplace(raw, trace);
    return trace;
  }
  std::size_t distinct() const { return cache_.size(); }

 private:
  std::unordered_map<std::string, std::shared_ptr<const StackTrace>> cache_;
};

namespace detail {

inline std::optional<std::string> optional_string_field(const nlohmann::json& record,
                                                        const char* key) {
  auto it = record.find(key);
  if (it == record.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw FormatFailure(std::string("field '") + key + "' must be a string or null");
  return it->get<std::string>();
}

inline std::string required_string_field(const nlohmann::json& record, const char* key) {
  auto it = record.find(key);
  if (it == record.end() || !it->is_string()) {
    throw FormatFailure(std::string("missing string field '") + key + "'");
  }
  return it->get<std::string>();
}

}  // namespace detail

/// Decodes one export record. Throws FormatFailure or MalformedTrace.
inline CrashReport parse_record(std::string_view line, TraceCache& traces) {
  nlohmann::json record;
  try {
    record = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatFailure(std::string("invalid JSON: ") + e.what());
  }
  if (!record.is_object()) throw FormatFailure("record is not a JSON object");

  CrashReport report;
  report.crash_id = detail::required_string_field(record, "crash_id");
  if (report.crash_id.empty()) throw FormatFailure("empty crash_id");
  report.timestamp = parse_timestamp(detail::required_string_field(record, "timestamp"));
  report.uri = detail::required_string_field(record, "uri");
  report.user = detail::optional_string_field(record, "user");
  report.session_id = detail::optional_string_field(record, "session_id");
  report.trace_ptr = traces.parse(detail::required_string_field(record, "stack_trace"));
  return report;
}

/// Reads newline-delimited export records, keeping those inside `window` in
/// file order. Malformed, out-of-window and (lenient) duplicate records are
/// counted in skipped_count.
inline CrashCorpus load_corpus(std::istream& in, const TimeInterval& window,
                               const LoadOptions& options = {}) {
  CrashCorpus corpus;
  corpus.window_start = window.start;
  corpus.window_end = window.end;

  TraceCache traces;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    CrashReport report;
    try {
      report = parse_record(line, traces);
    } catch (const Error& e) {
      if (options.strict) {
        throw FormatFailure("record " + std::to_string(line_no) + ": " + e.what());
      }
      ++corpus.skipped_count;
      continue;
    }
    if (!window.contains(report.timestamp)) {
      ++corpus.skipped_count;
      continue;
    }
    if (!seen.insert(report.crash_id).second) {
      if (options.strict) {
        throw DuplicateId("record " + std::to_string(line_no) + ": duplicate crash_id '" +
                          report.crash_id + "'");
      }
      ++corpus.skipped_count;
      continue;
    }
    corpus.reports.push_back(std::move(report));
  }
  if (in.bad()) throw IoFailure("read error while loading corpus");
  return corpus;
}

inline CrashCorpus load_corpus(const std::string& path, const TimeInterval& window,
                               const LoadOptions& options = {}) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoFailure("cannot open corpus file '" + path + "'");
  return load_corpus(in, window, options);
}

/// Consecutive week-long windows aligned to Monday 00:00 UTC, clipped to the
/// span so that their union is exactly the span.
inline std::vector<TimeInterval> weekly_windows(const TimeInterval& span) {
  using namespace std::chrono;
  std::vector<TimeInterval> out;
  if (span.empty()) return out;
  auto start_day = floor<days>(span.start);
  auto monday = start_day - (weekday{start_day} - Monday);
  Instant boundary = time_point_cast<milliseconds>(monday);
  while (boundary < span.end) {
    Instant next = boundary + days{7};
    out.push_back({std::max(boundary, span.start), std::min(next, span.end)});
    boundary = next;
  }
  return out;
}

/// Reports of `corpus` inside `window`, as a corpus of its own.
inline CrashCorpus slice_corpus(const CrashCorpus& corpus, const TimeInterval& window) {
  CrashCorpus out;
  out.window_start = std::max(window.start, corpus.window_start);
  out.window_end = std::min(window.end, corpus.window_end);
  for (const auto& r : corpus.reports) {
    if (window.contains(r.timestamp)) out.reports.push_back(r);
  }
  return out;
}

}  // namespace crashlens
