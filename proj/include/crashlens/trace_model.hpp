#pragma once

#include <algorithm>
#include <charconv>
#include <memory>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "crashlens/error.hpp"
#include "crashlens/time.hpp"

namespace crashlens {

/// package.Class.method, split at the last two dots.
struct QualifiedMethod {
  std::string package;
  std::string class_name;
  std::string method;

  std::string str() const { return package + '.' + class_name + '.' + method; }

  static std::optional<QualifiedMethod> parse(std::string_view text) {
    auto last = text.rfind('.');
    if (last == std::string_view::npos || last == 0) return std::nullopt;
    auto mid = text.rfind('.', last - 1);
    if (mid == std::string_view::npos) return std::nullopt;
    QualifiedMethod q{std::string(text.substr(0, mid)),
                      std::string(text.substr(mid + 1, last - mid - 1)),
                      std::string(text.substr(last + 1))};
    if (q.package.empty() || q.class_name.empty() || q.method.empty()) return std::nullopt;
    if (q.package.front() == '.' || q.package.back() == '.') return std::nullopt;
    return q;
  }

  friend bool operator==(const QualifiedMethod&, const QualifiedMethod&) = default;
};

struct Frame {
  QualifiedMethod qualified_method;
  // "ClassMBean.java", or verbatim "Unknown Source" / "Native Method" / "".
  std::string file_name;
  std::optional<unsigned> line;
  std::size_t position = 0;

  bool has_source_file() const {
    return file_name.size() > 5 && file_name.ends_with(".java");
  }

  std::string location() const {
    return line ? file_name + ':' + std::to_string(*line) : file_name;
  }

  /// Canonical frame line without the leading "at ".
  std::string str() const { return qualified_method.str() + '(' + location() + ')'; }

  friend bool operator==(const Frame&, const Frame&) = default;
};

struct StackTrace {
  // Type and message of the deepest cause, i.e. the exception thrown at the
  // crash point.
  std::string exception_type;
  std::optional<std::string> message;
  std::vector<Frame> frames;
  std::string raw_text;

  friend bool operator==(const StackTrace&, const StackTrace&) = default;
};

struct CrashReport {
  std::string crash_id;
  Instant timestamp;
  std::string uri;
  std::optional<std::string> user;
  std::optional<std::string> session_id;
  // Reports with byte-identical raw traces may share one parsed value.
  std::shared_ptr<const StackTrace> trace_ptr;

  const StackTrace& trace() const { return *trace_ptr; }
};

/// A regex over the qualified method text and an ECMAScript-style format
/// string ("$$" is a literal dollar sign).
struct NormalizationRule {
  std::string pattern;
  std::string replacement;
  std::regex compiled;

  NormalizationRule(std::string pattern_text, std::string replacement_text)
      : pattern(std::move(pattern_text)), replacement(std::move(replacement_text)) {
    try {
      compiled = std::regex(pattern, std::regex::ECMAScript | std::regex::optimize);
    } catch (const std::regex_error& e) {
      throw ConfigError("invalid normalization pattern '" + pattern + "': " + e.what());
    }
  }
};

struct NormalizationRules {
  std::vector<NormalizationRule> rules;

  /// Generated reflection accessors, JDK proxies, lambda hidden classes and
  /// CGLIB subclasses.
  static NormalizationRules defaults() {
    NormalizationRules r;
    r.rules.emplace_back(R"(GeneratedMethodAccessor\d+)", "GeneratedMethodAccessor#");
    r.rules.emplace_back(R"(GeneratedConstructorAccessor\d+)", "GeneratedConstructorAccessor#");
    r.rules.emplace_back(R"(GeneratedSerializationConstructorAccessor\d+)",
                         "GeneratedSerializationConstructorAccessor#");
    r.rules.emplace_back(R"(\$Proxy\d+)", "$$Proxy#");
    r.rules.emplace_back(R"(\$\$Lambda\$\d+(/0x[0-9a-fA-F]+)?)", "$$$$Lambda$$#");
    r.rules.emplace_back(R"(\$\$(EnhancerBy|FastClassBy)(Spring)?CGLIB\$\$[0-9a-fA-F]+)",
                         "$$$$$1$2CGLIB$$$$#");
    return r;
  }

  bool empty() const { return rules.empty(); }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

inline std::size_t indentation(std::string_view line) {
  std::size_t n = 0;
  while (n < line.size() && (line[n] == ' ' || line[n] == '\t')) ++n;
  return n;
}

inline std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t begin = 0;
  while (begin <= text.size()) {
    auto end = text.find('\n', begin);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(begin, end - begin);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    begin = end + 1;
  }
  return lines;
}

// Strips "classloader/", "module@version/" and "app//" style prefixes. Hidden
// class names ("Foo$$Lambda$14/0x...") also contain '/', but always with a '$'
// before it, which module and loader names never have.
inline std::string_view strip_module_prefix(std::string_view qualified) {
  for (int i = 0; i < 2; ++i) {
    auto slash = qualified.find('/');
    if (slash == std::string_view::npos) break;
    if (qualified.substr(0, slash).find('$') != std::string_view::npos) break;
    qualified.remove_prefix(slash + 1);
  }
  return qualified;
}

inline bool valid_identifier_text(std::string_view s) {
  return !s.empty() && std::none_of(s.begin(), s.end(), [](char c) {
    return c == ' ' || c == '\t' || c == '(' || c == ')' || c == ':' || c == ',';
  });
}

}  // namespace detail

/// Matches one `at pkg.Class.method(File.java:NN)` line. The returned frame has
/// position 0; the caller assigns positions.
inline std::optional<Frame> parse_frame_line(std::string_view line) {
  auto text = detail::trim(line);
  if (!text.starts_with("at") || text.size() < 4 || (text[2] != ' ' && text[2] != '\t')) {
    return std::nullopt;
  }
  text = detail::trim(text.substr(3));

  auto open = text.find('(');
  if (open == std::string_view::npos) return std::nullopt;
  auto close = text.find(')', open);
  if (close == std::string_view::npos) return std::nullopt;

  // Logback-style packaging data ("~[app.jar:1.0]") may follow the frame.
  auto tail = detail::trim(text.substr(close + 1));
  if (!tail.empty()) {
    if (tail.front() == '~') tail.remove_prefix(1);
    if (tail.size() < 2 || tail.front() != '[' || tail.back() != ']') return std::nullopt;
  }

  auto qualified_text = detail::strip_module_prefix(detail::trim(text.substr(0, open)));
  if (!detail::valid_identifier_text(qualified_text)) return std::nullopt;
  auto qualified = QualifiedMethod::parse(qualified_text);
  if (!qualified) return std::nullopt;

  Frame frame;
  frame.qualified_method = std::move(*qualified);
  auto location = detail::trim(text.substr(open + 1, close - open - 1));
  auto colon = location.rfind(':');
  if (colon != std::string_view::npos && colon + 1 < location.size()) {
    auto digits = location.substr(colon + 1);
    unsigned value = 0;
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value);
    if (ec == std::errc{} && ptr == digits.data() + digits.size()) {
      frame.line = value;
      location = location.substr(0, colon);
    }
  }
  frame.file_name = std::string(location);
  return frame;
}

/// Parses Java-style stack trace text. With "Caused by:" chains the deepest
/// cause's frames come first, followed by each enclosing segment from the
/// nearest outwards, so position 0 is where the root exception was thrown.
/// Throws MalformedTrace when no line is a frame.
inline StackTrace parse_stack_trace(std::string_view raw) {
  struct Segment {
    std::string type;
    std::optional<std::string> message;
    std::vector<Frame> frames;
  };
  auto parse_header = [](std::string_view text) {
    Segment seg;
    constexpr std::string_view kThreadPrefix = "Exception in thread \"";
    if (text.starts_with(kThreadPrefix)) {
      auto quote = text.find('"', kThreadPrefix.size());
      if (quote != std::string_view::npos) text = detail::trim(text.substr(quote + 1));
    }
    auto colon = text.find(": ");
    if (colon == std::string_view::npos) {
      if (!text.empty() && text.back() == ':') text.remove_suffix(1);
      seg.type = std::string(detail::trim(text));
    } else {
      seg.type = std::string(detail::trim(text.substr(0, colon)));
      seg.message = std::string(text.substr(colon + 2));
    }
    return seg;
  };

  std::vector<Segment> segments;
  std::optional<std::size_t> suppressed_indent;
  bool any_frame = false;

  for (auto line : detail::split_lines(raw)) {
    auto text = detail::trim(line);
    if (text.empty()) continue;
    auto indent = detail::indentation(line);

    if (suppressed_indent) {
      bool leaves = (indent == 0 && text.starts_with("Caused by:")) ||
                    (indent <= *suppressed_indent && !text.starts_with("Caused by:") &&
                     !text.starts_with("..."));
      if (!leaves) continue;
      suppressed_indent.reset();
    }

    if (auto frame = parse_frame_line(text)) {
      if (segments.empty()) segments.emplace_back();
      segments.back().frames.push_back(std::move(*frame));
      any_frame = true;
      continue;
    }
    if (text.starts_with("Caused by:")) {
      segments.push_back(parse_header(detail::trim(text.substr(10))));
      continue;
    }
    if (text.starts_with("Suppressed:")) {
      suppressed_indent = indent;
      continue;
    }
    if (text.starts_with("...")) continue;
    if (segments.empty()) {
      segments.push_back(parse_header(text));
    }
    // Other lines (multi-line messages, log noise) are kept in raw_text only.
  }

  if (!any_frame) throw MalformedTrace("no stack frame found in trace");

  StackTrace trace;
  trace.exception_type = segments.back().type;
  trace.message = segments.back().message;
  trace.raw_text = std::string(raw);
  for (auto seg = segments.rbegin(); seg != segments.rend(); ++seg) {
    for (auto& frame : seg->frames) {
      frame.position = trace.frames.size();
      trace.frames.push_back(std::move(frame));
    }
  }
  return trace;
}

inline const Frame& crash_point(const StackTrace& trace) { return trace.frames.front(); }

/// `package.Class` of the frame, with inner-class suffixes ("B$1") stripped.
/// A leading '$' (JDK proxies, "$Proxy12") is part of the name, not a suffix.
inline std::string qualified_file_name(const Frame& frame) {
  const auto& cls = frame.qualified_method.class_name;
  auto dollar = cls.find('$', 1);
  return frame.qualified_method.package + '.' + cls.substr(0, dollar);
}

/// Copy of the trace with every rule applied to each frame's qualified method
/// text. Line numbers and raw_text are kept.
inline StackTrace normalize_trace(const StackTrace& trace, const NormalizationRules& rules) {
  StackTrace out = trace;
  if (rules.empty()) return out;
  for (auto& frame : out.frames) {
    std::string text = frame.qualified_method.str();
    bool changed = false;
    for (const auto& rule : rules.rules) {
      if (!std::regex_search(text, rule.compiled)) continue;
      text = std::regex_replace(text, rule.compiled, rule.replacement);
      changed = true;
    }
    if (!changed) continue;
    if (auto q = QualifiedMethod::parse(text)) frame.qualified_method = std::move(*q);
  }
  return out;
}

/// Exception type plus the flattened frame lines. Two traces are identical
/// for grouping purposes iff these texts are byte-equal.
inline std::string frame_section_text(const StackTrace& trace) {
  std::string out = trace.exception_type;
  out += '\n';
  for (const auto& frame : trace.frames) {
    out += frame.str();
    out += '\n';
  }
  return out;
}

/// `package.Class.method` per frame, top first; file names and lines dropped.
inline std::vector<std::string> method_sequence(const StackTrace& trace) {
  std::vector<std::string> out;
  out.reserve(trace.frames.size());
  for (const auto& frame : trace.frames) out.push_back(frame.qualified_method.str());
  return out;
}

}  // namespace crashlens
