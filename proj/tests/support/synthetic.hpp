#pragma once

// Seeded generator of Java-style crash corpora with planted grouping
// relations:
//   - exact repeats (Level 1),
//   - reflection accessor renumbering (Level 2),
//   - line-number drift and contiguous sub-/super-stacks with a different
//     crash point (Level 3),
//   - unrelated stacks crashing in the same file (Level 4).
// Each family owns its classes, so families never merge with each other.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "crashlens/ingest.hpp"
#include "crashlens/trace_model.hpp"

namespace crashlens::testing {

struct SyntheticFrame {
  std::string qualified;  // pkg.Class.method
  std::string location;   // File.java:12 / Unknown Source / Native Method
};

struct SyntheticTrace {
  std::string header = "java.lang.IllegalStateException";
  std::vector<SyntheticFrame> frames;
  // Optional wrapper: rendered as an outer segment with this header whose
  // frames come first in the text, followed by "Caused by:" and `frames`.
  std::vector<SyntheticFrame> wrapper_frames;
  std::string wrapper_header;

  std::string render() const {
    std::string out;
    auto emit = [&out](const std::vector<SyntheticFrame>& fs) {
      for (const auto& f : fs) out += "\tat " + f.qualified + "(" + f.location + ")\n";
    };
    if (!wrapper_frames.empty()) {
      out += wrapper_header + ": wrapped\n";
      emit(wrapper_frames);
      out += "Caused by: " + header + ": root cause\n";
      emit(frames);
      out += "\t... 3 more\n";
    } else {
      out += header + ": failure\n";
      emit(frames);
    }
    return out;
  }
};

struct SyntheticOptions {
  std::uint64_t seed = 1;
  std::size_t families = 6;          // planted Level-4 groups
  std::size_t distinct_traces = 40;  // variants across all families
  std::size_t reports = 150;
  std::string app_prefix = "app";
};

class CorpusGenerator {
 public:
  explicit CorpusGenerator(SyntheticOptions options) : opt_(std::move(options)), rng_(opt_.seed) {}

  /// Distinct trace texts, each tagged with its family.
  struct Variant {
    std::size_t family;
    std::string text;
  };

  std::vector<Variant> variants() {
    std::vector<Variant> out;
    std::vector<std::size_t> per_family(opt_.families, 1);
    for (std::size_t i = opt_.families; i < opt_.distinct_traces; ++i) {
      ++per_family[pick(opt_.families)];
    }
    for (std::size_t f = 0; f < opt_.families; ++f) {
      auto fam = family_variants(f, per_family[f]);
      for (auto& t : fam) out.push_back({f, std::move(t)});
    }
    return out;
  }

  /// One NDJSON line per report.
  std::vector<std::string> ndjson_lines() {
    auto vs = variants();
    std::vector<std::string> lines;
    lines.reserve(opt_.reports);
    for (std::size_t i = 0; i < opt_.reports; ++i) {
      const auto& v = vs[i < vs.size() ? i : pick(vs.size())];
      nlohmann::json rec;
      rec["crash_id"] = "c" + std::to_string(100000 + i);
      rec["timestamp"] = timestamp(i);
      rec["uri"] = "/app/page" + std::to_string(pick(7)) + ".jsf";
      if (pick(5) == 0) {
        rec["user"] = nullptr;
      } else {
        rec["user"] = "user" + std::to_string(pick(12));
      }
      if (pick(4) == 0) {
        rec["session_id"] = nullptr;
      } else {
        rec["session_id"] = "S" + std::to_string(pick(40));
      }
      rec["stack_trace"] = v.text;
      lines.push_back(rec.dump());
    }
    return lines;
  }

  CrashCorpus corpus() {
    auto lines = ndjson_lines();
    std::string text;
    for (const auto& l : lines) text += l + '\n';
    std::istringstream in(text);
    return load_corpus(in, TimeInterval::unbounded(), LoadOptions{true});
  }

 private:
  std::size_t pick(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_); }

  std::string timestamp(std::size_t i) {
    // Spread over 2022-03-07 .. +20 days.
    auto day = 7 + (i * 7 + pick(3)) % 20;
    char buf[40];
    std::snprintf(buf, sizeof buf, "2022-03-%02zuT%02zu:%02zu:%02zuZ", day, pick(24), pick(60),
                  pick(60));
    return buf;
  }

  std::string app_class(std::size_t family, std::size_t k) const {
    return opt_.app_prefix + ".f" + std::to_string(family) + ".svc.Class" + std::to_string(k);
  }

  SyntheticFrame app_frame(std::size_t family, std::size_t k, const std::string& method) {
    auto cls = "Class" + std::to_string(k);
    return {app_class(family, k) + "." + method, cls + ".java:" + std::to_string(10 + pick(400))};
  }

  std::vector<SyntheticFrame> framework_tail() {
    static const std::vector<SyntheticFrame> kTail = {
        {"java.lang.reflect.Method.invoke", "Method.java:498"},
        {"org.apache.catalina.core.ApplicationFilterChain.doFilter", "ApplicationFilterChain.java:166"},
        {"org.apache.catalina.core.StandardWrapperValve.invoke", "StandardWrapperValve.java:197"},
        {"java.lang.Thread.run", "Thread.java:748"},
    };
    auto n = 1 + pick(kTail.size());
    return {kTail.end() - static_cast<long>(n), kTail.end()};
  }

  SyntheticTrace base_trace(std::size_t family, std::size_t cluster) {
    SyntheticTrace t;
    static const char* kExceptions[] = {"java.lang.NullPointerException",
                                        "java.lang.IllegalStateException",
                                        "java.lang.IndexOutOfBoundsException"};
    t.header = kExceptions[pick(3)];
    // Crash point: the family's Class0; its method differs per cluster.
    t.frames.push_back(app_frame(family, 0, "op" + std::to_string(cluster)));
    auto depth = 2 + pick(4);
    for (std::size_t d = 0; d < depth; ++d) {
      auto k = 1 + pick(4);
      t.frames.push_back(app_frame(family, k, "m" + std::to_string(cluster) + "_" + std::to_string(d)));
      if (pick(6) == 0) {
        t.frames.push_back({"sun.reflect.GeneratedMethodAccessor" + std::to_string(100 + pick(9000)) + ".invoke",
                            "Unknown Source"});
      }
      if (pick(9) == 0) {
        t.frames.push_back({"sun.reflect.NativeMethodAccessorImpl.invoke0", "Native Method"});
      }
    }
    auto tail = framework_tail();
    t.frames.insert(t.frames.end(), tail.begin(), tail.end());
    return t;
  }

  SyntheticTrace mutate(const SyntheticTrace& base, std::size_t family) {
    SyntheticTrace t = base;
    switch (pick(6)) {
      case 0:  // accessor renumbering, or a fresh accessor frame
        for (auto& f : t.frames) {
          if (f.qualified.find("GeneratedMethodAccessor") != std::string::npos) {
            f.qualified = "sun.reflect.GeneratedMethodAccessor" + std::to_string(100 + pick(9000)) + ".invoke";
            return t;
          }
        }
        t.frames.insert(t.frames.begin() + 1,
                        {"sun.reflect.GeneratedMethodAccessor" + std::to_string(100 + pick(9000)) + ".invoke",
                         "Unknown Source"});
        return t;
      case 1: {  // line drift
        auto& f = t.frames[pick(t.frames.size())];
        if (f.location.find(".java:") != std::string::npos) {
          f.location = f.location.substr(0, f.location.find(':') + 1) + std::to_string(1 + pick(900));
        }
        return t;
      }
      case 2:  // extra helper frame on top: new crash-point file, contains base
        t.frames.insert(t.frames.begin(),
                        {opt_.app_prefix + ".f" + std::to_string(family) + ".util.Helper" +
                             std::to_string(pick(3)) + ".check",
                         "Helper.java:" + std::to_string(5 + pick(50))});
        return t;
      case 3:  // truncated bottom: contiguous sub-stack
        if (t.frames.size() > 3) t.frames.resize(t.frames.size() - 1 - pick(2));
        return t;
      case 4:  // wrap in a chained exception
        t.wrapper_header = "javax.faces.FacesException";
        t.wrapper_frames = {{"javax.faces.webapp.FacesServlet.service", "FacesServlet.java:" + std::to_string(200 + pick(50))}};
        return t;
      default:  // inner-class crash point, same file
        t.frames.front().qualified = app_class(family, 0) + "$" + std::to_string(1 + pick(3)) + ".run";
        return t;
    }
  }

  std::vector<std::string> family_variants(std::size_t family, std::size_t count) {
    std::vector<SyntheticTrace> traces;
    std::vector<std::string> texts;
    std::size_t cluster = 0;
    std::size_t guard = 0;
    while (texts.size() < count && guard++ < count * 50) {
      SyntheticTrace t;
      if (traces.empty() || pick(3) == 0) {
        t = base_trace(family, cluster++);
      } else {
        t = mutate(traces[pick(traces.size())], family);
      }
      auto text = t.render();
      if (std::find(texts.begin(), texts.end(), text) != texts.end()) continue;
      traces.push_back(std::move(t));
      texts.push_back(std::move(text));
    }
    return texts;
  }

  SyntheticOptions opt_;
  std::mt19937_64 rng_;
};

}  // namespace crashlens::testing
