#pragma once

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "crashlens/config.hpp"
#include "crashlens/grouping.hpp"
#include "crashlens/ingest.hpp"
#include "crashlens/ranking.hpp"
#include "crashlens/time.hpp"

namespace crashlens {

/// One row of the weekly group spreadsheet.
struct GroupSummary {
  GroupId group_id;
  Instant first_seen;
  Instant last_seen;
  std::size_t crash_count = 0;
  std::size_t affected_uri_count = 0;
  std::size_t affected_user_count = 0;  // distinct non-null users
  std::vector<std::string> system_classes;  // sorted application files
};

struct UserCount {
  std::string user;
  std::size_t count = 0;
};

struct UriTally {
  std::string uri;
  std::size_t count = 0;
  std::vector<UserCount> top_users;
};

struct IssuePayload {
  GroupId group_id;
  int level = 0;
  TimeInterval window;
  FileRanking top_files;
  std::vector<MethodRank> top_methods;
  Instant first_seen;
  Instant last_seen;
  std::size_t crash_count = 0;
  std::vector<UriTally> top_uris;
  std::vector<std::string> trace_samples;
  std::vector<std::string> crash_id_samples;
  std::vector<std::string> session_samples;
  std::string instructions;
};

inline constexpr std::string_view kDeveloperInstructions =
    "1. Do not combine code refactoring with the bug fix in the same commit.\n"
    "2. Reference this task in the commit message that fixes the bug.\n"
    "3. Fill out the feedback survey after closing this task.\n";

namespace detail {

inline std::vector<std::size_t> member_indices(const CrashGroup& group, const CorpusIndex& index) {
  std::vector<std::size_t> out;
  out.reserve(group.members.size());
  for (const auto& id : group.members) {
    auto it = index.find(id);
    if (it == index.end()) throw FormatFailure("crash_id '" + id + "' is not in the corpus");
    out.push_back(it->second);
  }
  return out;
}

inline std::vector<std::string> application_files(const StackTrace& trace,
                                                  const AppConfig& config) {
  std::vector<std::string> out;
  for (const auto& frame : trace.frames) {
    if (frame.has_source_file() && config.is_app_package(frame.qualified_method.package)) {
      out.push_back(qualified_file_name(frame));
    }
  }
  return out;
}

// Descending count, then ascending name.
template <typename T>
void sort_tally(std::vector<T>& v, std::string T::*name) {
  std::sort(v.begin(), v.end(), [name](const T& a, const T& b) {
    if (a.count != b.count) return a.count > b.count;
    return a.*name < b.*name;
  });
}

inline std::string fixed(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace detail

/// One summary per group, largest groups first (ties by id).
inline std::vector<GroupSummary> summarize_groups(const LevelPartition& partition,
                                                  const CrashCorpus& corpus,
                                                  const AppConfig& config) {
  auto index = index_by_id(corpus);
  std::unordered_map<const StackTrace*, std::vector<std::string>> files_of;
  std::vector<GroupSummary> out;
  out.reserve(partition.groups.size());
  for (const auto& group : partition.groups) {
    GroupSummary s;
    s.group_id = group.id;
    s.crash_count = group.size();
    std::set<std::string_view> uris;
    std::set<std::string_view> users;
    std::set<std::string> classes;
    bool first = true;
    for (auto i : detail::member_indices(group, index)) {
      const auto& report = corpus.reports[i];
      if (first || report.timestamp < s.first_seen) s.first_seen = report.timestamp;
      if (first || report.timestamp > s.last_seen) s.last_seen = report.timestamp;
      first = false;
      uris.insert(report.uri);
      if (report.user) users.insert(*report.user);
      auto [it, inserted] = files_of.try_emplace(report.trace_ptr.get());
      if (inserted) it->second = detail::application_files(report.trace(), config);
      classes.insert(it->second.begin(), it->second.end());
    }
    s.affected_uri_count = uris.size();
    s.affected_user_count = users.size();
    s.system_classes.assign(classes.begin(), classes.end());
    out.push_back(std::move(s));
  }
  std::stable_sort(out.begin(), out.end(), [](const GroupSummary& a, const GroupSummary& b) {
    if (a.crash_count != b.crash_count) return a.crash_count > b.crash_count;
    return a.group_id < b.group_id;
  });
  return out;
}

/// Collects the issue contents for one group. Samples are the earliest
/// members (ties by crash_id), so payloads are reproducible.
inline IssuePayload build_issue(const CrashGroup& group, const FileRanking& ranking,
                                const std::vector<MethodRank>& methods,
                                const CrashCorpus& corpus, const AppConfig& config) {
  IssuePayload p;
  p.group_id = group.id;
  p.level = group.level;
  p.window = corpus.window();
  p.top_files = ranking;
  p.top_methods = methods;
  p.first_seen = group.first_seen;
  p.last_seen = group.last_seen;
  p.crash_count = group.size();
  p.instructions = std::string(kDeveloperInstructions);

  auto members = detail::member_indices(group, index_by_id(corpus));
  std::sort(members.begin(), members.end(), [&](std::size_t a, std::size_t b) {
    const auto& ra = corpus.reports[a];
    const auto& rb = corpus.reports[b];
    if (ra.timestamp != rb.timestamp) return ra.timestamp < rb.timestamp;
    return ra.crash_id < rb.crash_id;
  });

  std::map<std::string, std::pair<std::size_t, std::map<std::string, std::size_t>>> by_uri;
  for (auto i : members) {
    const auto& report = corpus.reports[i];
    auto& [count, users] = by_uri[report.uri];
    ++count;
    if (report.user) ++users[*report.user];
  }
  for (const auto& [uri, entry] : by_uri) {
    UriTally tally{uri, entry.first, {}};
    for (const auto& [user, count] : entry.second) tally.top_users.push_back({user, count});
    detail::sort_tally(tally.top_users, &UserCount::user);
    if (tally.top_users.size() > static_cast<std::size_t>(config.top_n_users_per_uri)) {
      tally.top_users.resize(static_cast<std::size_t>(config.top_n_users_per_uri));
    }
    p.top_uris.push_back(std::move(tally));
  }
  detail::sort_tally(p.top_uris, &UriTally::uri);
  if (p.top_uris.size() > static_cast<std::size_t>(config.top_n_uris)) {
    p.top_uris.resize(static_cast<std::size_t>(config.top_n_uris));
  }

  std::set<std::string_view> seen_traces;
  std::set<std::string_view> seen_sessions;
  const auto trace_limit = static_cast<std::size_t>(config.sample_trace_count);
  const auto id_limit = static_cast<std::size_t>(config.sample_crash_id_count);
  for (auto i : members) {
    const auto& report = corpus.reports[i];
    if (p.trace_samples.size() < trace_limit &&
        seen_traces.insert(report.trace().raw_text).second) {
      p.trace_samples.push_back(report.trace().raw_text);
    }
    if (p.crash_id_samples.size() < id_limit) p.crash_id_samples.push_back(report.crash_id);
    if (report.session_id && p.session_samples.size() < id_limit &&
        seen_sessions.insert(*report.session_id).second) {
      p.session_samples.push_back(*report.session_id);
    }
  }
  return p;
}

/// Deterministic Markdown rendering with a fixed section order.
inline std::string render_issue_markdown(const IssuePayload& p) {
  constexpr std::string_view kNone = "_none recorded_\n";
  std::string out;
  auto line = [&out](std::string_view text) {
    out += text;
    out += '\n';
  };

  line("# Crash group " + p.group_id.value);
  line("");
  line("## Summary");
  line("");
  line("- Group: " + p.group_id.value);
  line("- Grouping level: " + std::to_string(p.level));
  line("- Window: " + format_interval(p.window));
  line("- First seen: " + format_timestamp(p.first_seen));
  line("- Last seen: " + format_timestamp(p.last_seen));
  line("- Crash reports: " + std::to_string(p.crash_count));
  line("");

  line("## Suspicious Files");
  line("");
  if (p.top_files.entries.empty()) {
    out += kNone;
  } else {
    line("| Rank | File | Score | IAD | IBF | FF |");
    line("|---:|---|---:|---:|---:|---:|");
    std::size_t rank = 1;
    for (const auto& e : p.top_files.entries) {
      line("| " + std::to_string(rank++) + " | " + e.file + " | " + detail::fixed(e.score) +
           " | " + detail::fixed(e.iad) + " | " + detail::fixed(e.ibf) + " | " +
           detail::fixed(e.ff) + " |");
    }
  }
  line("");

  line("## Suspicious Methods");
  line("");
  bool any_method = false;
  for (const auto& m : p.top_methods) {
    if (m.methods.empty()) continue;
    any_method = true;
    line("### " + m.file);
    line("");
    for (const auto& c : m.methods) {
      line("- " + c.method + " (" + std::to_string(c.count) +
           (c.count == 1 ? " trace)" : " traces)"));
    }
    line("");
  }
  if (!any_method) {
    out += kNone;
    line("");
  }

  line("## Affected URIs/Users");
  line("");
  if (p.top_uris.empty()) {
    out += kNone;
  } else {
    for (const auto& u : p.top_uris) {
      std::string users;
      for (const auto& user : u.top_users) {
        if (!users.empty()) users += ", ";
        users += user.user + " (" + std::to_string(user.count) + ")";
      }
      line("- " + u.uri + " (" + std::to_string(u.count) + "): " +
           (users.empty() ? std::string("no signed-in users") : users));
    }
  }
  line("");

  line("## Samples");
  line("");
  line("### Stack traces");
  line("");
  if (p.trace_samples.empty()) {
    out += kNone;
    line("");
  }
  for (const auto& trace : p.trace_samples) {
    std::string fence = "```";
    while (trace.find(fence) != std::string::npos) fence += '`';
    line(fence + "text");
    out += trace;
    if (!trace.empty() && trace.back() != '\n') out += '\n';
    line(fence);
    line("");
  }
  auto list_section = [&](std::string_view title, const std::vector<std::string>& items) {
    line(std::string("### ") + std::string(title));
    line("");
    if (items.empty()) out += kNone;
    for (const auto& item : items) line("- " + item);
    line("");
  };
  list_section("Crash report IDs", p.crash_id_samples);
  list_section("Sessions", p.session_samples);

  line("## Instructions");
  line("");
  out += p.instructions.empty() ? std::string(kNone) : p.instructions;
  return out;
}

namespace detail {

inline std::string csv_field(std::string_view value) {
  if (value.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(value);
  std::string out = "\"";
  for (char c : value) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace detail

inline std::string export_spreadsheet_csv(const std::vector<GroupSummary>& summaries) {
  std::string out = "group_id,first_seen,last_seen,crash_count,uri_count,user_count,system_classes\n";
  for (const auto& s : summaries) {
    std::string classes;
    for (const auto& c : s.system_classes) {
      if (!classes.empty()) classes += ';';
      classes += c;
    }
    out += detail::csv_field(s.group_id.value) + ',' + format_timestamp(s.first_seen) + ',' +
           format_timestamp(s.last_seen) + ',' + std::to_string(s.crash_count) + ',' +
           std::to_string(s.affected_uri_count) + ',' + std::to_string(s.affected_user_count) +
           ',' + detail::csv_field(classes) + '\n';
  }
  return out;
}

}  // namespace crashlens
