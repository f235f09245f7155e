#pragma once

#include <algorithm>
#include <compare>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "crashlens/config.hpp"
#include "crashlens/error.hpp"
#include "crashlens/ingest.hpp"
#include "crashlens/trace_model.hpp"
#include "crashlens/union_find.hpp"

namespace crashlens {

/// Derived from the lexicographically least member crash_id, so it survives
/// re-runs and input reordering.
struct GroupId {
  std::string value;

  static GroupId from_least_member(std::string_view crash_id) {
    return GroupId{"G-" + std::string(crash_id)};
  }
  friend auto operator<=>(const GroupId&, const GroupId&) = default;
};

enum class SignatureKind {
  kStackTrace = 1,        // frame-section text
  kNormalizedFrames = 2,  // frame-section text after normalization
  kMethodSequence = 3,    // newline-joined package.Class.method list
  kTopFrameFile = 4,      // qualified file name of the crash point
};

inline std::string_view signature_kind_name(int level) {
  switch (level) {
    case 1: return "stack_trace";
    case 2: return "normalized_frames";
    case 3: return "method_sequences";
    case 4: return "top_frame_file";
  }
  throw InvalidLevel("grouping level must be 1..4, got " + std::to_string(level));
}

struct CrashGroup {
  GroupId id;
  int level = 1;
  std::vector<std::string> members;  // sorted crash_ids
  // Distinct member signatures of this level's kind, sorted. A merged group
  // matches a trace when any element does.
  std::vector<std::string> signature;
  // Level 4 only: the Level-3 method sequences of the members, so that
  // recurrence checks remain cumulative.
  std::vector<std::string> method_sequences;
  Instant first_seen;
  Instant last_seen;

  std::size_t size() const { return members.size(); }
};

struct LevelPartition {
  int level = 1;
  std::vector<CrashGroup> groups;  // ordered by id

  const CrashGroup* find(const GroupId& id) const {
    auto it = std::lower_bound(groups.begin(), groups.end(), id,
                               [](const CrashGroup& g, const GroupId& v) { return g.id < v; });
    return it != groups.end() && it->id == id ? &*it : nullptr;
  }
  std::size_t total_members() const {
    std::size_t n = 0;
    for (const auto& g : groups) n += g.size();
    return n;
  }
};

/// Grouping keys of one trace.
struct TraceKeys {
  std::string identity;
  std::string normalized;
  std::vector<std::string> methods;  // normalized, line numbers dropped
  std::string crash_file;            // of the normalized crash point

  std::string method_text() const {
    std::string out;
    for (const auto& m : methods) {
      if (!out.empty()) out += '\n';
      out += m;
    }
    return out;
  }
};

inline TraceKeys compute_trace_keys(const StackTrace& trace, const NormalizationRules& rules) {
  TraceKeys keys;
  keys.identity = frame_section_text(trace);
  auto normalized = normalize_trace(trace, rules);
  keys.normalized = frame_section_text(normalized);
  keys.methods = method_sequence(normalized);
  keys.crash_file = qualified_file_name(crash_point(normalized));
  return keys;
}

/// True when `needle` occurs as a contiguous run inside `haystack`.
template <typename T>
bool contains_contiguous(const std::vector<T>& haystack, const std::vector<T>& needle) {
  if (needle.size() > haystack.size()) return false;
  return std::search(haystack.begin(), haystack.end(), needle.begin(), needle.end()) !=
         haystack.end();
}

namespace detail {

inline std::vector<std::string> split_method_text(std::string_view text) {
  std::vector<std::string> out;
  for (auto part : split_lines(text)) out.emplace_back(part);
  return out;
}

/// Per-corpus key tables shared by the four levels. Keys are computed once
/// per distinct trace text.
class GroupingContext {
 public:
  GroupingContext(const CrashCorpus& corpus, const NormalizationRules& rules)
      : corpus_(corpus), index_(index_by_id(corpus)) {
    std::unordered_map<const StackTrace*, std::size_t> by_pointer;
    std::unordered_map<std::string, std::size_t> by_identity;
    report_key_.reserve(corpus.reports.size());
    for (const auto& report : corpus.reports) {
      const StackTrace* trace = report.trace_ptr.get();
      auto [it, inserted] = by_pointer.try_emplace(trace, 0);
      if (inserted) {
        auto identity = frame_section_text(*trace);
        auto found = by_identity.find(identity);
        if (found == by_identity.end()) {
          found = by_identity.emplace(std::move(identity), keys_.size()).first;
          keys_.push_back(compute_trace_keys(*trace, rules));
        }
        it->second = found->second;
      }
      report_key_.push_back(it->second);
    }
  }

  const CrashCorpus& corpus() const { return corpus_; }
  std::size_t key_count() const { return keys_.size(); }
  const TraceKeys& keys(std::size_t key) const { return keys_[key]; }
  std::size_t report_key(std::size_t report) const { return report_key_[report]; }

  std::size_t report_index(const std::string& crash_id) const {
    auto it = index_.find(crash_id);
    if (it == index_.end()) {
      throw FormatFailure("crash_id '" + crash_id + "' is not in the corpus");
    }
    return it->second;
  }

  /// Builds a partition whose groups are the classes of `label` (one label
  /// per report; reports with no label are absent).
  LevelPartition materialize(int level, const std::vector<std::size_t>& label) const {
    constexpr auto kNone = static_cast<std::size_t>(-1);
    std::unordered_map<std::size_t, std::vector<std::size_t>> classes;
    for (std::size_t i = 0; i < label.size(); ++i) {
      if (label[i] != kNone) classes[label[i]].push_back(i);
    }

    LevelPartition partition;
    partition.level = level;
    partition.groups.reserve(classes.size());
    for (auto& [_, reports] : classes) {
      CrashGroup g;
      g.level = level;
      g.members.reserve(reports.size());
      std::vector<std::size_t> distinct_keys;
      g.first_seen = corpus_.reports[reports.front()].timestamp;
      g.last_seen = g.first_seen;
      for (auto r : reports) {
        const auto& report = corpus_.reports[r];
        g.members.push_back(report.crash_id);
        g.first_seen = std::min(g.first_seen, report.timestamp);
        g.last_seen = std::max(g.last_seen, report.timestamp);
        distinct_keys.push_back(report_key_[r]);
      }
      std::sort(g.members.begin(), g.members.end());
      g.id = GroupId::from_least_member(g.members.front());

      std::sort(distinct_keys.begin(), distinct_keys.end());
      distinct_keys.erase(std::unique(distinct_keys.begin(), distinct_keys.end()),
                          distinct_keys.end());
      for (auto k : distinct_keys) {
        const auto& keys = keys_[k];
        switch (level) {
          case 1: g.signature.push_back(keys.identity); break;
          case 2: g.signature.push_back(keys.normalized); break;
          case 3: g.signature.push_back(keys.method_text()); break;
          case 4:
            g.signature.push_back(keys.crash_file);
            g.method_sequences.push_back(keys.method_text());
            break;
        }
      }
      sort_unique(g.signature);
      sort_unique(g.method_sequences);
      partition.groups.push_back(std::move(g));
    }
    std::sort(partition.groups.begin(), partition.groups.end(),
              [](const CrashGroup& a, const CrashGroup& b) { return a.id < b.id; });
    return partition;
  }

  /// Labels every member of `groups[i]` with the union-find root of i.
  std::vector<std::size_t> labels_from(const LevelPartition& previous, DisjointSets& sets) const {
    std::vector<std::size_t> label(corpus_.reports.size(), static_cast<std::size_t>(-1));
    for (std::size_t g = 0; g < previous.groups.size(); ++g) {
      auto root = sets.find(g);
      for (const auto& id : previous.groups[g].members) label[report_index(id)] = root;
    }
    return label;
  }

  /// Distinct trace keys present in each group.
  std::vector<std::vector<std::size_t>> group_keys(const LevelPartition& partition) const {
    std::vector<std::vector<std::size_t>> out(partition.groups.size());
    for (std::size_t g = 0; g < partition.groups.size(); ++g) {
      auto& ks = out[g];
      for (const auto& id : partition.groups[g].members) {
        ks.push_back(report_key_[report_index(id)]);
      }
      sort_unique(ks);
    }
    return out;
  }

  LevelPartition level1() const {
    std::vector<std::size_t> label(report_key_.begin(), report_key_.end());
    return materialize(1, label);
  }

  LevelPartition level2(const LevelPartition& p1) const {
    DisjointSets sets(p1.groups.size());
    auto keys_of = group_keys(p1);
    std::unordered_map<std::string_view, std::size_t> first_owner;
    for (std::size_t g = 0; g < keys_of.size(); ++g) {
      for (auto k : keys_of[g]) {
        auto [it, inserted] = first_owner.try_emplace(keys_[k].normalized, g);
        if (!inserted) sets.unite(it->second, g);
      }
    }
    return materialize(2, labels_from(p1, sets));
  }

  LevelPartition level3(const LevelPartition& p2) const {
    DisjointSets sets(p2.groups.size());
    auto keys_of = group_keys(p2);

    // Intern method names and dedupe whole sequences.
    std::unordered_map<std::string_view, int> method_ids;
    std::vector<std::vector<int>> sequences;
    std::vector<std::size_t> owner;  // first group holding each sequence
    std::map<std::vector<int>, std::size_t> sequence_ids;
    for (std::size_t g = 0; g < keys_of.size(); ++g) {
      for (auto k : keys_of[g]) {
        std::vector<int> seq;
        seq.reserve(keys_[k].methods.size());
        for (const auto& m : keys_[k].methods) {
          auto [it, _] = method_ids.try_emplace(m, static_cast<int>(method_ids.size()));
          seq.push_back(it->second);
        }
        auto [it, inserted] = sequence_ids.try_emplace(std::move(seq), sequences.size());
        if (inserted) {
          sequences.push_back(it->first);
          owner.push_back(g);
        } else {
          sets.unite(owner[it->second], g);
        }
      }
    }

    // Every occurrence of every method, so a needle is only compared against
    // haystacks containing its rarest method at a compatible offset.
    std::vector<std::vector<std::pair<std::size_t, std::size_t>>> postings(method_ids.size());
    for (std::size_t s = 0; s < sequences.size(); ++s) {
      for (std::size_t i = 0; i < sequences[s].size(); ++i) {
        postings[sequences[s][i]].emplace_back(s, i);
      }
    }
    for (std::size_t a = 0; a < sequences.size(); ++a) {
      const auto& needle = sequences[a];
      std::size_t anchor = 0;
      for (std::size_t j = 1; j < needle.size(); ++j) {
        if (postings[needle[j]].size() < postings[needle[anchor]].size()) anchor = j;
      }
      for (auto [b, i] : postings[needle[anchor]]) {
        if (b == a || i < anchor) continue;
        const auto& hay = sequences[b];
        auto start = i - anchor;
        if (start + needle.size() > hay.size()) continue;
        if (std::equal(needle.begin(), needle.end(), hay.begin() + static_cast<long>(start))) {
          sets.unite(owner[a], owner[b]);
        }
      }
    }
    return materialize(3, labels_from(p2, sets));
  }

  LevelPartition level4(const LevelPartition& p3) const {
    DisjointSets sets(p3.groups.size());
    auto keys_of = group_keys(p3);
    std::unordered_map<std::string_view, std::size_t> first_owner;
    for (std::size_t g = 0; g < keys_of.size(); ++g) {
      for (auto k : keys_of[g]) {
        auto [it, inserted] = first_owner.try_emplace(keys_[k].crash_file, g);
        if (!inserted) sets.unite(it->second, g);
      }
    }
    return materialize(4, labels_from(p3, sets));
  }

 private:
  template <typename T>
  static void sort_unique(std::vector<T>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  }

  const CrashCorpus& corpus_;
  CorpusIndex index_;
  std::vector<TraceKeys> keys_;
  std::vector<std::size_t> report_key_;
};

}  // namespace detail

/// Reports whose exception type and frame lines are byte-identical.
inline LevelPartition group_level1(const CrashCorpus& corpus) {
  return detail::GroupingContext(corpus, NormalizationRules{}).level1();
}

/// Merges groups whose normalized frame sequences (lines kept) are equal.
inline LevelPartition group_level2(const CrashCorpus& corpus, const LevelPartition& p1,
                                   const NormalizationRules& rules) {
  return detail::GroupingContext(corpus, rules).level2(p1);
}

/// Merges groups when one member's method sequence is a contiguous run of
/// another's, closed transitively.
inline LevelPartition group_level3(const CrashCorpus& corpus, const LevelPartition& p2,
                                   const NormalizationRules& rules) {
  return detail::GroupingContext(corpus, rules).level3(p2);
}

/// Merges groups sharing a crash-point file.
inline LevelPartition group_level4(const CrashCorpus& corpus, const LevelPartition& p3,
                                   const NormalizationRules& rules) {
  return detail::GroupingContext(corpus, rules).level4(p3);
}

/// Applies levels 1..level cumulatively.
inline LevelPartition group(const CrashCorpus& corpus, int level, const AppConfig& config) {
  if (level < 1 || level > 4) {
    throw InvalidLevel("grouping level must be 1..4, got " + std::to_string(level));
  }
  detail::GroupingContext context(corpus, config.normalization_rules);
  auto partition = context.level1();
  if (level >= 2) partition = context.level2(partition);
  if (level >= 3) partition = context.level3(partition);
  if (level >= 4) partition = context.level4(partition);
  return partition;
}

/// Would `report` have joined `closed` under the group's level predicate?
/// Levels are cumulative; Level-3 containment implies the Level-1 and Level-2
/// relations, so a Level-4 group also checks its stored method sequences.
inline bool match_report_to_group(const CrashReport& report, const CrashGroup& closed,
                                  const AppConfig& config) {
  auto keys = compute_trace_keys(report.trace(), config.normalization_rules);
  auto in_signature = [&](const std::string& value) {
    return std::binary_search(closed.signature.begin(), closed.signature.end(), value);
  };
  auto related_sequence = [&](const std::vector<std::string>& texts) {
    for (const auto& text : texts) {
      auto seq = detail::split_method_text(text);
      if (contains_contiguous(seq, keys.methods) || contains_contiguous(keys.methods, seq)) {
        return true;
      }
    }
    return false;
  };
  switch (closed.level) {
    case 1: return in_signature(keys.identity);
    case 2: return in_signature(keys.normalized);
    case 3: return related_sequence(closed.signature);
    case 4: return in_signature(keys.crash_file) || related_sequence(closed.method_sequences);
  }
  throw InvalidLevel("group " + closed.id.value + " has invalid level " +
                     std::to_string(closed.level));
}

}  // namespace crashlens
