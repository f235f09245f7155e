#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "crashlens/config.hpp"
#include "crashlens/error.hpp"
#include "crashlens/grouping.hpp"
#include "crashlens/ingest.hpp"
#include "crashlens/trace_model.hpp"

namespace crashlens {

/// Score(f) = IAD(f,B) * IBF(f) * FF(f,B).
///
///   FF  = traces of B containing f / |B|
///   IAD = 1 / mean over those traces of (1 + closest position of f)
///   IBF = ln(1 + groups in the partition / groups containing f)
struct FileScore {
  std::string file;
  double iad = 0.0;
  double ibf = 0.0;
  double ff = 0.0;
  double score = 0.0;
  double mean_distance = 0.0;  // tie-break, smaller first
};

struct FileRanking {
  GroupId group_id;
  std::vector<FileScore> entries;  // descending score, truncated to top_n_files
  std::size_t candidates_considered = 0;
};

struct MethodCount {
  std::string method;
  std::size_t count = 0;  // member traces with a frame of this method
  std::size_t min_position = 0;

  friend bool operator==(const MethodCount&, const MethodCount&) = default;
};

struct MethodRank {
  std::string file;
  std::vector<MethodCount> methods;

  friend bool operator==(const MethodRank&, const MethodRank&) = default;
};

/// Score order: higher score, then smaller mean distance, then file name.
inline bool ranks_before(const FileScore& a, const FileScore& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.mean_distance != b.mean_distance) return a.mean_distance < b.mean_distance;
  return a.file < b.file;
}

/// Source files (`.java` frames only) of one trace with the closest position
/// of each, plus the methods seen per file.
struct TraceProfile {
  struct FileHit {
    std::string file;
    std::size_t min_position;
  };
  struct MethodHit {
    std::string file;
    std::string method;
    std::size_t min_position;
  };
  std::vector<FileHit> files;      // sorted by file
  std::vector<MethodHit> methods;  // sorted by (file, method)

  explicit TraceProfile(const StackTrace& trace) {
    std::map<std::string, std::size_t> file_pos;
    std::map<std::pair<std::string, std::string>, std::size_t> method_pos;
    for (const auto& frame : trace.frames) {
      if (!frame.has_source_file()) continue;
      auto file = qualified_file_name(frame);
      file_pos.try_emplace(file, frame.position);
      method_pos.try_emplace({std::move(file), frame.qualified_method.method}, frame.position);
    }
    for (auto& [file, pos] : file_pos) files.push_back({file, pos});
    for (auto& [key, pos] : method_pos) methods.push_back({key.first, key.second, pos});
  }

  const FileHit* find(const std::string& file) const {
    auto it = std::lower_bound(files.begin(), files.end(), file,
                               [](const FileHit& h, const std::string& f) { return h.file < f; });
    return it != files.end() && it->file == file ? &*it : nullptr;
  }
};

/// How many groups of a partition contain each source file.
struct BucketTable {
  std::size_t group_count = 0;
  std::unordered_map<std::string, std::size_t> groups_containing;
};

/// Per-corpus ranking state: trace profiles and the bucket table are built
/// once and shared read-only by every group ranked against the partition.
class FileRanker {
 public:
  FileRanker(const LevelPartition& partition, const CrashCorpus& corpus, const AppConfig& config)
      : config_(config), index_(index_by_id(corpus)) {
    std::unordered_map<const StackTrace*, std::size_t> slots;
    report_slot_.reserve(corpus.reports.size());
    for (const auto& report : corpus.reports) {
      auto [it, inserted] = slots.try_emplace(report.trace_ptr.get(), profiles_.size());
      if (inserted) profiles_.emplace_back(report.trace());
      report_slot_.push_back(it->second);
    }
    buckets_.group_count = partition.groups.size();
    for (const auto& group : partition.groups) {
      std::unordered_set<std::string_view> files;
      for (const auto& [profile, _] : member_profiles(group)) {
        for (const auto& hit : profile->files) files.insert(hit.file);
      }
      for (auto f : files) ++buckets_.groups_containing[std::string(f)];
    }
  }

  const BucketTable& buckets() const { return buckets_; }

  /// Distinct member profiles of a group with their multiplicity, in a
  /// deterministic order.
  std::vector<std::pair<const TraceProfile*, std::size_t>> member_profiles(
      const CrashGroup& group) const {
    std::map<std::size_t, std::size_t> multiplicity;  // profile slot -> count
    for (const auto& id : group.members) {
      auto it = index_.find(id);
      if (it == index_.end()) throw FormatFailure("crash_id '" + id + "' is not in the corpus");
      ++multiplicity[report_slot_[it->second]];
    }
    std::vector<std::pair<const TraceProfile*, std::size_t>> out;
    out.reserve(multiplicity.size());
    for (auto [slot, count] : multiplicity) out.emplace_back(&profiles_[slot], count);
    return out;
  }

  /// Scores every application file seen in the group. Throws NoCandidates
  /// when the group's traces hold no application frame.
  FileRanking rank(const CrashGroup& group) const {
    struct Tally {
      std::size_t traces = 0;
      std::size_t distance_sum = 0;
    };
    std::map<std::string, Tally> tallies;
    for (const auto& [profile, count] : member_profiles(group)) {
      for (const auto& hit : profile->files) {
        auto package_end = hit.file.rfind('.');
        if (!config_.is_app_package(std::string_view(hit.file).substr(0, package_end))) continue;
        auto& t = tallies[hit.file];
        t.traces += count;
        t.distance_sum += count * (1 + hit.min_position);
      }
    }
    if (tallies.empty()) {
      throw NoCandidates("group " + group.id.value + " has no application frames");
    }

    FileRanking ranking;
    ranking.group_id = group.id;
    ranking.candidates_considered = tallies.size();
    const auto group_size = static_cast<double>(group.size());
    for (const auto& [file, t] : tallies) {
      FileScore s;
      s.file = file;
      s.mean_distance = static_cast<double>(t.distance_sum) / static_cast<double>(t.traces);
      s.iad = 1.0 / s.mean_distance;
      s.ff = static_cast<double>(t.traces) / group_size;
      s.ibf = ibf(file);
      s.score = s.iad * s.ibf * s.ff;
      ranking.entries.push_back(std::move(s));
    }
    std::sort(ranking.entries.begin(), ranking.entries.end(), ranks_before);
    if (ranking.entries.size() > static_cast<std::size_t>(config_.top_n_files)) {
      ranking.entries.resize(static_cast<std::size_t>(config_.top_n_files));
    }
    return ranking;
  }

  /// Methods of each ranked file, most frequent first.
  std::vector<MethodRank> rank_methods(const FileRanking& ranking, const CrashGroup& group) const {
    auto profiles = member_profiles(group);
    std::vector<MethodRank> out;
    for (const auto& entry : ranking.entries) {
      std::map<std::string, MethodCount> counts;
      for (const auto& [profile, count] : profiles) {
        auto first = std::lower_bound(
            profile->methods.begin(), profile->methods.end(), entry.file,
            [](const TraceProfile::MethodHit& h, const std::string& f) { return h.file < f; });
        for (auto it = first; it != profile->methods.end() && it->file == entry.file; ++it) {
          auto [slot, _] =
              counts.try_emplace(it->method, MethodCount{it->method, 0, it->min_position});
          slot->second.count += count;
          slot->second.min_position = std::min(slot->second.min_position, it->min_position);
        }
      }
      MethodRank rank{entry.file, {}};
      for (auto& [_, c] : counts) rank.methods.push_back(std::move(c));
      std::sort(rank.methods.begin(), rank.methods.end(),
                [](const MethodCount& a, const MethodCount& b) {
                  if (a.count != b.count) return a.count > b.count;
                  if (a.min_position != b.min_position) return a.min_position < b.min_position;
                  return a.method < b.method;
                });
      out.push_back(std::move(rank));
    }
    return out;
  }

  double ibf(const std::string& file) const {
    auto it = buckets_.groups_containing.find(file);
    if (it == buckets_.groups_containing.end() || it->second == 0) {
      throw FileUnseen("file '" + file + "' occurs in no group");
    }
    return std::log(1.0 + static_cast<double>(buckets_.group_count) /
                              static_cast<double>(it->second));
  }

 private:
  const AppConfig& config_;
  CorpusIndex index_;
  BucketTable buckets_;
  std::vector<TraceProfile> profiles_;  // one per distinct trace object
  std::vector<std::size_t> report_slot_;
};

inline BucketTable build_bucket_table(const LevelPartition& partition, const CrashCorpus& corpus) {
  AppConfig config;
  return FileRanker(partition, corpus, config).buckets();
}

/// IBF against a prebuilt table. Throws FileUnseen when no group holds f.
inline double inverse_bucket_frequency(const std::string& file, const BucketTable& table) {
  auto it = table.groups_containing.find(file);
  if (it == table.groups_containing.end() || it->second == 0) {
    throw FileUnseen("file '" + file + "' occurs in no group");
  }
  return std::log(1.0 + static_cast<double>(table.group_count) /
                            static_cast<double>(it->second));
}

inline double inverse_bucket_frequency(const std::string& file, const LevelPartition& partition,
                                       const CrashCorpus& corpus) {
  return inverse_bucket_frequency(file, build_bucket_table(partition, corpus));
}

/// Fraction of the group's traces with at least one frame of `file`.
inline double file_frequency(const std::string& file, const CrashGroup& group,
                             const CrashCorpus& corpus) {
  auto index = index_by_id(corpus);
  std::size_t hits = 0;
  for (const auto& id : group.members) {
    TraceProfile profile(corpus.reports.at(index.at(id)).trace());
    if (profile.find(file)) ++hits;
  }
  return group.members.empty() ? 0.0
                               : static_cast<double>(hits) / static_cast<double>(group.size());
}

/// 1 / mean(1 + closest position of `file`) over the traces containing it.
/// Throws FileUnseen when no member trace contains the file.
inline double inverse_avg_distance(const std::string& file, const CrashGroup& group,
                                   const CrashCorpus& corpus) {
  auto index = index_by_id(corpus);
  std::size_t traces = 0;
  std::size_t distance_sum = 0;
  for (const auto& id : group.members) {
    TraceProfile profile(corpus.reports.at(index.at(id)).trace());
    if (auto hit = profile.find(file)) {
      ++traces;
      distance_sum += 1 + hit->min_position;
    }
  }
  if (traces == 0) throw FileUnseen("file '" + file + "' not in group " + group.id.value);
  return 1.0 / (static_cast<double>(distance_sum) / static_cast<double>(traces));
}

inline FileRanking rank_files(const CrashGroup& group, const LevelPartition& all_groups,
                              const CrashCorpus& corpus, const AppConfig& config) {
  return FileRanker(all_groups, corpus, config).rank(group);
}

inline std::vector<MethodRank> rank_methods(const FileRanking& ranking, const CrashGroup& group,
                                            const CrashCorpus& corpus) {
  LevelPartition none;
  AppConfig config;
  return FileRanker(none, corpus, config).rank_methods(ranking, group);
}

}  // namespace crashlens
