#pragma once

#include <algorithm>
#include <compare>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "crashlens/config.hpp"
#include "crashlens/error.hpp"
#include "crashlens/grouping.hpp"
#include "crashlens/ingest.hpp"
#include "crashlens/ranking.hpp"

namespace crashlens {

struct ChangedMethod {
  std::string file;
  std::string method;

  friend auto operator<=>(const ChangedMethod&, const ChangedMethod&) = default;
};

/// A closed bug-fix task and what its commits touched.
struct GroundTruthTask {
  std::string task_id;
  GroupId group_id;
  std::set<std::string> changed_files;
  std::set<ChangedMethod> changed_methods;

  bool evaluable() const { return !changed_files.empty(); }
};

using RankingMap = std::map<GroupId, FileRanking>;
using MethodRankMap = std::map<GroupId, std::vector<MethodRank>>;

struct TaskEvaluation {
  std::string task_id;
  std::optional<std::size_t> first_hit_rank;  // 1-based
  double average_precision = 0.0;             // at the largest cutoff
};

struct EvalReport {
  std::map<int, double> recall_at;
  std::map<int, double> map_at;
  double method_hit_rate = 0.0;
  std::size_t method_tasks = 0;  // denominator of method_hit_rate
  std::vector<TaskEvaluation> per_task;
};

namespace detail {

inline void check_cutoff(int n) {
  if (n < 1) throw ConfigError("cutoff N must be >= 1, got " + std::to_string(n));
}

inline const FileRanking& ranking_for(const GroundTruthTask& task, const RankingMap& rankings) {
  auto it = rankings.find(task.group_id);
  if (it == rankings.end()) {
    throw MissingRanking("task " + task.task_id + ": no ranking for group " + task.group_id.value);
  }
  return it->second;
}

inline std::size_t cutoff(const FileRanking& ranking, int n) {
  return std::min(ranking.entries.size(), static_cast<std::size_t>(n));
}

}  // namespace detail

/// 1-based rank of the first changed file within the top n, if any.
inline std::optional<std::size_t> first_hit_rank(const GroundTruthTask& task,
                                                 const FileRanking& ranking, int n) {
  detail::check_cutoff(n);
  for (std::size_t k = 0; k < detail::cutoff(ranking, n); ++k) {
    if (task.changed_files.count(ranking.entries[k].file)) return k + 1;
  }
  return std::nullopt;
}

/// AP@n = sum of precision@k over relevant ranks k <= n, divided by
/// min(|changed_files|, n).
inline double average_precision(const GroundTruthTask& task, const FileRanking& ranking, int n) {
  detail::check_cutoff(n);
  if (task.changed_files.empty()) return 0.0;
  double sum = 0.0;
  std::size_t relevant = 0;
  for (std::size_t k = 0; k < detail::cutoff(ranking, n); ++k) {
    if (task.changed_files.count(ranking.entries[k].file)) {
      ++relevant;
      sum += static_cast<double>(relevant) / static_cast<double>(k + 1);
    }
  }
  auto denominator = std::min(task.changed_files.size(), static_cast<std::size_t>(n));
  return sum / static_cast<double>(denominator);
}

/// Fraction of evaluable tasks with a changed file among the top n.
inline double recall_at_n(const std::vector<GroundTruthTask>& tasks, const RankingMap& rankings,
                          int n) {
  detail::check_cutoff(n);
  std::size_t evaluable = 0;
  std::size_t hits = 0;
  for (const auto& task : tasks) {
    if (!task.evaluable()) continue;
    ++evaluable;
    if (first_hit_rank(task, detail::ranking_for(task, rankings), n)) ++hits;
  }
  if (evaluable == 0) throw EmptyTaskSet("no evaluable tasks");
  return static_cast<double>(hits) / static_cast<double>(evaluable);
}

inline double mean_average_precision(const std::vector<GroundTruthTask>& tasks,
                                     const RankingMap& rankings, int n) {
  detail::check_cutoff(n);
  std::size_t evaluable = 0;
  double sum = 0.0;
  for (const auto& task : tasks) {
    if (!task.evaluable()) continue;
    ++evaluable;
    sum += average_precision(task, detail::ranking_for(task, rankings), n);
  }
  if (evaluable == 0) throw EmptyTaskSet("no evaluable tasks");
  return sum / static_cast<double>(evaluable);
}

/// Fraction of tasks (with changed methods) where some changed (file, method)
/// was suggested. Tasks without changed methods are left out; 0 when none
/// remain.
inline double method_hit_rate(const std::vector<GroundTruthTask>& tasks,
                              const MethodRankMap& method_ranks) {
  std::size_t considered = 0;
  std::size_t hits = 0;
  for (const auto& task : tasks) {
    if (task.changed_methods.empty()) continue;
    ++considered;
    auto it = method_ranks.find(task.group_id);
    if (it == method_ranks.end()) continue;
    bool hit = false;
    for (const auto& rank : it->second) {
      for (const auto& m : rank.methods) {
        if (task.changed_methods.count({rank.file, m.method})) {
          hit = true;
          break;
        }
      }
      if (hit) break;
    }
    if (hit) ++hits;
  }
  return considered == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(considered);
}

/// task_id -> whether any report of `post_corpus` (collected after the task
/// closed) still matches the task's group.
inline std::map<std::string, bool> recurrence_table(const std::vector<GroundTruthTask>& closed_tasks,
                                                    const CrashCorpus& post_corpus,
                                                    const LevelPartition& groups,
                                                    const AppConfig& config) {
  std::map<std::string, bool> out;
  for (const auto& task : closed_tasks) {
    const auto* group = groups.find(task.group_id);
    if (!group) {
      throw UnknownGroup("task " + task.task_id + " refers to unknown group " +
                         task.group_id.value);
    }
    bool recurred = false;
    for (const auto& report : post_corpus.reports) {
      if (match_report_to_group(report, *group, config)) {
        recurred = true;
        break;
      }
    }
    out[task.task_id] = recurred;
  }
  return out;
}

/// Recall@N and MAP@N for every cutoff, method hit rate, and per-task detail
/// at the largest cutoff.
inline EvalReport evaluate(const std::vector<GroundTruthTask>& tasks, const RankingMap& rankings,
                           const MethodRankMap& method_ranks, std::vector<int> cutoffs) {
  if (cutoffs.empty()) throw ConfigError("at least one cutoff is required");
  std::sort(cutoffs.begin(), cutoffs.end());
  cutoffs.erase(std::unique(cutoffs.begin(), cutoffs.end()), cutoffs.end());
  EvalReport report;
  for (int n : cutoffs) {
    report.recall_at[n] = recall_at_n(tasks, rankings, n);
    report.map_at[n] = mean_average_precision(tasks, rankings, n);
  }
  report.method_hit_rate = method_hit_rate(tasks, method_ranks);
  report.method_tasks = static_cast<std::size_t>(std::count_if(
      tasks.begin(), tasks.end(), [](const auto& t) { return !t.changed_methods.empty(); }));
  const int widest = cutoffs.back();
  for (const auto& task : tasks) {
    if (!task.evaluable()) continue;
    const auto& ranking = detail::ranking_for(task, rankings);
    report.per_task.push_back(
        {task.task_id, first_hit_rank(task, ranking, widest), average_precision(task, ranking, widest)});
  }
  return report;
}

}  // namespace crashlens
