#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <openssl/evp.h>

#include "crashlens/config.hpp"
#include "crashlens/grouping.hpp"
#include "crashlens/ingest.hpp"
#include "crashlens/json_io.hpp"
#include "crashlens/ranking.hpp"
#include "crashlens/report.hpp"

namespace crashlens {

inline constexpr std::string_view kToolVersion = "0.3.0";

inline std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
    throw InvariantViolation("sha256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(length * 2);
  for (unsigned int i = 0; i < length; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 0xf];
  }
  return out;
}

/// Provenance record written next to every command's outputs.
struct RunManifest {
  std::string command;
  std::string config_path;
  std::string config_hash;
  std::map<std::string, std::string> input_digests;  // path -> sha256
  std::vector<std::string> outputs;
  std::optional<TimeInterval> window;
  std::optional<int> level;
  std::map<std::string, std::size_t> counts;
  int exit_code = 0;
  Instant started_at;

  void add_input(const std::string& path) {
    input_digests[path] = "sha256:" + sha256_hex(read_text_file(path));
  }
};

inline Json to_json(const RunManifest& m) {
  Json j;
  j["tool"] = "crashlens";
  j["tool_version"] = kToolVersion;
  j["command"] = m.command;
  j["config_path"] = m.config_path;
  j["config_hash"] = "sha256:" + m.config_hash;
  Json inputs = Json::object();
  for (const auto& [path, digest] : m.input_digests) inputs[path] = digest;
  j["inputs"] = std::move(inputs);
  j["outputs"] = m.outputs;
  j["window"] = m.window ? Json(format_interval(*m.window)) : Json(nullptr);
  j["level"] = m.level ? Json(*m.level) : Json(nullptr);
  Json counts = Json::object();
  for (const auto& [k, v] : m.counts) counts[k] = v;
  j["counts"] = std::move(counts);
  j["exit_code"] = m.exit_code;
  j["started_at"] = format_timestamp(m.started_at);
  return j;
}

inline Instant now_instant() {
  return std::chrono::time_point_cast<std::chrono::milliseconds>(std::chrono::system_clock::now());
}

/// File-system safe name for a group's issue files.
inline std::string issue_file_stem(const GroupId& id) {
  std::string out;
  for (char c : id.value) {
    bool keep = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                c == '-' || c == '_' || c == '.';
    out += keep ? c : '_';
  }
  return out;
}

/// Ranks every group of the partition (or the selected subset) against the
/// whole partition. Groups without application frames get no file ranking.
inline std::vector<GroupRanking> rank_partition(const LevelPartition& partition,
                                                const CrashCorpus& corpus,
                                                const AppConfig& config,
                                                const std::set<GroupId>* only = nullptr) {
  FileRanker ranker(partition, corpus, config);
  std::vector<GroupRanking> out;
  for (const auto& group : partition.groups) {
    if (only && !only->count(group.id)) continue;
    GroupRanking r{group.id, std::nullopt, {}};
    try {
      r.ranking = ranker.rank(group);
      r.methods = ranker.rank_methods(*r.ranking, group);
    } catch (const NoCandidates&) {
    }
    out.push_back(std::move(r));
  }
  return out;
}

/// Validates a --select list against the partition. Throws UnknownGroup.
inline std::set<GroupId> resolve_selection(const LevelPartition& partition,
                                           const std::vector<std::string>& select) {
  std::set<GroupId> chosen;
  if (select.empty()) {
    for (const auto& g : partition.groups) chosen.insert(g.id);
    return chosen;
  }
  for (const auto& raw : select) {
    GroupId id{raw};
    if (!partition.find(id)) throw UnknownGroup("unknown group id '" + raw + "' in --select");
    chosen.insert(id);
  }
  return chosen;
}

/// Writes issues/<group>.md (and .json) for the chosen groups. Returns the
/// written paths relative to out_dir.
inline std::vector<std::string> write_issues(const std::filesystem::path& out_dir,
                                             const LevelPartition& partition,
                                             const std::vector<GroupRanking>& rankings,
                                             const std::set<GroupId>& chosen,
                                             const CrashCorpus& corpus, const AppConfig& config,
                                             bool markdown, bool json) {
  std::vector<std::string> written;
  std::map<GroupId, const GroupRanking*> by_id;
  for (const auto& r : rankings) by_id[r.group_id] = &r;
  std::filesystem::create_directories(out_dir / "issues");
  for (const auto& id : chosen) {
    const auto* group = partition.find(id);
    if (!group) throw UnknownGroup("unknown group id '" + id.value + "'");
    FileRanking ranking{id, {}, 0};
    std::vector<MethodRank> methods;
    if (auto it = by_id.find(id); it != by_id.end()) {
      if (it->second->ranking) ranking = *it->second->ranking;
      methods = it->second->methods;
    }
    auto payload = build_issue(*group, ranking, methods, corpus, config);
    auto stem = std::string("issues/") + issue_file_stem(id);
    if (markdown) {
      write_text_file((out_dir / (stem + ".md")).string(), render_issue_markdown(payload));
      written.push_back(stem + ".md");
    }
    if (json) {
      write_text_file((out_dir / (stem + ".json")).string(), dump(to_json(payload)));
      written.push_back(stem + ".json");
    }
  }
  return written;
}

struct PipelineOptions {
  std::string input;
  TimeInterval window = TimeInterval::unbounded();
  std::filesystem::path out_dir;
  int level = 4;
  std::vector<std::string> select;
  bool strict = false;
  std::string config_path;
};

/// Ingest -> group -> rank -> report. Emits groups.json, ranks.json,
/// summaries.csv, issues/<group>.md per selected group and manifest.json.
inline RunManifest run_pipeline(const AppConfig& config, const PipelineOptions& options) {
  config.validate();
  RunManifest manifest;
  manifest.started_at = now_instant();
  manifest.command = "pipeline";
  manifest.config_path = options.config_path;
  manifest.config_hash = sha256_hex(config.canonical_text());
  manifest.window = options.window;
  manifest.level = options.level;
  manifest.add_input(options.input);

  auto corpus = load_corpus(options.input, options.window, LoadOptions{options.strict});
  auto partition = group(corpus, options.level, config);
  auto chosen = resolve_selection(partition, options.select);
  auto rankings = rank_partition(partition, corpus, config);
  auto summaries = summarize_groups(partition, corpus, config);

  std::filesystem::create_directories(options.out_dir);
  auto out = [&](const std::string& name, const std::string& text) {
    write_text_file((options.out_dir / name).string(), text);
    manifest.outputs.push_back(name);
  };
  out("groups.json", dump(to_json(partition)));
  out("ranks.json", dump(to_json(rankings)));
  out("summaries.csv", export_spreadsheet_csv(summaries));
  for (auto& path : write_issues(options.out_dir, partition, rankings, chosen, corpus, config,
                                 true, false)) {
    manifest.outputs.push_back(std::move(path));
  }

  manifest.counts["reports"] = corpus.size();
  manifest.counts["skipped"] = corpus.skipped_count;
  manifest.counts["groups"] = partition.groups.size();
  manifest.counts["issues"] = chosen.size();
  write_text_file((options.out_dir / "manifest.json").string(), dump(to_json(manifest)));
  return manifest;
}

}  // namespace crashlens
