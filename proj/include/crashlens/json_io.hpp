#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "crashlens/error.hpp"
#include "crashlens/evaluation.hpp"
#include "crashlens/grouping.hpp"
#include "crashlens/ranking.hpp"
#include "crashlens/report.hpp"
#include "crashlens/time.hpp"

namespace crashlens {

using Json = nlohmann::ordered_json;

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoFailure("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoFailure("cannot write '" + path + "'");
  out << text;
  if (!out) throw IoFailure("write failed for '" + path + "'");
}

inline Json read_json_file(const std::string& path) {
  try {
    return Json::parse(read_text_file(path));
  } catch (const Json::exception& e) {
    throw FormatFailure("'" + path + "': " + e.what());
  }
}

inline std::string dump(const Json& j) { return j.dump(2) + '\n'; }

// --- groups.json -----------------------------------------------------------

inline Json to_json(const CrashGroup& g) {
  Json j;
  j["id"] = g.id.value;
  j["level"] = g.level;
  j["signature_kind"] = signature_kind_name(g.level);
  j["signature"] = g.signature;
  if (g.level == 4) j["method_sequences"] = g.method_sequences;
  j["size"] = g.size();
  j["first_seen"] = format_timestamp(g.first_seen);
  j["last_seen"] = format_timestamp(g.last_seen);
  j["members"] = g.members;
  return j;
}

inline Json to_json(const LevelPartition& partition) {
  Json arr = Json::array();
  for (const auto& g : partition.groups) arr.push_back(to_json(g));
  return arr;
}

inline LevelPartition partition_from_json(const Json& j) {
  if (!j.is_array()) throw FormatFailure("groups file must hold a JSON array");
  LevelPartition p;
  p.level = 4;
  try {
    for (const auto& item : j) {
      CrashGroup g;
      g.id.value = item.at("id").get<std::string>();
      g.level = item.at("level").get<int>();
      signature_kind_name(g.level);
      g.signature = item.at("signature").get<std::vector<std::string>>();
      if (auto it = item.find("method_sequences"); it != item.end()) {
        g.method_sequences = it->get<std::vector<std::string>>();
      }
      g.members = item.at("members").get<std::vector<std::string>>();
      if (g.members.empty()) throw FormatFailure("group " + g.id.value + " has no members");
      g.first_seen = parse_timestamp(item.at("first_seen").get<std::string>());
      g.last_seen = parse_timestamp(item.at("last_seen").get<std::string>());
      p.groups.push_back(std::move(g));
    }
  } catch (const Json::exception& e) {
    throw FormatFailure(std::string("groups file: ") + e.what());
  }
  if (!p.groups.empty()) p.level = p.groups.front().level;
  for (const auto& g : p.groups) {
    if (g.level != p.level) throw FormatFailure("groups file mixes grouping levels");
  }
  std::sort(p.groups.begin(), p.groups.end(),
            [](const CrashGroup& a, const CrashGroup& b) { return a.id < b.id; });
  return p;
}

// --- ranks.json ------------------------------------------------------------

/// Ranking of one group; `ranking` is absent when the group had no
/// application frames.
struct GroupRanking {
  GroupId group_id;
  std::optional<FileRanking> ranking;
  std::vector<MethodRank> methods;
};

inline Json to_json(const GroupRanking& r) {
  Json j;
  j["group_id"] = r.group_id.value;
  j["candidates_considered"] = r.ranking ? r.ranking->candidates_considered : 0;
  Json files = Json::array();
  if (r.ranking) {
    for (const auto& e : r.ranking->entries) {
      files.push_back(Json{{"file", e.file},
                           {"iad", e.iad},
                           {"ibf", e.ibf},
                           {"ff", e.ff},
                           {"score", e.score},
                           {"mean_distance", e.mean_distance}});
    }
  }
  j["files"] = std::move(files);
  Json methods = Json::array();
  for (const auto& m : r.methods) {
    Json list = Json::array();
    for (const auto& c : m.methods) {
      list.push_back(Json{{"method", c.method}, {"count", c.count}, {"min_position", c.min_position}});
    }
    methods.push_back(Json{{"file", m.file}, {"methods", std::move(list)}});
  }
  j["methods"] = std::move(methods);
  return j;
}

inline Json to_json(const std::vector<GroupRanking>& rankings) {
  Json arr = Json::array();
  for (const auto& r : rankings) arr.push_back(to_json(r));
  return arr;
}

inline std::vector<GroupRanking> rankings_from_json(const Json& j) {
  if (!j.is_array()) throw FormatFailure("ranks file must hold a JSON array");
  std::vector<GroupRanking> out;
  try {
    for (const auto& item : j) {
      GroupRanking r;
      r.group_id.value = item.at("group_id").get<std::string>();
      const auto& files = item.at("files");
      if (!files.empty() || item.value("candidates_considered", 0) > 0) {
        FileRanking ranking;
        ranking.group_id = r.group_id;
        ranking.candidates_considered = item.at("candidates_considered").get<std::size_t>();
        for (const auto& f : files) {
          FileScore s;
          s.file = f.at("file").get<std::string>();
          s.iad = f.at("iad").get<double>();
          s.ibf = f.at("ibf").get<double>();
          s.ff = f.at("ff").get<double>();
          s.score = f.at("score").get<double>();
          s.mean_distance = f.value("mean_distance", 0.0);
          ranking.entries.push_back(std::move(s));
        }
        r.ranking = std::move(ranking);
      }
      for (const auto& m : item.value("methods", Json::array())) {
        MethodRank rank;
        rank.file = m.at("file").get<std::string>();
        for (const auto& c : m.at("methods")) {
          rank.methods.push_back({c.at("method").get<std::string>(), c.at("count").get<std::size_t>(),
                                  c.value("min_position", std::size_t{0})});
        }
        r.methods.push_back(std::move(rank));
      }
      out.push_back(std::move(r));
    }
  } catch (const Json::exception& e) {
    throw FormatFailure(std::string("ranks file: ") + e.what());
  }
  return out;
}

/// Groups without application frames are ranked as empty lists.
inline RankingMap ranking_map(const std::vector<GroupRanking>& rankings) {
  RankingMap out;
  for (const auto& r : rankings) {
    out[r.group_id] = r.ranking ? *r.ranking : FileRanking{r.group_id, {}, 0};
  }
  return out;
}

inline MethodRankMap method_rank_map(const std::vector<GroupRanking>& rankings) {
  MethodRankMap out;
  for (const auto& r : rankings) out[r.group_id] = r.methods;
  return out;
}

// --- truth.json / eval.json ------------------------------------------------

inline std::vector<GroundTruthTask> truth_from_json(const Json& j) {
  if (!j.is_array()) throw FormatFailure("truth file must hold a JSON array");
  std::vector<GroundTruthTask> tasks;
  try {
    for (const auto& item : j) {
      GroundTruthTask t;
      t.task_id = item.at("task_id").get<std::string>();
      t.group_id.value = item.at("group_id").get<std::string>();
      for (const auto& f : item.value("changed_files", Json::array())) {
        t.changed_files.insert(f.get<std::string>());
      }
      for (const auto& m : item.value("changed_methods", Json::array())) {
        t.changed_methods.insert({m.at("file").get<std::string>(), m.at("method").get<std::string>()});
      }
      tasks.push_back(std::move(t));
    }
  } catch (const Json::exception& e) {
    throw FormatFailure(std::string("truth file: ") + e.what());
  }
  return tasks;
}

inline Json to_json(const EvalReport& report) {
  Json j;
  Json recall = Json::object();
  for (auto [n, v] : report.recall_at) recall[std::to_string(n)] = v;
  Json map = Json::object();
  for (auto [n, v] : report.map_at) map[std::to_string(n)] = v;
  j["recall_at"] = std::move(recall);
  j["map_at"] = std::move(map);
  j["method_hit_rate"] = report.method_hit_rate;
  j["method_tasks"] = report.method_tasks;
  Json per_task = Json::array();
  for (const auto& t : report.per_task) {
    Json row{{"task_id", t.task_id}};
    row["first_hit_rank"] = t.first_hit_rank ? Json(*t.first_hit_rank) : Json(nullptr);
    row["average_precision"] = t.average_precision;
    per_task.push_back(std::move(row));
  }
  j["per_task"] = std::move(per_task);
  return j;
}

// --- issues ----------------------------------------------------------------

inline Json to_json(const IssuePayload& p) {
  Json j;
  j["group_id"] = p.group_id.value;
  j["level"] = p.level;
  j["window"] = format_interval(p.window);
  j["first_seen"] = format_timestamp(p.first_seen);
  j["last_seen"] = format_timestamp(p.last_seen);
  j["crash_count"] = p.crash_count;
  j["top_files"] = to_json(GroupRanking{p.group_id, p.top_files, {}})["files"];
  j["top_methods"] = to_json(GroupRanking{p.group_id, std::nullopt, p.top_methods})["methods"];
  Json uris = Json::array();
  for (const auto& u : p.top_uris) {
    Json users = Json::array();
    for (const auto& user : u.top_users) users.push_back(Json{{"user", user.user}, {"count", user.count}});
    uris.push_back(Json{{"uri", u.uri}, {"count", u.count}, {"top_users", std::move(users)}});
  }
  j["top_uris"] = std::move(uris);
  j["trace_samples"] = p.trace_samples;
  j["crash_id_samples"] = p.crash_id_samples;
  j["session_samples"] = p.session_samples;
  j["instructions"] = p.instructions;
  return j;
}

inline Json to_json(const GroupSummary& s) {
  return Json{{"group_id", s.group_id.value},
              {"first_seen", format_timestamp(s.first_seen)},
              {"last_seen", format_timestamp(s.last_seen)},
              {"crash_count", s.crash_count},
              {"uri_count", s.affected_uri_count},
              {"user_count", s.affected_user_count},
              {"system_classes", s.system_classes}};
}

}  // namespace crashlens
