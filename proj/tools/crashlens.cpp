// crashlens: group crash reports, rank suspicious files, and emit weekly
// spreadsheets, issue payloads and evaluations.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "crashlens/crashlens.hpp"

namespace fs = std::filesystem;
using namespace crashlens;

namespace {

struct GlobalOptions {
  std::string config_path;
  std::vector<std::string> app_prefixes;
  int top = 0;
  bool strict = false;
};

// Grouping and ingestion do not need the application prefixes.
AppConfig resolve_config(GlobalOptions& global, bool needs_prefixes) {
  if (global.config_path.empty()) {
    if (const char* env = std::getenv("CRASHLENS_CONFIG"); env && *env) global.config_path = env;
  }
  AppConfig config = global.config_path.empty() ? AppConfig{} : load_config(global.config_path);
  if (!global.app_prefixes.empty()) config.app_package_prefixes = global.app_prefixes;
  if (global.top > 0) config.top_n_files = global.top;
  if (needs_prefixes || !config.app_package_prefixes.empty()) config.validate();
  return config;
}

TimeInterval window_or_all(const std::string& text) {
  return text.empty() ? TimeInterval::unbounded() : parse_interval(text);
}

std::vector<int> parse_cutoffs(const std::string& text) {
  std::vector<int> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      std::size_t used = 0;
      int n = std::stoi(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      out.push_back(n);
    } catch (const std::exception&) {
      throw ConfigError("invalid cutoff list '" + text + "'");
    }
  }
  return out;
}

// Manifest for a single-file output sits beside it as <file>.manifest.json.
void write_manifest(RunManifest& manifest, const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  write_text_file(path.string(), dump(to_json(manifest)));
}

RunManifest start_manifest(const std::string& command, const GlobalOptions& global,
                           const AppConfig& config) {
  RunManifest m;
  m.command = command;
  m.started_at = now_instant();
  m.config_path = global.config_path;
  m.config_hash = sha256_hex(config.canonical_text());
  return m;
}

void write_output(RunManifest& manifest, const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  write_text_file(path.string(), text);
  manifest.outputs.push_back(path.string());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Crash report grouping, suspicious file ranking and bug-fix evaluation"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions global;
  app.add_option("--config", global.config_path,
                 "Configuration file (falls back to $CRASHLENS_CONFIG)");
  app.add_option("--app-prefix", global.app_prefixes,
                 "Application package prefix; overrides the config file")
      ->take_all();
  app.add_flag("--strict", global.strict, "Fail on malformed or duplicate records");

  std::string input, window_text, out, groups_path, ranks_path, truth_path, format = "md";
  std::string post_input, post_window_text, cutoffs_text = "1,3,5";
  int level = 4;
  std::vector<std::string> select;

  auto* ingest_cmd = app.add_subcommand("ingest", "Validate and count an export file");
  ingest_cmd->add_option("--input", input, "NDJSON crash export")->required();
  ingest_cmd->add_option("--window", window_text, "<start>..<end>, end exclusive");
  ingest_cmd->add_option("--out", out, "Statistics JSON")->required();

  auto* group_cmd = app.add_subcommand("group", "Group crash reports");
  group_cmd->add_option("--level", level, "Cumulative grouping level")->check(CLI::Range(1, 4));
  group_cmd->add_option("--input", input, "NDJSON crash export")->required();
  group_cmd->add_option("--window", window_text, "<start>..<end>, end exclusive");
  group_cmd->add_option("--out", out, "groups.json")->required();

  auto* rank_cmd = app.add_subcommand("rank", "Rank suspicious files and methods per group");
  rank_cmd->add_option("--groups", groups_path, "groups.json")->required();
  rank_cmd->add_option("--input", input, "NDJSON crash export")->required();
  rank_cmd->add_option("--window", window_text, "<start>..<end>, end exclusive");
  rank_cmd->add_option("--top", global.top, "Files kept per group");
  rank_cmd->add_option("--out", out, "ranks.json")->required();

  auto* report_cmd = app.add_subcommand("report", "Spreadsheet and issue payloads");
  report_cmd->add_option("--groups", groups_path, "groups.json")->required();
  report_cmd->add_option("--ranks", ranks_path, "ranks.json")->required();
  report_cmd->add_option("--input", input, "NDJSON crash export")->required();
  report_cmd->add_option("--window", window_text, "<start>..<end>, end exclusive");
  report_cmd->add_option("--format", format, "csv, md or json")
      ->check(CLI::IsMember({"csv", "md", "json"}));
  report_cmd->add_option("--select", select, "Group ids to emit issues for")->delimiter(',');
  report_cmd->add_option("--out", out, "Output directory")->required();

  auto* eval_cmd = app.add_subcommand("eval", "Recall@N, MAP and method hit rate");
  eval_cmd->add_option("--ranks", ranks_path, "ranks.json")->required();
  eval_cmd->add_option("--truth", truth_path, "Ground-truth tasks JSON")->required();
  eval_cmd->add_option("--n", cutoffs_text, "Comma-separated cutoffs");
  eval_cmd->add_option("--groups", groups_path, "groups.json, for the recurrence check");
  eval_cmd->add_option("--post-input", post_input, "Reports collected after the tasks closed");
  eval_cmd->add_option("--post-window", post_window_text, "Window for --post-input");
  eval_cmd->add_option("--out", out, "eval.json")->required();

  auto* pipeline_cmd = app.add_subcommand("pipeline", "ingest -> group -> rank -> report");
  pipeline_cmd->add_option("--input", input, "NDJSON crash export")->required();
  pipeline_cmd->add_option("--window", window_text, "<start>..<end>, end exclusive");
  pipeline_cmd->add_option("--level", level, "Cumulative grouping level")->check(CLI::Range(1, 4));
  pipeline_cmd->add_option("--select", select, "Group ids to emit issues for")->delimiter(',');
  pipeline_cmd->add_option("--top", global.top, "Files kept per group");
  pipeline_cmd->add_option("--out", out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(ErrorKind::kConfig);
  }

  try {
    AppConfig config = resolve_config(global, !(*ingest_cmd || *group_cmd || *eval_cmd));
    const LoadOptions load{global.strict};

    if (*ingest_cmd) {
      auto manifest = start_manifest("ingest", global, config);
      auto window = window_or_all(window_text);
      manifest.window = window;
      manifest.add_input(input);
      auto corpus = load_corpus(input, window, load);
      Json stats{{"reports", corpus.size()},
                 {"skipped", corpus.skipped_count},
                 {"window", format_interval(window)}};
      std::set<const StackTrace*> distinct;
      for (const auto& r : corpus.reports) distinct.insert(r.trace_ptr.get());
      stats["distinct_traces"] = distinct.size();
      write_output(manifest, out, dump(stats));
      manifest.counts["reports"] = corpus.size();
      manifest.counts["skipped"] = corpus.skipped_count;
      write_manifest(manifest, out + ".manifest.json");
      std::cout << corpus.size() << " reports, " << corpus.skipped_count << " skipped\n";
    } else if (*group_cmd) {
      auto manifest = start_manifest("group", global, config);
      auto window = window_or_all(window_text);
      manifest.window = window;
      manifest.level = level;
      manifest.add_input(input);
      auto corpus = load_corpus(input, window, load);
      auto partition = group(corpus, level, config);
      write_output(manifest, out, dump(to_json(partition)));
      manifest.counts["reports"] = corpus.size();
      manifest.counts["skipped"] = corpus.skipped_count;
      manifest.counts["groups"] = partition.groups.size();
      write_manifest(manifest, out + ".manifest.json");
      std::cout << partition.groups.size() << " level-" << level << " groups from "
                << corpus.size() << " reports\n";
    } else if (*rank_cmd) {
      auto manifest = start_manifest("rank", global, config);
      auto window = window_or_all(window_text);
      manifest.window = window;
      manifest.add_input(groups_path);
      manifest.add_input(input);
      auto corpus = load_corpus(input, window, load);
      auto partition = partition_from_json(read_json_file(groups_path));
      manifest.level = partition.level;
      auto rankings = rank_partition(partition, corpus, config);
      write_output(manifest, out, dump(to_json(rankings)));
      manifest.counts["groups"] = rankings.size();
      write_manifest(manifest, out + ".manifest.json");
    } else if (*report_cmd) {
      auto manifest = start_manifest("report", global, config);
      auto window = window_or_all(window_text);
      manifest.window = window;
      manifest.add_input(groups_path);
      manifest.add_input(ranks_path);
      manifest.add_input(input);
      auto corpus = load_corpus(input, window, load);
      auto partition = partition_from_json(read_json_file(groups_path));
      auto rankings = rankings_from_json(read_json_file(ranks_path));
      manifest.level = partition.level;
      fs::path dir = out;
      fs::create_directories(dir);
      if (format == "csv") {
        auto csv = export_spreadsheet_csv(summarize_groups(partition, corpus, config));
        write_text_file((dir / "summaries.csv").string(), csv);
        manifest.outputs.push_back("summaries.csv");
      } else {
        auto chosen = resolve_selection(partition, select);
        for (auto& path :
             write_issues(dir, partition, rankings, chosen, corpus, config, format == "md",
                          format == "json")) {
          manifest.outputs.push_back(std::move(path));
        }
      }
      write_manifest(manifest, dir / "manifest.json");
    } else if (*eval_cmd) {
      auto manifest = start_manifest("eval", global, config);
      manifest.add_input(ranks_path);
      manifest.add_input(truth_path);
      auto rankings = rankings_from_json(read_json_file(ranks_path));
      auto tasks = truth_from_json(read_json_file(truth_path));
      auto report = evaluate(tasks, ranking_map(rankings), method_rank_map(rankings),
                             parse_cutoffs(cutoffs_text));
      Json result = to_json(report);
      if (!post_input.empty()) {
        if (groups_path.empty()) throw ConfigError("--post-input requires --groups");
        manifest.add_input(groups_path);
        manifest.add_input(post_input);
        auto partition = partition_from_json(read_json_file(groups_path));
        auto post = load_corpus(post_input, window_or_all(post_window_text), load);
        Json recurrence = Json::object();
        for (const auto& [task, recurred] : recurrence_table(tasks, post, partition, config)) {
          recurrence[task] = recurred;
        }
        result["recurrence"] = std::move(recurrence);
      }
      write_output(manifest, out, dump(result));
      write_manifest(manifest, out + ".manifest.json");
    } else if (*pipeline_cmd) {
      PipelineOptions options;
      options.input = input;
      options.window = window_or_all(window_text);
      options.out_dir = out;
      options.level = level;
      options.select = select;
      options.strict = global.strict;
      options.config_path = global.config_path;
      auto manifest = run_pipeline(config, options);
      std::cout << manifest.counts["groups"] << " groups, " << manifest.counts["issues"]
                << " issues written to " << out << '\n';
    }
  } catch (const Error& e) {
    std::cerr << "crashlens: " << e.what() << '\n';
    return e.exit_code();
  } catch (const fs::filesystem_error& e) {
    std::cerr << "crashlens: " << e.what() << '\n';
    return static_cast<int>(ErrorKind::kInput);
  } catch (const std::exception& e) {
    std::cerr << "crashlens: internal error: " << e.what() << '\n';
    return static_cast<int>(ErrorKind::kInternal);
  }
  return 0;
}
