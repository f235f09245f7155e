#pragma once

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "crashlens/error.hpp"
#include "crashlens/trace_model.hpp"

namespace crashlens {

struct AppConfig {
  // Packages that make up the application ("system classes"); only their
  // files are ranked.
  std::vector<std::string> app_package_prefixes;
  NormalizationRules normalization_rules = NormalizationRules::defaults();
  int top_n_files = 5;
  int top_n_uris = 5;
  int top_n_users_per_uri = 5;
  int sample_trace_count = 3;
  int sample_crash_id_count = 10;

  void validate() const {
    if (app_package_prefixes.empty()) {
      throw ConfigError("app_package_prefixes must name at least one package");
    }
    for (const auto& p : app_package_prefixes) {
      if (p.empty()) throw ConfigError("app_package_prefixes contains an empty prefix");
    }
    if (top_n_files < 1) throw ConfigError("top_n_files must be >= 1");
    if (top_n_uris < 0 || top_n_users_per_uri < 0 || sample_trace_count < 0 ||
        sample_crash_id_count < 0) {
      throw ConfigError("limits must be non-negative");
    }
  }

  /// True when the package equals a prefix or lies below it.
  bool is_app_package(std::string_view package) const {
    for (std::string_view prefix : app_package_prefixes) {
      if (prefix.ends_with('.')) prefix.remove_suffix(1);
      if (package.starts_with(prefix) &&
          (package.size() == prefix.size() || package[prefix.size()] == '.')) {
        return true;
      }
    }
    return false;
  }

  /// Stable text form, used for hashing run configurations.
  std::string canonical_text() const {
    std::ostringstream out;
    out << "app_package_prefixes=";
    for (const auto& p : app_package_prefixes) out << p << ';';
    out << "\ntop_n_files=" << top_n_files << "\ntop_n_uris=" << top_n_uris
        << "\ntop_n_users_per_uri=" << top_n_users_per_uri
        << "\nsample_trace_count=" << sample_trace_count
        << "\nsample_crash_id_count=" << sample_crash_id_count << '\n';
    for (const auto& r : normalization_rules.rules) {
      out << "normalization_rule=" << r.pattern << " -> " << r.replacement << '\n';
    }
    return out.str();
  }
};

namespace detail {

struct ConfigValueParser {
  std::string_view text;
  std::size_t pos = 0;
  int line_no = 0;

  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError("config line " + std::to_string(line_no) + ": " + what);
  }
  void skip_space() {
    while (pos < text.size() && (text[pos] == ' ' || text[pos] == '\t')) ++pos;
  }
  bool at_end() {
    skip_space();
    return pos >= text.size() || text[pos] == '#';
  }

  std::string string_value() {
    skip_space();
    if (pos >= text.size()) fail("expected a string");
    char quote = text[pos];
    if (quote != '"' && quote != '\'') fail("expected a quoted string");
    ++pos;
    std::string out;
    while (pos < text.size() && text[pos] != quote) {
      char c = text[pos++];
      if (quote == '"' && c == '\\') {
        if (pos >= text.size()) fail("dangling escape");
        char e = text[pos++];
        switch (e) {
          case 'n': out += '\n'; break;
          case 't': out += '\t'; break;
          case '\\': out += '\\'; break;
          case '"': out += '"'; break;
          default: fail(std::string("unknown escape \\") + e);
        }
      } else {
        out += c;
      }
    }
    if (pos >= text.size()) fail("unterminated string");
    ++pos;
    return out;
  }

  std::vector<std::string> string_array() {
    skip_space();
    if (pos >= text.size() || text[pos] != '[') fail("expected '['");
    ++pos;
    std::vector<std::string> out;
    skip_space();
    if (pos < text.size() && text[pos] == ']') {
      ++pos;
      return out;
    }
    while (true) {
      out.push_back(string_value());
      skip_space();
      if (pos < text.size() && text[pos] == ',') {
        ++pos;
        skip_space();
        if (pos < text.size() && text[pos] == ']') {
          ++pos;
          return out;
        }
        continue;
      }
      if (pos < text.size() && text[pos] == ']') {
        ++pos;
        return out;
      }
      fail("expected ',' or ']'");
    }
  }

  long long integer() {
    skip_space();
    auto begin = pos;
    if (pos < text.size() && (text[pos] == '-' || text[pos] == '+')) ++pos;
    while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') ++pos;
    if (pos == begin) fail("expected an integer");
    return std::stoll(std::string(text.substr(begin, pos - begin)));
  }

  bool boolean() {
    skip_space();
    if (text.substr(pos).starts_with("true")) {
      pos += 4;
      return true;
    }
    if (text.substr(pos).starts_with("false")) {
      pos += 5;
      return false;
    }
    fail("expected true or false");
  }
};

}  // namespace detail

/// Reads the TOML-like key = value configuration format:
///
///   app_package_prefixes = ["br.ufrn.sigaa", "s.p"]
///   top_n_files = 5
///   default_normalization = true
///   normalization_rule = ['Enhancer\$\$[0-9a-f]+', 'Enhancer$$$$#']
///
/// `normalization_rule` may repeat; the rules are appended after the defaults
/// unless `default_normalization = false`.
inline AppConfig parse_config(std::string_view text) {
  AppConfig config;
  bool use_defaults = true;
  std::vector<NormalizationRule> extra_rules;

  int line_no = 0;
  for (auto raw_line : detail::split_lines(text)) {
    ++line_no;
    auto line = detail::trim(raw_line);
    if (line.empty() || line.front() == '#') continue;
    auto eq = line.find('=');
    detail::ConfigValueParser p{line, 0, line_no};
    if (eq == std::string_view::npos) p.fail("expected key = value");
    auto key = detail::trim(line.substr(0, eq));
    p.pos = eq + 1;

    auto int_field = [&](int& field) {
      auto v = p.integer();
      if (v < 0 || v > 1'000'000) p.fail(std::string(key) + " out of range");
      field = static_cast<int>(v);
    };

    if (key == "app_package_prefixes") {
      config.app_package_prefixes = p.string_array();
    } else if (key == "top_n_files") {
      int_field(config.top_n_files);
    } else if (key == "top_n_uris") {
      int_field(config.top_n_uris);
    } else if (key == "top_n_users_per_uri") {
      int_field(config.top_n_users_per_uri);
    } else if (key == "sample_trace_count") {
      int_field(config.sample_trace_count);
    } else if (key == "sample_crash_id_count") {
      int_field(config.sample_crash_id_count);
    } else if (key == "default_normalization") {
      use_defaults = p.boolean();
    } else if (key == "normalization_rule") {
      auto pair = p.string_array();
      if (pair.size() != 2) p.fail("normalization_rule takes [pattern, replacement]");
      extra_rules.emplace_back(pair[0], pair[1]);
    } else {
      p.fail("unknown key '" + std::string(key) + "'");
    }
    if (!p.at_end()) p.fail("trailing characters after value");
  }

  if (!use_defaults) config.normalization_rules.rules.clear();
  for (auto& rule : extra_rules) config.normalization_rules.rules.push_back(std::move(rule));
  return config;
}

inline AppConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

}  // namespace crashlens
