// Copyright 2026 The penalty-lab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Config-file parsing and result serialization for the experiment harness.
//
// Config files are flat `key = value` text: one pair per line, `#` starts a
// comment, blank lines are ignored. Recognized keys:
//
//   model_family   CiPi | Exponential | Uniform
//   L              positive scale of the primitive parameter draws
//   bias_regime    Rational | Naive | Sophisticated | PartiallyNaive |
//                  FixedBetaArray (sophisticated; FixedBetaArrayNaive /
//                  FixedBetaArraySophisticated select explicitly) |
//                  FixedNaiveteArray
//   m              number of resources
//   n_values       comma-separated agent counts
//   mechanisms     comma-separated subset of
//                  2BPB, MPlus1, FCFS, FirstBestWelfare, FirstBestUtilization
//   fcfs_penalties comma-separated penalties >= 0 (required iff FCFS listed;
//                  one FCFS result row per penalty)
//   replicates     number of sampled economies per agent count
//   seed           64-bit unsigned stream seed
//   per_agent_stats          true|false (default false)
//   fb_cipi_allow_transfers  true|false (default false)
//
// Serialization: CSV with the fixed header below, or a JSON array of row
// objects mirroring ResultRow. All numbers carry 9 significant digits.

#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "plab/simulation.hpp"

namespace plab {

/// Raised for malformed configs and file-system failures; the message names
/// the offending key or path. The CLI maps it to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

inline std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> parts;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) parts.push_back(item);
  }
  return parts;
}

inline double parse_double(const std::string& key, const std::string& value) {
  const std::string v = trim(value);
  char* end = nullptr;
  const double x = std::strtod(v.c_str(), &end);
  if (v.empty() || end != v.c_str() + v.size()) {
    throw ConfigError("config key '" + key + "': expected a number, got '" +
                      value + "'");
  }
  return x;
}

inline long long parse_int(const std::string& key, const std::string& value) {
  const std::string v = trim(value);
  char* end = nullptr;
  const long long x = std::strtoll(v.c_str(), &end, 10);
  if (v.empty() || end != v.c_str() + v.size()) {
    throw ConfigError("config key '" + key + "': expected an integer, got '" +
                      value + "'");
  }
  return x;
}

inline std::uint64_t parse_uint64(const std::string& key,
                                  const std::string& value) {
  const std::string v = trim(value);
  char* end = nullptr;
  const unsigned long long x = std::strtoull(v.c_str(), &end, 10);
  if (v.empty() || end != v.c_str() + v.size() || v.front() == '-') {
    throw ConfigError("config key '" + key +
                      "': expected an unsigned integer, got '" + value + "'");
  }
  return static_cast<std::uint64_t>(x);
}

inline bool parse_bool(const std::string& key, const std::string& value) {
  const std::string v = lower(trim(value));
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("config key '" + key + "': expected true/false, got '" +
                    value + "'");
}

inline ModelFamily parse_family(const std::string& value) {
  const std::string v = lower(trim(value));
  if (v == "cipi" || v == "fixedcost" || v == "fixed_cost") {
    return ModelFamily::fixed_cost;
  }
  if (v == "exponential" || v == "exp") return ModelFamily::exponential;
  if (v == "uniform") return ModelFamily::uniform;
  throw ConfigError(
      "config key 'model_family': expected CiPi, Exponential or Uniform, "
      "got '" + value + "'");
}

inline BiasRegime parse_regime(const std::string& value) {
  const std::string v = lower(trim(value));
  if (v == "rational") return BiasRegime::rational;
  if (v == "naive") return BiasRegime::naive;
  if (v == "sophisticated") return BiasRegime::sophisticated;
  if (v == "partiallynaive" || v == "partially_naive") {
    return BiasRegime::partially_naive;
  }
  if (v == "fixedbetaarray" || v == "fixed_beta_array" ||
      v == "fixedbetaarraysophisticated" ||
      v == "fixed_beta_array_sophisticated") {
    return BiasRegime::fixed_beta_array_sophisticated;
  }
  if (v == "fixedbetaarraynaive" || v == "fixed_beta_array_naive") {
    return BiasRegime::fixed_beta_array_naive;
  }
  if (v == "fixednaivetearray" || v == "fixed_naivete_array") {
    return BiasRegime::fixed_naivete_array;
  }
  throw ConfigError(
      "config key 'bias_regime': expected Rational, Naive, Sophisticated, "
      "PartiallyNaive, FixedBetaArray[Naive|Sophisticated] or "
      "FixedNaiveteArray, got '" + value + "'");
}

}  // namespace detail

/// Parses a config document (see the format comment at the top of this
/// header). Throws ConfigError naming the offending key on any problem.
inline ExperimentConfig parse_config_text(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": expected 'key = value', got '" + line + "'");
    }
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": empty key");
    }
    if (!kv.emplace(key, value).second) {
      throw ConfigError("config key '" + key + "': specified more than once");
    }
  }

  static const char* const kKnown[] = {
      "model_family", "L", "bias_regime", "m", "n_values", "mechanisms",
      "fcfs_penalties", "replicates", "seed", "per_agent_stats",
      "fb_cipi_allow_transfers"};
  for (const auto& [key, value] : kv) {
    bool known = false;
    for (const char* k : kKnown) known = known || key == k;
    if (!known) throw ConfigError("unknown config key '" + key + "'");
  }
  const auto require = [&](const char* key) -> const std::string& {
    const auto it = kv.find(key);
    if (it == kv.end()) {
      throw ConfigError(std::string("missing config key '") + key + "'");
    }
    return it->second;
  };

  ExperimentConfig cfg;
  cfg.population.family = detail::parse_family(require("model_family"));
  cfg.population.scale = detail::parse_double("L", require("L"));
  if (!(cfg.population.scale > 0.0)) {
    throw ConfigError("config key 'L': must be > 0");
  }
  cfg.population.regime = detail::parse_regime(require("bias_regime"));
  const long long m = detail::parse_int("m", require("m"));
  if (m < 1) throw ConfigError("config key 'm': must be >= 1");
  cfg.resources = static_cast<int>(m);

  cfg.agent_counts.clear();
  for (const std::string& tok : detail::split_list(require("n_values"))) {
    const long long n = detail::parse_int("n_values", tok);
    if (n < 1) throw ConfigError("config key 'n_values': counts must be >= 1");
    cfg.agent_counts.push_back(static_cast<int>(n));
  }
  if (cfg.agent_counts.empty()) {
    throw ConfigError("config key 'n_values': must list at least one count");
  }

  std::vector<double> fcfs_penalties;
  if (kv.count("fcfs_penalties")) {
    for (const std::string& tok :
         detail::split_list(kv.at("fcfs_penalties"))) {
      const double z = detail::parse_double("fcfs_penalties", tok);
      if (!(z >= 0.0)) {
        throw ConfigError("config key 'fcfs_penalties': penalties must be >= 0");
      }
      fcfs_penalties.push_back(z);
    }
  }

  cfg.mechanisms.clear();
  for (const std::string& tok : detail::split_list(require("mechanisms"))) {
    const std::string v = detail::lower(tok);
    if (v == "2bpb") {
      cfg.mechanisms.push_back({MechanismKind::two_bid, 0.0});
    } else if (v == "mplus1" || v == "m+1" || v == "mplus1price") {
      cfg.mechanisms.push_back({MechanismKind::mplus1, 0.0});
    } else if (v == "fcfs") {
      if (fcfs_penalties.empty()) {
        throw ConfigError(
            "config key 'fcfs_penalties': required when mechanisms include "
            "FCFS");
      }
      for (double z : fcfs_penalties) {
        cfg.mechanisms.push_back({MechanismKind::fcfs, z});
      }
    } else if (v == "firstbestwelfare") {
      cfg.mechanisms.push_back({MechanismKind::first_best_welfare, 0.0});
    } else if (v == "firstbestutilization") {
      cfg.mechanisms.push_back({MechanismKind::first_best_utilization, 0.0});
    } else {
      throw ConfigError(
          "config key 'mechanisms': expected 2BPB, MPlus1, FCFS, "
          "FirstBestWelfare or FirstBestUtilization, got '" + tok + "'");
    }
  }

  cfg.replicates = detail::parse_int("replicates", require("replicates"));
  if (cfg.replicates < 1) {
    throw ConfigError("config key 'replicates': must be >= 1");
  }
  cfg.seed = detail::parse_uint64("seed", require("seed"));
  if (kv.count("per_agent_stats")) {
    cfg.per_agent_stats =
        detail::parse_bool("per_agent_stats", kv.at("per_agent_stats"));
  }
  if (kv.count("fb_cipi_allow_transfers")) {
    cfg.fixed_cost_transfers = detail::parse_bool(
        "fb_cipi_allow_transfers", kv.at("fb_cipi_allow_transfers"));
  }
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

/// Formats with 9 significant digits (round-trip stable for regressions).
inline std::string format_sig9(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", x);
  return buf;
}

inline std::string mechanism_column(const ResultRow& row) {
  if (row.fcfs_penalty) {
    return row.mechanism + "(" + format_sig9(*row.fcfs_penalty) + ")";
  }
  return row.mechanism;
}

/// CSV with the stable header
/// n,mechanism,penalty,welfare_mean,welfare_se,utilization_mean,
/// utilization_se,revenue_mean,revenue_se. The penalty cell is empty on
/// non-FCFS rows.
inline std::string write_rows_csv(const std::vector<ResultRow>& rows) {
  std::ostringstream out;
  out << "n,mechanism,penalty,welfare_mean,welfare_se,utilization_mean,"
         "utilization_se,revenue_mean,revenue_se\n";
  for (const ResultRow& row : rows) {
    out << row.agent_count << ',' << row.mechanism << ','
        << (row.fcfs_penalty ? format_sig9(*row.fcfs_penalty) : "") << ','
        << format_sig9(row.welfare_mean) << ',' << format_sig9(row.welfare_se)
        << ',' << format_sig9(row.utilization_mean) << ','
        << format_sig9(row.utilization_se) << ','
        << format_sig9(row.revenue_mean) << ','
        << format_sig9(row.revenue_se) << '\n';
  }
  return out.str();
}

/// Per-agent companion CSV: one row per (agent index, result row) with the
/// FCFS penalty folded into the mechanism label, e.g. "FCFS(2.5)".
/// agent_index is 1-based, matching the fixed-array regime definitions.
inline std::string write_per_agent_csv(const std::vector<ResultRow>& rows) {
  std::ostringstream out;
  out << "agent_index,beta,betahat,mechanism,welfare_mean,usage_mean\n";
  for (const ResultRow& row : rows) {
    for (std::size_t i = 0; i < row.per_agent.size(); ++i) {
      const PerAgentStat& s = row.per_agent[i];
      out << (i + 1) << ',' << format_sig9(s.beta) << ','
          << format_sig9(s.betahat) << ',' << mechanism_column(row) << ','
          << format_sig9(s.welfare_mean) << ',' << format_sig9(s.usage_mean)
          << '\n';
    }
  }
  return out.str();
}

namespace detail {

/// Rounds through the 9-significant-digit text form so the JSON document
/// carries exactly the same precision as the CSV.
inline double round_sig9(double x) {
  return std::strtod(format_sig9(x).c_str(), nullptr);
}

}  // namespace detail

/// JSON document: an array of row objects mirroring ResultRow (per_agent is
/// present only when per-agent statistics were collected).
inline std::string write_rows_json(const std::vector<ResultRow>& rows) {
  nlohmann::json doc = nlohmann::json::array();
  for (const ResultRow& row : rows) {
    nlohmann::json j;
    j["n"] = row.agent_count;
    j["mechanism"] = row.mechanism;
    if (row.fcfs_penalty) {
      j["penalty"] = detail::round_sig9(*row.fcfs_penalty);
    } else {
      j["penalty"] = nullptr;
    }
    j["welfare_mean"] = detail::round_sig9(row.welfare_mean);
    j["welfare_se"] = detail::round_sig9(row.welfare_se);
    j["utilization_mean"] = detail::round_sig9(row.utilization_mean);
    j["utilization_se"] = detail::round_sig9(row.utilization_se);
    j["revenue_mean"] = detail::round_sig9(row.revenue_mean);
    j["revenue_se"] = detail::round_sig9(row.revenue_se);
    if (!row.per_agent.empty()) {
      nlohmann::json agents = nlohmann::json::array();
      for (std::size_t i = 0; i < row.per_agent.size(); ++i) {
        const PerAgentStat& s = row.per_agent[i];
        agents.push_back({{"agent_index", i + 1},
                          {"beta", detail::round_sig9(s.beta)},
                          {"betahat", detail::round_sig9(s.betahat)},
                          {"welfare_mean", detail::round_sig9(s.welfare_mean)},
                          {"usage_mean", detail::round_sig9(s.usage_mean)}});
      }
      j["per_agent"] = std::move(agents);
    }
    doc.push_back(std::move(j));
  }
  return doc.dump(2) + "\n";
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open output file '" + path + "'");
  out << text;
  if (!out) throw ConfigError("failed writing output file '" + path + "'");
}

/// Derives the per-agent companion path: results.csv -> results_agents.csv.
inline std::string per_agent_path(const std::string& out_path) {
  std::filesystem::path p(out_path);
  std::filesystem::path q = p.parent_path();
  q /= p.stem();
  return q.string() + "_agents" + p.extension().string();
}

/// Writes rows to out_path in the requested format ("csv" or "json"). CSV
/// runs with per-agent statistics additionally write the companion file next
/// to the main output; JSON embeds them inline.
inline void save_results(const std::vector<ResultRow>& rows,
                         const std::string& out_path,
                         const std::string& format) {
  const std::string f = detail::lower(detail::trim(format));
  const bool any_agents =
      std::any_of(rows.begin(), rows.end(), [](const ResultRow& r) {
        return !r.per_agent.empty();
      });
  if (f == "csv") {
    write_text_file(out_path, write_rows_csv(rows));
    if (any_agents) {
      write_text_file(per_agent_path(out_path), write_per_agent_csv(rows));
    }
  } else if (f == "json") {
    write_text_file(out_path, write_rows_json(rows));
  } else {
    throw ConfigError("output format must be 'csv' or 'json', got '" + format +
                      "'");
  }
}

}  // namespace plab
