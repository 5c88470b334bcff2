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

#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "plab/experiment_io.hpp"

using namespace plab;
using Catch::Matchers::ContainsSubstring;

namespace {

std::string cfg_text(const std::map<std::string, std::string>& overrides = {},
                     const std::vector<std::string>& drop = {}) {
  std::map<std::string, std::string> kv{
      {"model_family", "Exponential"},
      {"L", "20"},
      {"bias_regime", "Naive"},
      {"m", "5"},
      {"n_values", "6, 10, 14"},
      {"mechanisms", "2BPB, FCFS, MPlus1, FirstBestWelfare"},
      {"fcfs_penalties", "5, 2.5"},
      {"replicates", "1000"},
      {"seed", "42"},
  };
  for (const auto& [k, v] : overrides) kv[k] = v;
  for (const std::string& k : drop) kv.erase(k);
  std::string text = "# sweep description\n";
  for (const auto& [k, v] : kv) text += k + " = " + v + "\n";
  return text;
}

std::vector<ResultRow> sample_rows() {
  ResultRow a;
  a.agent_count = 4;
  a.mechanism = "2BPB";
  a.welfare_mean = 0.5;
  a.welfare_se = 0.0125;
  a.utilization_mean = 0.75;
  a.utilization_se = 0.025;
  a.revenue_mean = 1.5;
  a.revenue_se = 0.0;

  ResultRow b;
  b.agent_count = 4;
  b.mechanism = "FCFS";
  b.fcfs_penalty = 2.5;
  b.welfare_mean = -0.125;
  b.welfare_se = 0.0;
  b.utilization_mean = 0.2;
  b.utilization_se = 0.0;
  b.revenue_mean = 2.5;
  b.revenue_se = 0.0;
  b.per_agent = {PerAgentStat{0.5, 1.0, 0.25, 0.125},
                 PerAgentStat{1.0, 1.0, 0.0, 0.0}};
  return {a, b};
}

}  // namespace

TEST_CASE("well-formed configs parse into the experiment structure") {
  const ExperimentConfig cfg = parse_config_text(cfg_text());
  CHECK(cfg.population.family == ModelFamily::exponential);
  CHECK(cfg.population.scale == 20.0);
  CHECK(cfg.population.regime == BiasRegime::naive);
  CHECK(cfg.resources == 5);
  CHECK(cfg.agent_counts == (std::vector<int>{6, 10, 14}));
  CHECK(cfg.replicates == 1000);
  CHECK(cfg.seed == 42);
  CHECK_FALSE(cfg.per_agent_stats);
  CHECK_FALSE(cfg.fixed_cost_transfers);

  // FCFS expands into one mechanism entry per posted penalty, in place.
  REQUIRE(cfg.mechanisms.size() == 5);
  CHECK(cfg.mechanisms[0].kind == MechanismKind::two_bid);
  CHECK(cfg.mechanisms[1].kind == MechanismKind::fcfs);
  CHECK(cfg.mechanisms[1].fcfs_penalty == 5.0);
  CHECK(cfg.mechanisms[2].kind == MechanismKind::fcfs);
  CHECK(cfg.mechanisms[2].fcfs_penalty == 2.5);
  CHECK(cfg.mechanisms[3].kind == MechanismKind::mplus1);
  CHECK(cfg.mechanisms[4].kind == MechanismKind::first_best_welfare);

  const ExperimentConfig flags = parse_config_text(cfg_text(
      {{"per_agent_stats", "true"}, {"fb_cipi_allow_transfers", "yes"}}));
  CHECK(flags.per_agent_stats);
  CHECK(flags.fixed_cost_transfers);

  const ExperimentConfig cipi = parse_config_text(cfg_text(
      {{"model_family", "cipi"}, {"mechanisms", "MPlus1"}}, {"fcfs_penalties"}));
  CHECK(cipi.population.family == ModelFamily::fixed_cost);
  CHECK(cipi.mechanisms.size() == 1);
}

TEST_CASE("bias-regime spellings select the documented variants") {
  const auto regime_of = [](const std::string& name) {
    return parse_config_text(cfg_text({{"bias_regime", name}}))
        .population.regime;
  };
  CHECK(regime_of("Rational") == BiasRegime::rational);
  CHECK(regime_of("sophisticated") == BiasRegime::sophisticated);
  CHECK(regime_of("PartiallyNaive") == BiasRegime::partially_naive);
  CHECK(regime_of("FixedBetaArray") ==
        BiasRegime::fixed_beta_array_sophisticated);
  CHECK(regime_of("FixedBetaArraySophisticated") ==
        BiasRegime::fixed_beta_array_sophisticated);
  CHECK(regime_of("FixedBetaArrayNaive") == BiasRegime::fixed_beta_array_naive);
  CHECK(regime_of("FixedNaiveteArray") == BiasRegime::fixed_naivete_array);
  CHECK_THROWS_AS(regime_of("Hyperbolic"), ConfigError);
}

TEST_CASE("config errors name the offending key") {
  CHECK_THROWS_WITH(parse_config_text(cfg_text({}, {"seed"})),
                    ContainsSubstring("seed"));
  CHECK_THROWS_WITH(parse_config_text(cfg_text({{"turbo", "on"}})),
                    ContainsSubstring("turbo"));
  CHECK_THROWS_WITH(parse_config_text(cfg_text({{"m", "0"}})),
                    ContainsSubstring("'m'"));
  CHECK_THROWS_WITH(parse_config_text(cfg_text({{"L", "-3"}})),
                    ContainsSubstring("'L'"));
  CHECK_THROWS_WITH(parse_config_text(cfg_text({{"replicates", "soon"}})),
                    ContainsSubstring("replicates"));
  CHECK_THROWS_WITH(parse_config_text(cfg_text({{"seed", "-1"}})),
                    ContainsSubstring("seed"));
  CHECK_THROWS_WITH(parse_config_text(cfg_text({{"n_values", "6, 0"}})),
                    ContainsSubstring("n_values"));
  CHECK_THROWS_WITH(parse_config_text(cfg_text({{"model_family", "Pareto"}})),
                    ContainsSubstring("model_family"));
  CHECK_THROWS_WITH(parse_config_text(cfg_text({{"mechanisms", "Lottery"}})),
                    ContainsSubstring("mechanisms"));
  CHECK_THROWS_WITH(parse_config_text(cfg_text({}, {"fcfs_penalties"})),
                    ContainsSubstring("fcfs_penalties"));
  CHECK_THROWS_WITH(
      parse_config_text(cfg_text({{"fcfs_penalties", "1, -2"}})),
      ContainsSubstring("fcfs_penalties"));
  CHECK_THROWS_WITH(parse_config_text(cfg_text({{"per_agent_stats", "maybe"}})),
                    ContainsSubstring("per_agent_stats"));
  CHECK_THROWS_WITH(parse_config_text(cfg_text() + "seed = 43\n"),
                    ContainsSubstring("more than once"));
  CHECK_THROWS_WITH(parse_config_text("model_family\n"),
                    ContainsSubstring("line 1"));
  CHECK_THROWS_AS(load_config("/nonexistent/profile.cfg"), ConfigError);
}

TEST_CASE("result tables serialize to the documented CSV layout") {
  const std::string csv = write_rows_csv(sample_rows());
  CHECK(csv ==
        "n,mechanism,penalty,welfare_mean,welfare_se,utilization_mean,"
        "utilization_se,revenue_mean,revenue_se\n"
        "4,2BPB,,0.5,0.0125,0.75,0.025,1.5,0\n"
        "4,FCFS,2.5,-0.125,0,0.2,0,2.5,0\n");

  const std::string agents = write_per_agent_csv(sample_rows());
  CHECK(agents ==
        "agent_index,beta,betahat,mechanism,welfare_mean,usage_mean\n"
        "1,0.5,1,FCFS(2.5),0.25,0.125\n"
        "2,1,1,FCFS(2.5),0,0\n");
}

TEST_CASE("numbers are written with nine significant digits") {
  CHECK(format_sig9(0.0) == "0");
  CHECK(format_sig9(2.5) == "2.5");
  CHECK(format_sig9(-0.125) == "-0.125");
  CHECK(format_sig9(1.0 / 3.0) == "0.333333333");
  CHECK(format_sig9(12345678912.0) == "1.23456789e+10");
  CHECK(format_sig9(0.00002) == "2e-05");
}

TEST_CASE("JSON output mirrors the rows and embeds per-agent data") {
  const nlohmann::json doc = nlohmann::json::parse(write_rows_json(sample_rows()));
  REQUIRE(doc.is_array());
  REQUIRE(doc.size() == 2);

  CHECK(doc[0]["n"] == 4);
  CHECK(doc[0]["mechanism"] == "2BPB");
  CHECK(doc[0]["penalty"].is_null());
  CHECK(doc[0]["welfare_mean"] == 0.5);
  CHECK(doc[0]["utilization_se"] == 0.025);
  CHECK_FALSE(doc[0].contains("per_agent"));

  CHECK(doc[1]["mechanism"] == "FCFS");
  CHECK(doc[1]["penalty"] == 2.5);
  REQUIRE(doc[1]["per_agent"].is_array());
  REQUIRE(doc[1]["per_agent"].size() == 2);
  CHECK(doc[1]["per_agent"][0]["agent_index"] == 1);
  CHECK(doc[1]["per_agent"][0]["beta"] == 0.5);
  CHECK(doc[1]["per_agent"][1]["usage_mean"] == 0.0);
}

TEST_CASE("per-agent companion paths sit next to the main output") {
  CHECK(per_agent_path("results.csv") == "results_agents.csv");
  CHECK(per_agent_path("out/run1.json") ==
        (std::filesystem::path("out") / "run1_agents.json").string());
  CHECK(per_agent_path("plain") == "plain_agents");
}

TEST_CASE("saving results writes the requested files") {
  namespace fs = std::filesystem;
  const fs::path dir =
      fs::temp_directory_path() / "penalty_lab_io_test";
  fs::create_directories(dir);
  const std::string out = (dir / "rows.csv").string();

  save_results(sample_rows(), out, "csv");
  REQUIRE(fs::exists(out));
  REQUIRE(fs::exists(per_agent_path(out)));
  {
    std::ifstream in(out);
    std::string header;
    std::getline(in, header);
    CHECK(header ==
          "n,mechanism,penalty,welfare_mean,welfare_se,utilization_mean,"
          "utilization_se,revenue_mean,revenue_se");
  }

  const std::string jout = (dir / "rows.json").string();
  save_results(sample_rows(), jout, "json");
  REQUIRE(fs::exists(jout));

  CHECK_THROWS_AS(save_results(sample_rows(), out, "parquet"), ConfigError);
  CHECK_THROWS_AS(
      save_results(sample_rows(), (dir / "missing" / "rows.csv").string(),
                   "csv"),
      ConfigError);
  fs::remove_all(dir);
}
