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

#include <cstdlib>
#include <stdexcept>
#include <variant>
#include <vector>

#include "plab/simulation.hpp"

using namespace plab;

namespace {

bool rows_identical(const std::vector<ResultRow>& a,
                    const std::vector<ResultRow>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const ResultRow& x = a[k];
    const ResultRow& y = b[k];
    if (x.agent_count != y.agent_count || x.mechanism != y.mechanism ||
        x.fcfs_penalty != y.fcfs_penalty || x.welfare_mean != y.welfare_mean ||
        x.welfare_se != y.welfare_se ||
        x.utilization_mean != y.utilization_mean ||
        x.utilization_se != y.utilization_se ||
        x.revenue_mean != y.revenue_mean || x.revenue_se != y.revenue_se ||
        x.per_agent.size() != y.per_agent.size()) {
      return false;
    }
    for (std::size_t i = 0; i < x.per_agent.size(); ++i) {
      if (x.per_agent[i].beta != y.per_agent[i].beta ||
          x.per_agent[i].betahat != y.per_agent[i].betahat ||
          x.per_agent[i].welfare_mean != y.per_agent[i].welfare_mean ||
          x.per_agent[i].usage_mean != y.per_agent[i].usage_mean) {
        return false;
      }
    }
  }
  return true;
}

ExperimentConfig small_sweep() {
  ExperimentConfig cfg;
  cfg.population = {ModelFamily::exponential, 20.0, BiasRegime::naive};
  cfg.resources = 2;
  cfg.agent_counts = {4, 6};
  cfg.mechanisms = {{MechanismKind::two_bid, 0.0},
                    {MechanismKind::mplus1, 0.0},
                    {MechanismKind::fcfs, 1.0},
                    {MechanismKind::first_best_welfare, 0.0},
                    {MechanismKind::first_best_utilization, 0.0}};
  cfg.replicates = 2050;  // spans three scheduling chunks
  cfg.seed = 99;
  return cfg;
}

}  // namespace

TEST_CASE("population sampling always yields valid types within scale") {
  Rng rng(derive_seed({2026, 1}));
  for (ModelFamily family :
       {ModelFamily::fixed_cost, ModelFamily::exponential,
        ModelFamily::uniform}) {
    PopulationSpec spec{family, 10.0, BiasRegime::partially_naive};
    for (int k = 0; k < 2000; ++k) {
      const AgentType a = sample_agent(spec, 0, 1, rng);
      CHECK_NOTHROW(a.validate());
      CHECK(a.bias <= a.believed_bias);
      std::visit(detail::overloaded{
                     [&](const FixedCostModel& m) {
                       CHECK(a.future_value <= 10.0);
                       CHECK(m.cost < a.future_value);
                     },
                     [&](const ExponentialCostModel& m) {
                       CHECK(a.future_value * m.rate < 1.0);
                       CHECK(1.0 / m.rate <= 10.0);
                     },
                     [&](const UniformCostModel& m) {
                       CHECK(m.cost_cap <= 10.0);
                       CHECK(2.0 * a.future_value < m.cost_cap);
                     }},
                 a.model);
    }
  }
}

TEST_CASE("bias regimes map onto the documented relationships") {
  Rng rng(derive_seed({2026, 2}));
  const PopulationSpec base{ModelFamily::exponential, 20.0,
                            BiasRegime::rational};

  PopulationSpec spec = base;
  for (int k = 0; k < 100; ++k) {
    spec.regime = BiasRegime::rational;
    AgentType a = sample_agent(spec, 0, 4, rng);
    CHECK(a.bias == 1.0);
    CHECK(a.believed_bias == 1.0);

    spec.regime = BiasRegime::naive;
    a = sample_agent(spec, 0, 4, rng);
    CHECK(a.believed_bias == 1.0);

    spec.regime = BiasRegime::sophisticated;
    a = sample_agent(spec, 0, 4, rng);
    CHECK(a.bias == a.believed_bias);

    spec.regime = BiasRegime::partially_naive;
    a = sample_agent(spec, 0, 4, rng);
    CHECK(a.bias <= a.believed_bias);
    CHECK(a.believed_bias <= 1.0);
  }

  // Index-pinned arrays: bias ladders are exact functions of the index.
  spec.regime = BiasRegime::fixed_beta_array_sophisticated;
  Economy ladder = sample_economy(spec, 30, 5, rng);
  for (std::size_t i = 0; i < 30; ++i) {
    CHECK(ladder.agents[i].bias == (i + 1) / 30.0);
    CHECK(ladder.agents[i].believed_bias == ladder.agents[i].bias);
  }

  spec.regime = BiasRegime::fixed_beta_array_naive;
  ladder = sample_economy(spec, 30, 5, rng);
  for (std::size_t i = 0; i < 30; ++i) {
    CHECK(ladder.agents[i].bias == (i + 1) / 30.0);
    CHECK(ladder.agents[i].believed_bias == 1.0);
  }

  spec.regime = BiasRegime::fixed_naivete_array;
  ladder = sample_economy(spec, 30, 5, rng);
  for (std::size_t i = 0; i < 30; ++i) {
    CHECK(ladder.agents[i].bias == 0.5);
    CHECK(ladder.agents[i].believed_bias == 1.0 - 0.5 * (i + 1) / 30.0);
  }
  CHECK(ladder.agents[29].believed_bias == 0.5);
}

TEST_CASE("experiment results are reproducible and thread-count independent") {
  const ExperimentConfig cfg = small_sweep();
  const std::vector<ResultRow> first = run_experiment(cfg);
  const std::vector<ResultRow> second = run_experiment(cfg);
  REQUIRE(rows_identical(first, second));

  ExperimentConfig serial = cfg;
  serial.max_workers = 1;
  const std::vector<ResultRow> one_thread = run_experiment(serial);
  CHECK(rows_identical(first, one_thread));

  setenv("PENALTY_LAB_THREADS", "3", 1);
  const std::vector<ResultRow> capped = run_experiment(cfg);
  unsetenv("PENALTY_LAB_THREADS");
  CHECK(rows_identical(first, capped));

  ExperimentConfig reseeded = cfg;
  reseeded.seed = 100;
  CHECK_FALSE(rows_identical(first, run_experiment(reseeded)));
}

TEST_CASE("sweep rows carry the right labels, sizes, and error bars") {
  ExperimentConfig cfg = small_sweep();
  cfg.replicates = 300;
  const std::vector<ResultRow> rows = run_experiment(cfg);
  REQUIRE(rows.size() == cfg.agent_counts.size() * cfg.mechanisms.size());

  for (std::size_t s = 0; s < cfg.agent_counts.size(); ++s) {
    const std::size_t at = s * cfg.mechanisms.size();
    CHECK(rows[at].agent_count == cfg.agent_counts[s]);
    CHECK(rows[at].mechanism == "2BPB");
    CHECK(rows[at + 1].mechanism == "MPlus1");
    CHECK(rows[at + 2].mechanism == "FCFS");
    REQUIRE(rows[at + 2].fcfs_penalty.has_value());
    CHECK(*rows[at + 2].fcfs_penalty == 1.0);
    CHECK(rows[at + 3].mechanism == "FirstBestWelfare");
    CHECK(rows[at + 4].mechanism == "FirstBestUtilization");
    CHECK_FALSE(rows[at].fcfs_penalty.has_value());

    // Planner rows bound the mechanisms they benchmark.
    const double fb_welfare = rows[at + 3].welfare_mean;
    const double fb_util = rows[at + 4].utilization_mean;
    for (std::size_t j = 0; j < 3; ++j) {
      CHECK(rows[at + j].welfare_mean <= fb_welfare + 1e-9);
      CHECK(rows[at + j].utilization_mean <= fb_util + 1e-9);
    }
    CHECK(rows[at + 3].revenue_mean == 0.0);

    for (std::size_t j = 0; j < cfg.mechanisms.size(); ++j) {
      CHECK(rows[at + j].welfare_se >= 0.0);
      CHECK(rows[at + j].utilization_se >= 0.0);
      CHECK(rows[at + j].per_agent.empty());
    }
  }

  ExperimentConfig single = cfg;
  single.replicates = 1;
  for (const ResultRow& row : run_experiment(single)) {
    CHECK(row.welfare_se == 0.0);
    CHECK(row.utilization_se == 0.0);
    CHECK(row.revenue_se == 0.0);
  }
}

TEST_CASE("per-agent statistics track the pinned bias ladders") {
  ExperimentConfig cfg;
  cfg.population = {ModelFamily::exponential, 20.0,
                    BiasRegime::fixed_beta_array_sophisticated};
  cfg.resources = 2;
  cfg.agent_counts = {6};
  cfg.mechanisms = {{MechanismKind::two_bid, 0.0},
                    {MechanismKind::mplus1, 0.0}};
  cfg.replicates = 400;
  cfg.seed = 3;
  cfg.per_agent_stats = true;

  const std::vector<ResultRow> rows = run_experiment(cfg);
  REQUIRE(rows.size() == 2);
  for (const ResultRow& row : rows) {
    REQUIRE(row.per_agent.size() == 6);
    double usage_sum = 0.0;
    double welfare_sum = 0.0;
    for (std::size_t i = 0; i < 6; ++i) {
      CHECK(row.per_agent[i].beta ==
            Catch::Approx((i + 1) / 6.0).margin(1e-12));
      CHECK(row.per_agent[i].betahat ==
            Catch::Approx((i + 1) / 6.0).margin(1e-12));
      CHECK(row.per_agent[i].usage_mean >= 0.0);
      usage_sum += row.per_agent[i].usage_mean;
      welfare_sum += row.per_agent[i].welfare_mean;
    }
    // Per-agent columns decompose the aggregate columns.
    CHECK(usage_sum == Catch::Approx(row.utilization_mean).margin(1e-9));
    CHECK(welfare_sum == Catch::Approx(row.welfare_mean).margin(1e-9));
  }

  const std::vector<EquityRow> eq = equity_summary(rows);
  REQUIRE(eq.size() == rows.size());
  for (const EquityRow& row : eq) {
    CHECK(row.welfare_spread >= 0.0);
    CHECK(row.usage_spread >= 0.0);
    CHECK(row.by_index.size() == 6);
  }

  ExperimentConfig bare = cfg;
  bare.per_agent_stats = false;
  CHECK_THROWS_AS(equity_summary(run_experiment(bare)),
                  std::invalid_argument);
}

TEST_CASE("experiment configuration is validated before any work") {
  ExperimentConfig cfg = small_sweep();
  cfg.replicates = 0;
  CHECK_THROWS_AS(run_experiment(cfg), std::invalid_argument);

  cfg = small_sweep();
  cfg.agent_counts.clear();
  CHECK_THROWS_AS(run_experiment(cfg), std::invalid_argument);

  cfg = small_sweep();
  cfg.mechanisms.clear();
  CHECK_THROWS_AS(run_experiment(cfg), std::invalid_argument);

  cfg = small_sweep();
  cfg.mechanisms.push_back({MechanismKind::fcfs, -1.0});
  CHECK_THROWS_AS(run_experiment(cfg), std::invalid_argument);

  cfg = small_sweep();
  cfg.agent_counts = {0};
  CHECK_THROWS_AS(run_experiment(cfg), std::invalid_argument);

  cfg = small_sweep();
  cfg.population.scale = 0.0;
  CHECK_THROWS_AS(run_experiment(cfg), std::invalid_argument);
}

TEST_CASE("mechanism labels are stable identifiers") {
  CHECK(mechanism_label(MechanismKind::two_bid) == "2BPB");
  CHECK(mechanism_label(MechanismKind::mplus1) == "MPlus1");
  CHECK(mechanism_label(MechanismKind::fcfs) == "FCFS");
  CHECK(mechanism_label(MechanismKind::first_best_welfare) ==
        "FirstBestWelfare");
  CHECK(mechanism_label(MechanismKind::first_best_utilization) ==
        "FirstBestUtilization");
}
