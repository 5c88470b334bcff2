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

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "plab/agent_types.hpp"
#include "plab/mechanisms.hpp"
#include "plab/metrics.hpp"
#include "plab/random.hpp"

namespace plab {

enum class ModelFamily { fixed_cost, exponential, uniform };

/// How bias pairs are assigned across a sampled population. The *_array
/// regimes pin bias deterministically by agent index (useful for equity
/// studies); the others draw it per agent.
enum class BiasRegime {
  rational,                      // bias = believed = 1
  naive,                         // bias ~ U[0,1], believed = 1
  sophisticated,                 // bias ~ U[0,1], believed = bias
  partially_naive,               // bias ~ U[0,1], believed ~ U[bias, 1]
  fixed_beta_array_naive,        // bias_i = i/n (1-based), believed = 1
  fixed_beta_array_sophisticated,// bias_i = i/n, believed = bias_i
  fixed_naivete_array,           // bias = 0.5, believed_i = 1 - 0.5 i/n
};

struct PopulationSpec {
  ModelFamily family = ModelFamily::exponential;
  double scale = 20.0;  // upper bound L of the primitive parameter draws
  BiasRegime regime = BiasRegime::naive;
};

namespace detail {

inline void assign_bias(AgentType& a, BiasRegime regime, std::size_t index,
                        std::size_t n, Rng& rng) {
  const double frac = static_cast<double>(index + 1) / static_cast<double>(n);
  switch (regime) {
    case BiasRegime::rational:
      a.bias = a.believed_bias = 1.0;
      break;
    case BiasRegime::naive:
      a.bias = rng.uniform();
      a.believed_bias = 1.0;
      break;
    case BiasRegime::sophisticated:
      a.bias = a.believed_bias = rng.uniform();
      break;
    case BiasRegime::partially_naive:
      a.bias = rng.uniform();
      a.believed_bias = rng.uniform(a.bias, 1.0);
      break;
    case BiasRegime::fixed_beta_array_naive:
      a.bias = frac;
      a.believed_bias = 1.0;
      break;
    case BiasRegime::fixed_beta_array_sophisticated:
      a.bias = a.believed_bias = frac;
      break;
    case BiasRegime::fixed_naivete_array:
      a.bias = 0.5;
      a.believed_bias = 1.0 - 0.5 * frac;
      break;
  }
}

inline bool valid_agent(const AgentType& a) {
  try {
    a.validate();
    return true;
  } catch (const std::invalid_argument&) {
    return false;
  }
}

}  // namespace detail

/// Draws one agent type from the population. Degenerate draws (zero values,
/// boundary probabilities, violations of the standing assumptions) are
/// rejection-resampled, so every returned agent satisfies the type
/// invariants.
inline AgentType sample_agent(const PopulationSpec& spec, std::size_t index,
                              std::size_t n, Rng& rng) {
  if (!(spec.scale > 0.0)) {
    throw std::invalid_argument("PopulationSpec: scale must be > 0");
  }
  for (int attempt = 0; attempt < 1000; ++attempt) {
    AgentType a;
    switch (spec.family) {
      case ModelFamily::fixed_cost: {
        a.future_value = rng.uniform(0.0, spec.scale);
        a.model = FixedCostModel{rng.uniform(0.0, a.future_value),
                                 rng.uniform()};
        break;
      }
      case ModelFamily::exponential: {
        const double inv_rate = rng.uniform(0.0, spec.scale);
        if (inv_rate <= 0.0) continue;
        a.future_value = rng.uniform(0.0, inv_rate);
        a.model = ExponentialCostModel{1.0 / inv_rate};
        break;
      }
      case ModelFamily::uniform: {
        const double cap = rng.uniform(0.0, spec.scale);
        a.future_value = rng.uniform(0.0, 0.5 * cap);
        a.model = UniformCostModel{cap};
        break;
      }
    }
    detail::assign_bias(a, spec.regime, index, n, rng);
    if (detail::valid_agent(a)) return a;
  }
  throw std::runtime_error("sample_agent: rejection sampling failed");
}

/// Draws a full economy of n agents and m resources.
inline Economy sample_economy(const PopulationSpec& spec, int n, int m,
                              Rng& rng) {
  if (n < 1 || m < 1) {
    throw std::invalid_argument("sample_economy: need n >= 1 and m >= 1");
  }
  Economy e;
  e.resources = m;
  e.agents.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    e.agents.push_back(sample_agent(spec, static_cast<std::size_t>(i),
                                    static_cast<std::size_t>(n), rng));
  }
  return e;
}

enum class MechanismKind {
  two_bid,
  mplus1,
  fcfs,
  first_best_welfare,
  first_best_utilization,
};

struct MechanismChoice {
  MechanismKind kind = MechanismKind::two_bid;
  double fcfs_penalty = 0.0;  // meaningful only for fcfs
};

inline std::string mechanism_label(MechanismKind kind) {
  switch (kind) {
    case MechanismKind::two_bid: return "2BPB";
    case MechanismKind::mplus1: return "MPlus1";
    case MechanismKind::fcfs: return "FCFS";
    case MechanismKind::first_best_welfare: return "FirstBestWelfare";
    case MechanismKind::first_best_utilization: return "FirstBestUtilization";
  }
  return "?";
}

struct ExperimentConfig {
  PopulationSpec population;
  int resources = 5;
  std::vector<int> agent_counts;
  std::vector<MechanismChoice> mechanisms;
  long long replicates = 10'000;
  std::uint64_t seed = 1;
  bool per_agent_stats = false;
  /// First-best welfare option for fixed-cost agents (see FirstBestOptions).
  bool fixed_cost_transfers = false;
  /// 0 means automatic (hardware threads, capped by PENALTY_LAB_THREADS).
  int max_workers = 0;
};

struct PerAgentStat {
  double beta = 0.0;
  double betahat = 0.0;
  double welfare_mean = 0.0;
  double usage_mean = 0.0;
};

/// One aggregated sweep cell: (number of agents, mechanism), with means and
/// standard errors over replicates. fcfs_penalty is set only on FCFS rows.
struct ResultRow {
  int agent_count = 0;
  std::string mechanism;
  std::optional<double> fcfs_penalty;
  double welfare_mean = 0.0;
  double welfare_se = 0.0;
  double utilization_mean = 0.0;
  double utilization_se = 0.0;
  double revenue_mean = 0.0;
  double revenue_se = 0.0;
  std::vector<PerAgentStat> per_agent;  // empty unless per_agent_stats
};

namespace detail {

struct CellAccum {
  double w = 0.0, w2 = 0.0, u = 0.0, u2 = 0.0, r = 0.0, r2 = 0.0;
  std::vector<double> agent_welfare;
  std::vector<double> agent_usage;

  void add_outcome(double welfare, double util, double revenue) {
    w += welfare;
    w2 += welfare * welfare;
    u += util;
    u2 += util * util;
    r += revenue;
    r2 += revenue * revenue;
  }
  void merge(const CellAccum& o) {
    w += o.w; w2 += o.w2; u += o.u; u2 += o.u2; r += o.r; r2 += o.r2;
    for (std::size_t i = 0; i < agent_welfare.size(); ++i) {
      agent_welfare[i] += o.agent_welfare[i];
      agent_usage[i] += o.agent_usage[i];
    }
  }
};

struct ChunkAccum {
  std::vector<CellAccum> cells;       // one per mechanism choice
  std::vector<double> beta_sum;       // per agent index
  std::vector<double> betahat_sum;
};

inline std::uint64_t mechanism_stream_id(const MechanismChoice& mc) {
  return 100 + static_cast<std::uint64_t>(mc.kind) * 8 +
         (mc.kind == MechanismKind::fcfs
              ? detail::mix64(std::bit_cast<std::uint64_t>(mc.fcfs_penalty))
              : 0);
}

inline int worker_count(int cap) {
  unsigned hw = std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  long limit = static_cast<long>(hw);
  if (const char* env = std::getenv("PENALTY_LAB_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && v >= 1) limit = std::min(limit, v);
  }
  if (cap > 0) limit = std::min(limit, static_cast<long>(cap));
  return static_cast<int>(std::max(1L, limit));
}

inline void check_experiment_config(const ExperimentConfig& cfg) {
  if (cfg.replicates < 1) {
    throw std::invalid_argument("ExperimentConfig: replicates >= 1");
  }
  if (cfg.resources < 1) {
    throw std::invalid_argument("ExperimentConfig: resources >= 1");
  }
  if (cfg.agent_counts.empty()) {
    throw std::invalid_argument("ExperimentConfig: agent_counts must be set");
  }
  for (int n : cfg.agent_counts) {
    if (n < 1) throw std::invalid_argument("ExperimentConfig: agent counts >= 1");
  }
  if (cfg.mechanisms.empty()) {
    throw std::invalid_argument("ExperimentConfig: mechanisms must be set");
  }
  for (const MechanismChoice& mc : cfg.mechanisms) {
    if (mc.kind == MechanismKind::fcfs &&
        (!std::isfinite(mc.fcfs_penalty) || mc.fcfs_penalty < 0.0)) {
      throw std::invalid_argument("ExperimentConfig: FCFS penalties >= 0");
    }
  }
  if (!(cfg.population.scale > 0.0)) {
    throw std::invalid_argument("ExperimentConfig: population scale > 0");
  }
}

}  // namespace detail

/// Runs the full sweep: for every agent count and every replicate, samples
/// one economy (stream keyed on seed, sweep index, replicate, so any subset
/// can be recomputed), runs every configured mechanism and benchmark on that
/// same economy, and aggregates means and standard errors per cell.
///
/// Replicates are processed in fixed-size chunks whose partial sums are
/// merged in chunk order, so results are bit-identical no matter how many
/// worker threads run (PENALTY_LAB_THREADS caps them).
inline std::vector<ResultRow> run_experiment(const ExperimentConfig& cfg) {
  detail::check_experiment_config(cfg);
  constexpr std::uint64_t kEconomyStream = 1;
  constexpr std::uint64_t kArrivalStream = 2;
  constexpr long long kChunk = 1024;

  const std::size_t n_mech = cfg.mechanisms.size();
  const bool any_fcfs =
      std::any_of(cfg.mechanisms.begin(), cfg.mechanisms.end(),
                  [](const MechanismChoice& mc) {
                    return mc.kind == MechanismKind::fcfs;
                  });
  const FirstBestOptions fb_opts{cfg.fixed_cost_transfers};

  std::vector<ResultRow> rows;
  for (std::size_t sweep = 0; sweep < cfg.agent_counts.size(); ++sweep) {
    const int n = cfg.agent_counts[sweep];
    const std::size_t nn = static_cast<std::size_t>(n);
    const long long chunks = (cfg.replicates + kChunk - 1) / kChunk;

    std::vector<detail::ChunkAccum> partial(static_cast<std::size_t>(chunks));
    std::atomic<long long> next_chunk{0};
    std::exception_ptr failure;
    std::mutex failure_mu;

    const auto run_chunk = [&](long long c) {
      detail::ChunkAccum& acc = partial[static_cast<std::size_t>(c)];
      acc.cells.resize(n_mech);
      if (cfg.per_agent_stats) {
        for (detail::CellAccum& cell : acc.cells) {
          cell.agent_welfare.assign(nn, 0.0);
          cell.agent_usage.assign(nn, 0.0);
        }
        acc.beta_sum.assign(nn, 0.0);
        acc.betahat_sum.assign(nn, 0.0);
      }
      const long long lo = c * kChunk;
      const long long hi = std::min(cfg.replicates, lo + kChunk);
      for (long long rep = lo; rep < hi; ++rep) {
        const std::uint64_t r = static_cast<std::uint64_t>(rep);
        Rng econ_rng(derive_seed({cfg.seed, sweep, r, kEconomyStream}));
        const Economy economy =
            sample_economy(cfg.population, n, cfg.resources, econ_rng);

        std::vector<std::size_t> arrival;
        if (any_fcfs) {
          Rng arrival_rng(derive_seed({cfg.seed, sweep, r, kArrivalStream}));
          arrival = arrival_rng.permutation(nn);
        }
        if (cfg.per_agent_stats) {
          for (std::size_t i = 0; i < nn; ++i) {
            acc.beta_sum[i] += economy.agents[i].bias;
            acc.betahat_sum[i] += economy.agents[i].believed_bias;
          }
        }

        for (std::size_t j = 0; j < n_mech; ++j) {
          const MechanismChoice& mc = cfg.mechanisms[j];
          detail::CellAccum& cell = acc.cells[j];
          if (mc.kind == MechanismKind::first_best_welfare ||
              mc.kind == MechanismKind::first_best_utilization) {
            const Objective obj = mc.kind == MechanismKind::first_best_welfare
                                      ? Objective::welfare
                                      : Objective::utilization;
            const FirstBestResult fb = first_best(economy, obj, fb_opts);
            cell.add_outcome(fb.welfare, fb.utilization, 0.0);
            if (cfg.per_agent_stats) {
              for (std::size_t i : fb.allocated) {
                const detail::FirstBestEntry entry = detail::first_best_entry(
                    economy.agents[i], obj, fb_opts);
                cell.agent_welfare[i] += entry.welfare;
                cell.agent_usage[i] += entry.usage;
              }
            }
            continue;
          }

          MechanismOutcome out;
          switch (mc.kind) {
            case MechanismKind::two_bid: {
              Rng rng(derive_seed({cfg.seed, sweep, r,
                                   detail::mechanism_stream_id(mc)}));
              out = run_two_bid(economy, rng);
              break;
            }
            case MechanismKind::mplus1: {
              Rng rng(derive_seed({cfg.seed, sweep, r,
                                   detail::mechanism_stream_id(mc)}));
              out = run_mplus1_auction(economy, rng);
              break;
            }
            case MechanismKind::fcfs:
              out = run_fcfs(economy, mc.fcfs_penalty, arrival);
              break;
            default:
              break;
          }
          const OutcomeMetrics met = evaluate(economy, out);
          cell.add_outcome(met.welfare, met.utilization, met.revenue);
          if (cfg.per_agent_stats) {
            for (std::size_t i = 0; i < nn; ++i) {
              cell.agent_welfare[i] += met.per_agent[i].welfare;
              cell.agent_usage[i] += met.per_agent[i].usage;
            }
          }
        }
      }
    };

    const int workers = std::min<long long>(
        detail::worker_count(cfg.max_workers), std::max(1LL, chunks));
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int t = 0; t < workers; ++t) {
      pool.emplace_back([&] {
        for (;;) {
          const long long c = next_chunk.fetch_add(1);
          if (c >= chunks) return;
          try {
            run_chunk(c);
          } catch (...) {
            std::lock_guard<std::mutex> lock(failure_mu);
            if (!failure) failure = std::current_exception();
            return;
          }
        }
      });
    }
    for (std::thread& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);

    // Deterministic reduction in chunk order.
    detail::ChunkAccum total = std::move(partial.front());
    for (std::size_t c = 1; c < partial.size(); ++c) {
      for (std::size_t j = 0; j < n_mech; ++j) {
        total.cells[j].merge(partial[c].cells[j]);
      }
      if (cfg.per_agent_stats) {
        for (std::size_t i = 0; i < nn; ++i) {
          total.beta_sum[i] += partial[c].beta_sum[i];
          total.betahat_sum[i] += partial[c].betahat_sum[i];
        }
      }
    }

    const double reps = static_cast<double>(cfg.replicates);
    const auto se_of = [&](double s, double s2) {
      if (cfg.replicates < 2) return 0.0;
      const double mean = s / reps;
      const double var = std::max(0.0, (s2 - reps * mean * mean) / (reps - 1.0));
      return std::sqrt(var / reps);
    };
    for (std::size_t j = 0; j < n_mech; ++j) {
      const MechanismChoice& mc = cfg.mechanisms[j];
      const detail::CellAccum& cell = total.cells[j];
      ResultRow row;
      row.agent_count = n;
      row.mechanism = mechanism_label(mc.kind);
      if (mc.kind == MechanismKind::fcfs) row.fcfs_penalty = mc.fcfs_penalty;
      row.welfare_mean = cell.w / reps;
      row.welfare_se = se_of(cell.w, cell.w2);
      row.utilization_mean = cell.u / reps;
      row.utilization_se = se_of(cell.u, cell.u2);
      row.revenue_mean = cell.r / reps;
      row.revenue_se = se_of(cell.r, cell.r2);
      if (cfg.per_agent_stats) {
        row.per_agent.resize(nn);
        for (std::size_t i = 0; i < nn; ++i) {
          row.per_agent[i] = PerAgentStat{
              total.beta_sum[i] / reps, total.betahat_sum[i] / reps,
              cell.agent_welfare[i] / reps, cell.agent_usage[i] / reps};
        }
      }
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

/// Per-mechanism equity view of a per-agent run: the per-index means plus the
/// max-minus-min spread across indices. Requires rows produced with
/// per_agent_stats enabled.
struct EquityRow {
  int agent_count = 0;
  std::string mechanism;
  std::optional<double> fcfs_penalty;
  double welfare_spread = 0.0;
  double usage_spread = 0.0;
  std::vector<PerAgentStat> by_index;
};

inline std::vector<EquityRow> equity_summary(const std::vector<ResultRow>& rows) {
  std::vector<EquityRow> out;
  out.reserve(rows.size());
  for (const ResultRow& row : rows) {
    if (row.per_agent.empty()) {
      throw std::invalid_argument(
          "equity_summary: rows lack per-agent statistics");
    }
    EquityRow eq;
    eq.agent_count = row.agent_count;
    eq.mechanism = row.mechanism;
    eq.fcfs_penalty = row.fcfs_penalty;
    double w_lo = row.per_agent.front().welfare_mean, w_hi = w_lo;
    double u_lo = row.per_agent.front().usage_mean, u_hi = u_lo;
    for (const PerAgentStat& s : row.per_agent) {
      w_lo = std::min(w_lo, s.welfare_mean);
      w_hi = std::max(w_hi, s.welfare_mean);
      u_lo = std::min(u_lo, s.usage_mean);
      u_hi = std::max(u_hi, s.usage_mean);
    }
    eq.welfare_spread = w_hi - w_lo;
    eq.usage_spread = u_hi - u_lo;
    eq.by_index = row.per_agent;
    out.push_back(std::move(eq));
  }
  return out;
}

}  // namespace plab
