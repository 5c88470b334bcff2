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

// Brute-force and numerical counterparts of every closed form in the library.
// Nothing here reuses the formula it is meant to check: utilities come from
// quadrature over the value distribution, suprema from grids, zero crossings
// from bisection, equilibrium claims from exhaustive deviation search, and
// outcome metrics from sampled show/no-show decisions.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "plab/agent_types.hpp"
#include "plab/lambert.hpp"
#include "plab/mechanisms.hpp"
#include "plab/metrics.hpp"
#include "plab/random.hpp"

namespace plab {

struct OracleConfig {
  int grid_points = 20001;
  double z_max_factor = 4.0;   // bracket growth when expanding a search range
  double quad_abs_tol = 1e-9;
  long long mc_samples = 1'000'000;
  std::uint64_t seed = 0;
};

namespace detail {

inline void check_oracle_config(const OracleConfig& cfg) {
  if (cfg.grid_points < 3 || !(cfg.quad_abs_tol > 0.0) ||
      !(cfg.z_max_factor > 1.0)) {
    throw std::invalid_argument("OracleConfig: grid_points >= 3, tolerances > 0");
  }
}

template <class F>
double simpson_rec(const F& f, double a, double fa, double b, double fb,
                   double m, double fm, double whole, double tol, int depth,
                   double& unresolved) {
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (std::abs(delta) <= 15.0 * tol || depth <= 0) {
    if (depth <= 0) unresolved += std::abs(delta) / 15.0;
    return left + right + delta / 15.0;
  }
  return simpson_rec(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1,
                     unresolved) +
         simpson_rec(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1,
                     unresolved);
}

/// Adaptive Simpson integration of f over [a, b] to absolute tolerance tol.
/// Splits that fail to converge within the depth budget report their
/// estimated leftover error through `unresolved`.
template <class F>
double integrate(F&& f, double a, double b, double tol, double& unresolved) {
  if (!(b > a)) return 0.0;
  const double m = 0.5 * (a + b);
  const double fa = f(a);
  const double fb = f(b);
  const double fm = f(m);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson_rec(f, a, fa, b, fb, m, fm, whole, tol, 48, unresolved);
}

inline void require_converged(double unresolved, const OracleConfig& cfg) {
  if (unresolved > 4.0 * cfg.quad_abs_tol) {
    throw std::runtime_error(
        "quadrature did not converge; achieved tolerance ~" +
        std::to_string(unresolved));
  }
}

/// Quadrature evaluation of the utility curve at penalty z with decision bias
/// b, through the kink-free rewriting
///   E[max(V + b w, -z)] + (1 - b) w P[V + b w >= -z],
/// integrating each smooth piece of the max separately.
inline double quad_utility_with_bias(const AgentType& a, double z, double b,
                                     const OracleConfig& cfg) {
  check_oracle_config(cfg);
  require_penalty(z, "quad_utility_with_bias");
  const double w = a.future_value;
  double unresolved = 0.0;
  const double tol = 0.25 * cfg.quad_abs_tol;
  const double result = std::visit(
      overloaded{
          [&](const FixedCostModel& m) {
            // Two-atom distribution: exact, no quadrature error.
            const double able = std::max(b * w - m.cost, -z);
            double v = m.availability * able +
                       (1.0 - m.availability) * (-z);  // unable: owes penalty
            if (b * w - m.cost >= -z) v += (1.0 - b) * w * m.availability;
            return v;
          },
          [&](const ExponentialCostModel& m) {
            const double kink = z + b * w;  // cost above which she walks away
            const double hi =
                kink + (60.0 + std::log1p(std::abs(z) + w)) / m.rate;
            const auto dens = [&](double x) {
              return m.rate * std::exp(-m.rate * x);
            };
            double v = integrate(
                [&](double x) { return (b * w - x) * dens(x); }, 0.0, kink,
                tol, unresolved);
            v += -z * integrate(dens, kink, hi, tol, unresolved);
            v += -z * std::exp(-m.rate * hi);  // truncated tail, still owes -z
            const double p_show = integrate(dens, 0.0, kink, tol, unresolved);
            return v + (1.0 - b) * w * p_show;
          },
          [&](const UniformCostModel& m) {
            const double cap = m.cost_cap;
            const double kink = std::clamp(-z - b * w, -cap, 0.0);
            const auto dens = [&](double) { return 1.0 / cap; };
            double v = integrate([&](double x) { return -z * dens(x); }, -cap,
                                 kink, tol, unresolved);
            v += integrate([&](double x) { return (x + b * w) * dens(x); },
                           kink, 0.0, tol, unresolved);
            const double p_show = integrate(dens, kink, 0.0, tol, unresolved);
            return v + (1.0 - b) * w * p_show;
          }},
      a.model);
  require_converged(unresolved, cfg);
  return result;
}

}  // namespace detail

/// Quadrature counterpart of subjective_utility.
inline double quad_subjective_utility(const AgentType& a, double z,
                                      const OracleConfig& cfg) {
  return detail::quad_utility_with_bias(a, z, a.believed_bias, cfg);
}

/// Quadrature counterpart of expected_utility.
inline double quad_expected_utility(const AgentType& a, double z,
                                    const OracleConfig& cfg) {
  return detail::quad_utility_with_bias(a, z, a.bias, cfg);
}

/// Quadrature counterpart of welfare_at_penalty:
/// E[(V + w) 1{V >= -z - bias w}] over the value distribution.
inline double quad_welfare(const AgentType& a, double z,
                           const OracleConfig& cfg) {
  detail::check_oracle_config(cfg);
  detail::require_penalty(z, "quad_welfare");
  const double w = a.future_value;
  const double b = a.bias;
  double unresolved = 0.0;
  const double tol = 0.5 * cfg.quad_abs_tol;
  const double result = std::visit(
      detail::overloaded{
          [&](const FixedCostModel& m) {
            if (-m.cost >= -z - b * w) return (w - m.cost) * m.availability;
            return 0.0;
          },
          [&](const ExponentialCostModel& m) {
            const double lim = z + b * w;  // shows iff cost <= lim
            return detail::integrate(
                [&](double x) { return (w - x) * m.rate * std::exp(-m.rate * x); },
                0.0, lim, tol, unresolved);
          },
          [&](const UniformCostModel& m) {
            const double lo = std::clamp(-z - b * w, -m.cost_cap, 0.0);
            return detail::integrate(
                [&](double v) { return (v + w) / m.cost_cap; }, lo, 0.0, tol,
                unresolved);
          }},
      a.model);
  detail::require_converged(unresolved, cfg);
  return result;
}

/// Quadrature/measure counterpart of show_prob.
inline double quad_show_prob(const AgentType& a, double z, bool believed,
                             const OracleConfig& cfg) {
  detail::check_oracle_config(cfg);
  const double b = believed ? a.believed_bias : a.bias;
  const double w = a.future_value;
  double unresolved = 0.0;
  const double tol = 0.5 * cfg.quad_abs_tol;
  const double result = std::visit(
      detail::overloaded{
          [&](const FixedCostModel& m) {
            return -m.cost >= -z - b * w ? m.availability : 0.0;
          },
          [&](const ExponentialCostModel& m) {
            const double lim = z + b * w;
            return detail::integrate(
                [&](double x) { return m.rate * std::exp(-m.rate * x); }, 0.0,
                lim, tol, unresolved);
          },
          [&](const UniformCostModel& m) {
            const double lo = std::clamp(-z - b * w, -m.cost_cap, 0.0);
            return -lo / m.cost_cap;
          }},
      a.model);
  detail::require_converged(unresolved, cfg);
  return std::clamp(result, 0.0, 1.0);
}

namespace detail {

/// Search range that comfortably contains the zero crossing of the sup
/// utility curve for every valid type.
inline double bracket_bound(const AgentType& a) {
  const double w = a.future_value;
  const double bh = a.believed_bias;
  return std::visit(
      overloaded{
          [&](const FixedCostModel& m) {
            const double zhat =
                (w - m.cost) * m.availability / (1.0 - m.availability);
            return 2.0 * zhat + m.cost + 1.0;
          },
          [&](const ExponentialCostModel& m) {
            const double s = m.rate * w;
            double z0 =
                -bh * w + std::log((1.0 - s * (1.0 - bh)) / (1.0 - s)) / m.rate;
            if (!std::isfinite(z0)) z0 = 50.0 / m.rate;
            return 2.0 * std::max(z0, 0.0) + 1.0;
          },
          [&](const UniformCostModel& m) { return m.cost_cap + 1.0; }},
      a.model);
}

}  // namespace detail

struct GridSupResult {
  double value = 0.0;
  double argmax = 0.0;  // smallest grid point attaining the supremum
};

/// Grid maximization of the subjective utility curve over [z_min, Z], with a
/// model-specific bound Z, local refinement around the incumbent, and exact
/// probes at z_min and at the fixed-cost jump point (where the supremum of
/// that curve always sits, so the grid answer is exact for that model).
inline GridSupResult grid_sup(const AgentType& a, double z_min,
                              const OracleConfig& cfg) {
  detail::check_oracle_config(cfg);
  detail::require_penalty(z_min, "grid_sup");
  a.validate();

  GridSupResult best{-std::numeric_limits<double>::infinity(), z_min};
  const auto consider = [&](double z) {
    if (z < z_min || !std::isfinite(z)) return;
    const double v = subjective_utility(a, z);
    if (v > best.value || (v == best.value && z < best.argmax)) {
      best.value = v;
      best.argmax = z;
    }
  };

  consider(z_min);
  if (const auto* m = std::get_if<FixedCostModel>(&a.model)) {
    const double jump = detail::fixed_cost_jump(*m, a, a.believed_bias);
    const double delta = 1e-9 * (1.0 + std::abs(jump));
    consider(jump - delta);  // one-sided limit probe
    consider(jump);
    consider(jump + delta);
  }

  const double hi = std::max(detail::bracket_bound(a), z_min + 1.0);
  const int points = std::max(cfg.grid_points, 3);
  double h = (hi - z_min) / (points - 1);
  for (int k = 0; k < points; ++k) consider(z_min + k * h);

  for (int round = 0; round < 3; ++round) {
    const double center = best.argmax;
    const double lo = std::max(z_min, center - h);
    const int fine = 100;
    h = 2.0 * h / fine;
    for (int k = 0; k <= fine; ++k) consider(lo + k * h);
  }
  return best;
}

/// Bisection on the sign of the grid-sup curve: returns the penalty where the
/// best achievable subjective utility crosses zero. Errors if the curve never
/// turns negative inside the expanding bracket (an invariant violation).
inline double numeric_zero_crossing(const AgentType& a,
                                    const OracleConfig& cfg) {
  detail::check_oracle_config(cfg);
  const auto sup_at = [&](double z) { return grid_sup(a, z, cfg).value; };
  if (sup_at(0.0) < 0.0) {
    throw std::runtime_error(
        "numeric_zero_crossing: sup utility negative at 0");
  }
  double lo = 0.0;
  double hi = detail::bracket_bound(a);
  for (int guard = 0; sup_at(hi) >= 0.0; ++guard) {
    if (guard > 64) {
      throw std::runtime_error("numeric_zero_crossing: no sign change found");
    }
    lo = hi;
    hi *= cfg.z_max_factor;
  }
  for (int iter = 0; iter < 200 && hi - lo > 1e-9 * (1.0 + hi); ++iter) {
    const double mid = 0.5 * (lo + hi);
    (sup_at(mid) >= 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

/// Mechanisms a deviation search understands. The two-bid variant searches
/// both rounds; the auction and contingent-second-price variants are single
/// round.
enum class BidMechanism { two_bid, mplus1, gcsp };

/// Everything a deviation sweep learned about one agent. profile_values is
/// the full value matrix (profiles x candidate bids, deviation-favorable tie
/// handling) so callers can certify non-existence results, not just optimal
/// play. weakly_optimal means no tested deviation beat the prescribed
/// strategy by more than 1e-9 on any profile.
struct BestResponseReport {
  double prescribed_bid = 0.0;
  double best_bid = 0.0;
  double best_value = 0.0;
  double max_gain = 0.0;
  bool weakly_optimal = true;
  std::vector<double> bid_grid;                     // grid actually searched
  std::vector<std::vector<double>> profile_values;  // [profile][bid]
  std::vector<double> profile_best_bid;
};

namespace detail {

struct ProfileEval {
  double clearing = 0.0;  // (m+1)th highest bid when agent i is allocated
  int above = 0;          // opponents bidding strictly above b
  int tied = 0;           // opponents matching b exactly
};

inline ProfileEval classify(const std::vector<double>& opp, double b,
                            std::size_t m) {
  ProfileEval pe;
  for (double o : opp) {
    if (o > b) ++pe.above;
    if (o == b) ++pe.tied;
  }
  // When i is allocated the (m+1)th highest of all bids is the m-th highest
  // opponent bid, independent of b.
  if (opp.size() >= m) {
    std::vector<double> sorted(opp);
    std::nth_element(sorted.begin(), sorted.begin() + (m - 1), sorted.end(),
                     std::greater<>());
    pe.clearing = sorted[m - 1];
  }
  return pe;
}

}  // namespace detail

/// Exhaustive deviation check for agent i: evaluates her subjective expected
/// utility for every bid in the grid against 32 seeded random opponent
/// profiles plus adversarial profiles that pin the clearing bid just below,
/// at, and just above her fixed-cost jump point and her maximum acceptable
/// penalty. Two-bid deviations get the best second-round response (grid sup
/// above the induced floor); the prescribed strategy is scored with its
/// closed-form second bid and loses ties, so a reported gain is never an
/// artifact of tie-breaking.
inline BestResponseReport best_response_search(const Economy& e, std::size_t i,
                                               BidMechanism mech,
                                               const std::vector<double>& bid_grid,
                                               const OracleConfig& cfg) {
  detail::check_oracle_config(cfg);
  e.validate();
  const std::size_t n = e.agents.size();
  const std::size_t m = static_cast<std::size_t>(e.resources);
  if (i >= n) throw std::invalid_argument("best_response_search: bad index");
  if (n > 8) {
    throw std::invalid_argument(
        "best_response_search: exhaustive search is for small economies");
  }
  const AgentType& agent = e.agents[i];

  BestResponseReport rep;
  rep.prescribed_bid = mech == BidMechanism::mplus1
                           ? sp_bid(agent)
                           : (participates(agent)
                                  ? max_acceptable_penalty(agent)
                                  : 0.0);

  // Candidate bids: caller grid plus the prescribed bid and boundary probes.
  rep.bid_grid = bid_grid;
  rep.bid_grid.push_back(rep.prescribed_bid);
  rep.bid_grid.push_back(0.0);
  const double z0 = max_acceptable_penalty(agent);
  for (double t : {z0, max_acceptable_penalty(agent) * 0.5}) {
    rep.bid_grid.push_back(t);
  }
  if (const auto* fc = std::get_if<FixedCostModel>(&agent.model)) {
    rep.bid_grid.push_back(
        std::max(0.0, detail::fixed_cost_jump(*fc, agent, agent.believed_bias)));
  }
  std::sort(rep.bid_grid.begin(), rep.bid_grid.end());
  rep.bid_grid.erase(
      std::remove_if(rep.bid_grid.begin(), rep.bid_grid.end(),
                     [](double b) { return !std::isfinite(b) || b < 0.0; }),
      rep.bid_grid.end());
  rep.bid_grid.erase(std::unique(rep.bid_grid.begin(), rep.bid_grid.end()),
                     rep.bid_grid.end());

  // Opponent profiles.
  std::vector<std::vector<double>> profiles;
  double ref = 1.0 + z0;
  for (std::size_t k = 0; k < n; ++k) {
    if (k == i) continue;
    const AgentType& o = e.agents[k];
    ref = std::max(ref, 1.0 + (mech == BidMechanism::mplus1
                                   ? sp_bid(o)
                                   : max_acceptable_penalty(o)));
  }
  Rng rng(derive_seed({cfg.seed, 0x62725f70726f66ull, i}));
  for (int k = 0; k < 32; ++k) {
    std::vector<double> prof(n - 1);
    for (double& b : prof) b = rng.uniform(0.0, 1.25 * ref);
    profiles.push_back(std::move(prof));
  }
  std::vector<double> targets{0.0, 0.5 * z0, z0};
  if (const auto* fc = std::get_if<FixedCostModel>(&agent.model)) {
    targets.push_back(
        std::max(0.0, detail::fixed_cost_jump(*fc, agent, agent.believed_bias)));
  }
  for (double t : std::vector<double>(targets)) {
    const double eps = 1e-6 * (1.0 + t);
    targets.push_back(std::max(0.0, t - eps));
    targets.push_back(t + eps);
  }
  if (n >= 2) {
    for (double t : targets) {
      // m-1 opponents bid out of reach, one pins the clearing bid at t.
      std::vector<double> prof(n - 1, 0.0);
      std::size_t slot = 0;
      for (; slot + 1 < m && slot < n - 1; ++slot) prof[slot] = 10.0 * ref;
      if (slot < n - 1) prof[slot] = t;
      profiles.push_back(std::move(prof));
    }
  }

  // Continuation values per profile. The clearing bid does not depend on the
  // deviation, so one evaluation per profile covers the whole grid.
  const auto value_if_allocated = [&](double clearing,
                                      bool best_second) -> double {
    switch (mech) {
      case BidMechanism::two_bid:
        if (best_second) return grid_sup(agent, clearing, cfg).value;
        return subjective_utility(agent,
                                  preferred_penalty(agent, clearing));
      case BidMechanism::mplus1:
        return subjective_utility(agent, 0.0) - clearing;
      case BidMechanism::gcsp:
        return subjective_utility(agent, clearing);
    }
    return 0.0;
  };

  // A declined allocation is worth exactly 0; that is the whole strategy of
  // an agent who participates in nothing (negative utility at any positive
  // penalty), and the mechanism skips her accordingly.
  const bool in_market =
      mech == BidMechanism::mplus1 || participates(agent);

  double best_prescribed = -std::numeric_limits<double>::infinity();
  for (const std::vector<double>& opp : profiles) {
    std::vector<double> row;
    row.reserve(rep.bid_grid.size());

    const auto eval_bid = [&](double b, bool deviation) -> double {
      const detail::ProfileEval pe = detail::classify(opp, b, m);
      if (static_cast<std::size_t>(pe.above) >= m) return 0.0;  // never wins
      const double v =
          value_if_allocated(opp.size() >= m ? pe.clearing : 0.0, deviation);
      const bool sure_win =
          static_cast<std::size_t>(pe.above + pe.tied) < m;
      if (sure_win) return v;
      // Tie-dependent allocation: deviations get the favorable resolution,
      // the prescribed strategy the unfavorable one.
      return deviation ? std::max(v, 0.0) : std::min(v, 0.0);
    };

    const double prescribed_value =
        in_market ? eval_bid(rep.prescribed_bid, false) : 0.0;
    best_prescribed = std::max(best_prescribed, prescribed_value);
    double profile_best = -std::numeric_limits<double>::infinity();
    double profile_best_bid = rep.bid_grid.empty() ? 0.0 : rep.bid_grid.front();
    for (double b : rep.bid_grid) {
      const double v = eval_bid(b, true);
      row.push_back(v);
      if (v > profile_best) {
        profile_best = v;
        profile_best_bid = b;
      }
    }
    rep.profile_values.push_back(std::move(row));
    rep.profile_best_bid.push_back(profile_best_bid);

    const double gain = profile_best - prescribed_value;
    if (gain > rep.max_gain) {
      rep.max_gain = gain;
      rep.best_bid = profile_best_bid;
      rep.best_value = profile_best;
    }
  }
  rep.weakly_optimal = rep.max_gain <= 1e-9;
  if (rep.max_gain <= 0.0) {
    rep.best_bid = rep.prescribed_bid;
    rep.best_value = best_prescribed;
  }
  return rep;
}

/// Sample means and standard errors from simulating an outcome's period-1
/// show/no-show draws.
struct McMetrics {
  double utilization_mean = 0.0;
  double utilization_se = 0.0;
  double welfare_mean = 0.0;
  double welfare_se = 0.0;
  double revenue_mean = 0.0;
  double revenue_se = 0.0;
};

/// Monte Carlo validation of evaluate(): draws realized use values, applies
/// each allocated agent's true-bias decision rule (ties in favor of using),
/// and tallies realized utilization, welfare, and revenue.
inline McMetrics mc_outcome_check(const Economy& e, const MechanismOutcome& o,
                                  const OracleConfig& cfg) {
  detail::check_oracle_config(cfg);
  if (cfg.mc_samples < 10'000) {
    throw std::invalid_argument("mc_outcome_check: need >= 1e4 samples");
  }
  e.validate();
  if (o.payments.size() != e.agents.size()) {
    throw std::invalid_argument("mc_outcome_check: inconsistent outcome");
  }

  Rng rng(derive_seed({cfg.seed, 0x6d635f636865636bull}));
  const long long reps = cfg.mc_samples;
  double s_u = 0.0, s_u2 = 0.0, s_w = 0.0, s_w2 = 0.0, s_r = 0.0, s_r2 = 0.0;
  for (long long rep = 0; rep < reps; ++rep) {
    double util = 0.0, welf = 0.0, rev = 0.0;
    for (std::size_t i : o.allocated) {
      const AgentType& a = e.agents[i];
      const TwoPartPayment& pay = o.payments[i];
      const std::optional<double> v = sample_immediate_value(a, rng);
      const bool uses =
          v.has_value() && *v >= -pay.penalty - a.bias * a.future_value;
      rev += pay.base;
      if (uses) {
        util += 1.0;
        welf += *v + a.future_value;
      } else {
        rev += pay.penalty;
      }
    }
    s_u += util;
    s_u2 += util * util;
    s_w += welf;
    s_w2 += welf * welf;
    s_r += rev;
    s_r2 += rev * rev;
  }

  const auto finish = [reps](double s, double s2, double& mean, double& se) {
    mean = s / reps;
    const double var = std::max(0.0, (s2 - reps * mean * mean) / (reps - 1));
    se = std::sqrt(var / reps);
  };
  McMetrics mc;
  finish(s_u, s_u2, mc.utilization_mean, mc.utilization_se);
  finish(s_w, s_w2, mc.welfare_mean, mc.welfare_se);
  finish(s_r, s_r2, mc.revenue_mean, mc.revenue_se);
  return mc;
}

}  // namespace plab
