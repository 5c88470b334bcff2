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
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "plab/random.hpp"

namespace plab {

// An agent holds the right to use a resource in a two-period setting. In
// period 0 she bids; in period 1 a private use value V (always <= 0 here, an
// opportunity cost) realizes and she chooses between using the resource,
// which yields V now plus a known continuation value w later, and walking
// away, which costs her the no-show penalty z agreed in period 0. A
// present-biased agent discounts everything beyond period 1 by her bias
// factor, so she uses the resource iff V >= -z - bias * w, ties in favor of
// using. Her period-0 self may believe in a different (higher) bias factor.

/// Two-point use value: the agent is able to show with probability
/// `availability`, at a fixed opportunity `cost` when able. Otherwise she
/// cannot use the resource at any price.
struct FixedCostModel {
  double cost = 0.0;          // opportunity cost when able, >= 0
  double availability = 0.0;  // probability of being able to show, in (0,1)
};

/// Opportunity cost ~ Exp(rate): the use value is -Exp(rate).
struct ExponentialCostModel {
  double rate = 0.0;  // > 0, units 1/currency
};

/// Opportunity cost uniform on [0, cost_cap]: use value ~ U[-cost_cap, 0].
struct UniformCostModel {
  double cost_cap = 0.0;  // support width, > 0
};

using ValueModel =
    std::variant<FixedCostModel, ExponentialCostModel, UniformCostModel>;

/// One agent's private type.
///
/// Invariants, checked by validate():
///  - 0 <= bias <= believed_bias <= 1;
///  - the option has positive value: fixed-cost needs future_value > cost,
///    the continuous models need future_value > 0;
///  - using the resource is unattractive without the continuation value:
///    exponential needs future_value < 1/rate, uniform needs
///    future_value < cost_cap / 2 (automatic for fixed-cost, where the agent
///    may be unable to show at all).
struct AgentType {
  ValueModel model;
  double future_value = 0.0;  // continuation value w, realized after use
  double bias = 1.0;          // true present-bias factor
  double believed_bias = 1.0; // what her period-0 self believes the factor is

  void validate() const;
};

/// An ordered set of agents competing for identical resources. More
/// resources than agents is allowed; the surplus goes unassigned.
struct Economy {
  std::vector<AgentType> agents;
  int resources = 1;

  void validate() const;
};

namespace detail {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

}  // namespace detail

inline void AgentType::validate() const {
  if (!(bias >= 0.0 && bias <= believed_bias && believed_bias <= 1.0)) {
    throw std::invalid_argument(
        "AgentType: need 0 <= bias <= believed_bias <= 1");
  }
  if (!std::isfinite(future_value) || future_value < 0.0) {
    throw std::invalid_argument(
        "AgentType: future_value must be finite and >= 0");
  }
  std::visit(
      detail::overloaded{
          [&](const FixedCostModel& m) {
            if (!std::isfinite(m.cost) || m.cost < 0.0) {
              throw std::invalid_argument(
                  "FixedCostModel: cost must be finite and >= 0");
            }
            if (!(m.availability > 0.0 && m.availability < 1.0)) {
              throw std::invalid_argument(
                  "FixedCostModel: availability must lie strictly in (0,1)");
            }
            if (!(future_value > m.cost)) {
              throw std::invalid_argument(
                  "FixedCostModel: future_value must exceed cost");
            }
          },
          [&](const ExponentialCostModel& m) {
            if (!std::isfinite(m.rate) || !(m.rate > 0.0)) {
              throw std::invalid_argument(
                  "ExponentialCostModel: rate must be finite and > 0");
            }
            if (!(future_value > 0.0 && future_value * m.rate < 1.0)) {
              throw std::invalid_argument(
                  "ExponentialCostModel: need 0 < future_value < 1/rate");
            }
          },
          [&](const UniformCostModel& m) {
            if (!std::isfinite(m.cost_cap) || !(m.cost_cap > 0.0)) {
              throw std::invalid_argument(
                  "UniformCostModel: cost_cap must be finite and > 0");
            }
            if (!(future_value > 0.0 && 2.0 * future_value < m.cost_cap)) {
              throw std::invalid_argument(
                  "UniformCostModel: need 0 < future_value < cost_cap/2");
            }
          }},
      model);
}

inline void Economy::validate() const {
  if (agents.empty()) throw std::invalid_argument("Economy: needs >= 1 agent");
  if (resources < 1) throw std::invalid_argument("Economy: needs >= 1 resource");
  for (const AgentType& a : agents) a.validate();
}

namespace detail {

inline void require_penalty(double z, const char* who) {
  if (!std::isfinite(z) || z < 0.0) {
    throw std::invalid_argument(std::string(who) +
                                ": penalty must be finite and >= 0");
  }
}

/// Expected utility at penalty z when the period-1 decision threshold uses
/// bias factor b: E[(V + w) 1{V >= -z - b w}] - z P[V < -z - b w].
/// With b = believed_bias this is the subjective curve the agent bids with;
/// with b = bias it is her actual expected utility.
inline double utility_with_bias(const AgentType& a, double z, double b) {
  const double w = a.future_value;
  return std::visit(
      overloaded{
          [&](const FixedCostModel& m) {
            if (z < m.cost - b * w) return -z;  // never shows even when able
            return (w - m.cost) * m.availability - z * (1.0 - m.availability);
          },
          [&](const ExponentialCostModel& m) {
            const double inv = 1.0 / m.rate;
            return w - inv +
                   std::exp(-m.rate * (z + b * w)) * (inv - (1.0 - b) * w);
          },
          [&](const UniformCostModel& m) {
            const double cap = m.cost_cap;
            const double t = z + b * w;  // show threshold depth
            if (t >= cap) return w - 0.5 * cap;
            return (t * (w - 0.5 * t) - z * (cap - t)) / cap;
          }},
      a.model);
}

/// The fixed-cost curve jumps upward at z = cost - b * future_value: below it
/// the agent never shows and simply owes the penalty with certainty.
inline double fixed_cost_jump(const FixedCostModel& m, const AgentType& a,
                              double b) {
  return m.cost - b * a.future_value;
}

}  // namespace detail

/// Probability the agent uses the resource at penalty z. With
/// believed = false the true bias drives the decision (what actually
/// happens); with believed = true it is the probability her period-0 self
/// expects. Negative z (a show-up reward) is allowed; it only occurs in
/// oracle-side probes.
inline double show_prob(const AgentType& a, double z, bool believed) {
  const double b = believed ? a.believed_bias : a.bias;
  const double w = a.future_value;
  return std::visit(
      detail::overloaded{
          [&](const FixedCostModel& m) {
            return z >= m.cost - b * w ? m.availability : 0.0;
          },
          [&](const ExponentialCostModel& m) {
            const double t = z + b * w;
            return t <= 0.0 ? 0.0 : 1.0 - std::exp(-m.rate * t);
          },
          [&](const UniformCostModel& m) {
            return std::clamp((z + b * w) / m.cost_cap, 0.0, 1.0);
          }},
      a.model);
}

/// Actual expected utility at penalty z (decision made with the true bias).
inline double expected_utility(const AgentType& a, double z) {
  detail::require_penalty(z, "expected_utility");
  return detail::utility_with_bias(a, z, a.bias);
}

/// Expected utility as the period-0 self evaluates it (believed bias).
/// Coincides with expected_utility for sophisticated agents.
inline double subjective_utility(const AgentType& a, double z) {
  detail::require_penalty(z, "subjective_utility");
  return detail::utility_with_bias(a, z, a.believed_bias);
}

/// sup over z >= z_min of subjective_utility(a, z). The fixed-cost curve has
/// one upward jump, so the supremum sits either at z_min or at the jump; the
/// exponential curve is strictly decreasing; the uniform curve is decreasing
/// up to an interior minimum that is never worth passing except to reach the
/// terminal plateau future_value - cost_cap/2 (itself negative under the
/// type invariants).
inline double sup_utility(const AgentType& a, double z_min) {
  detail::require_penalty(z_min, "sup_utility");
  const double at_min = detail::utility_with_bias(a, z_min, a.believed_bias);
  return std::visit(
      detail::overloaded{
          [&](const FixedCostModel& m) {
            const double jump =
                std::max(z_min, detail::fixed_cost_jump(m, a, a.believed_bias));
            return std::max(at_min,
                            detail::utility_with_bias(a, jump, a.believed_bias));
          },
          [&](const ExponentialCostModel&) { return at_min; },
          [&](const UniformCostModel& m) {
            return std::max(at_min, a.future_value - 0.5 * m.cost_cap);
          }},
      a.model);
}

/// Largest penalty the agent (as her period-0 self sees it) would still
/// accept: the zero-crossing of sup_utility. A fixed-cost agent whose jump
/// point lies beyond the crossing would lose at every positive penalty and
/// returns 0 (see participates()).
inline double max_acceptable_penalty(const AgentType& a) {
  const double w = a.future_value;
  const double bh = a.believed_bias;
  return std::visit(
      detail::overloaded{
          [&](const FixedCostModel& m) {
            const double zhat =
                (w - m.cost) * m.availability / (1.0 - m.availability);
            return detail::fixed_cost_jump(m, a, bh) <= zhat ? zhat : 0.0;
          },
          [&](const ExponentialCostModel& m) {
            const double s = m.rate * w;
            const double z0 =
                -bh * w + std::log((1.0 - s * (1.0 - bh)) / (1.0 - s)) / m.rate;
            return std::max(0.0, z0);
          },
          [&](const UniformCostModel& m) {
            const double cap = m.cost_cap;
            const double rest = (1.0 - bh) * w;
            const double z0 =
                cap - w - std::sqrt(cap * cap - 2.0 * cap * w + rest * rest);
            return std::max(0.0, z0);
          }},
      a.model);
}

/// Whether the agent is willing to take an allocation at all. False only for
/// a fixed-cost agent whose jump point exceeds her break-even penalty; such
/// an agent has negative subjective utility at every positive penalty.
inline bool participates(const AgentType& a) {
  if (const auto* m = std::get_if<FixedCostModel>(&a.model)) {
    const double zhat = (a.future_value - m->cost) * m->availability /
                        (1.0 - m->availability);
    return detail::fixed_cost_jump(*m, a, a.believed_bias) <= zhat;
  }
  return true;
}

/// Smallest maximizer of subjective_utility over [z_min, inf): the penalty
/// the agent picks when told it must be at least z_min. For the fixed-cost
/// model the only candidate beyond z_min is the jump point; the continuous
/// models never gain from raising the penalty below their zero-crossing.
inline double preferred_penalty(const AgentType& a, double z_min) {
  detail::require_penalty(z_min, "preferred_penalty");
  const double bh = a.believed_bias;
  return std::visit(
      detail::overloaded{
          [&](const FixedCostModel& m) {
            const double cand =
                std::max(z_min, detail::fixed_cost_jump(m, a, bh));
            return detail::utility_with_bias(a, z_min, bh) >=
                           detail::utility_with_bias(a, cand, bh)
                       ? z_min
                       : cand;
          },
          [&](const ExponentialCostModel&) { return z_min; },
          [&](const UniformCostModel& m) {
            const double plateau = a.future_value - 0.5 * m.cost_cap;
            if (detail::utility_with_bias(a, z_min, bh) >= plateau)
              return z_min;
            return std::max(z_min, m.cost_cap - bh * a.future_value);
          }},
      a.model);
}

/// Dominant bid in the m+1th-price auction: the subjective value of winning
/// at a zero penalty.
inline double sp_bid(const AgentType& a) { return subjective_utility(a, 0.0); }

/// Draws one realized use value. An empty result is the fixed-cost "cannot
/// show" outcome, distinct from any finite value so no arithmetic ever
/// touches infinities.
inline std::optional<double> sample_immediate_value(const AgentType& a,
                                                    Rng& rng) {
  return std::visit(
      detail::overloaded{
          [&](const FixedCostModel& m) -> std::optional<double> {
            if (rng.uniform() < m.availability) return -m.cost;
            return std::nullopt;
          },
          [&](const ExponentialCostModel& m) -> std::optional<double> {
            return -rng.exponential(m.rate);
          },
          [&](const UniformCostModel& m) -> std::optional<double> {
            return rng.uniform(-m.cost_cap, 0.0);
          }},
      a.model);
}

}  // namespace plab
