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
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "plab/agent_types.hpp"
#include "plab/lambert.hpp"
#include "plab/mechanisms.hpp"

namespace plab {

struct AgentMetrics {
  bool allocated = false;
  double usage = 0.0;                // probability of actually using the slot
  double welfare = 0.0;              // expected value created, payments excluded
  double subjective_utility = 0.0;   // as the period-0 self evaluates it
  double true_utility = 0.0;
};

/// Expectation-level outcome summary. utilization and welfare are the sums of
/// the per-agent columns; revenue is the expected total payment collected.
struct OutcomeMetrics {
  double utilization = 0.0;
  double welfare = 0.0;
  double revenue = 0.0;
  std::vector<AgentMetrics> per_agent;
};

/// Expected welfare contributed by one allocated agent at penalty z: the
/// value she and the system realize, E[(V + w) 1{V >= -z - bias w}], with the
/// show decision driven by her true bias. Payments are transfers and do not
/// appear here.
inline double welfare_at_penalty(const AgentType& a, double z) {
  detail::require_penalty(z, "welfare_at_penalty");
  const double w = a.future_value;
  const double b = a.bias;
  return std::visit(
      detail::overloaded{
          [&](const FixedCostModel& m) {
            if (z < m.cost - b * w) return 0.0;  // never shows
            return (w - m.cost) * m.availability;
          },
          [&](const ExponentialCostModel& m) {
            const double inv = 1.0 / m.rate;
            const double t = z + b * w;
            return w - inv + std::exp(-m.rate * t) * (inv - (1.0 - b) * w + z);
          },
          [&](const UniformCostModel& m) {
            const double t = z + b * w;
            if (t >= m.cost_cap) return w - 0.5 * m.cost_cap;
            return (t / m.cost_cap) * (w - 0.5 * t);
          }},
      a.model);
}

/// Expands a mechanism outcome into expected utilization, welfare, revenue
/// and per-agent statistics. Rejects outcomes inconsistent with the economy,
/// including any nonzero payment attached to a non-allocated agent.
inline OutcomeMetrics evaluate(const Economy& e, const MechanismOutcome& o) {
  e.validate();
  const std::size_t n = e.agents.size();
  if (o.payments.size() != n) {
    throw std::invalid_argument("evaluate: payments must cover every agent");
  }
  if (o.allocated.size() > static_cast<std::size_t>(e.resources)) {
    throw std::invalid_argument("evaluate: more allocations than resources");
  }
  std::vector<char> is_allocated(n, 0);
  std::size_t prev_plus1 = 0;
  for (std::size_t i : o.allocated) {
    if (i >= n || i + 1 <= prev_plus1) {
      throw std::invalid_argument(
          "evaluate: allocated indices must be ascending and in range");
    }
    prev_plus1 = i + 1;
    is_allocated[i] = 1;
  }

  OutcomeMetrics out;
  out.per_agent.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const TwoPartPayment& pay = o.payments[i];
    AgentMetrics& am = out.per_agent[i];
    if (!is_allocated[i]) {
      if (pay.base != 0.0 || pay.penalty != 0.0) {
        throw std::invalid_argument(
            "evaluate: non-allocated agents must have zero payments");
      }
      continue;
    }
    detail::require_penalty(pay.penalty, "evaluate");
    const AgentType& a = e.agents[i];
    am.allocated = true;
    am.usage = show_prob(a, pay.penalty, false);
    am.welfare = welfare_at_penalty(a, pay.penalty);
    am.subjective_utility = subjective_utility(a, pay.penalty) - pay.base;
    am.true_utility = expected_utility(a, pay.penalty) - pay.base;
    out.utilization += am.usage;
    out.welfare += am.welfare;
    out.revenue += pay.base + pay.penalty * (1.0 - am.usage);
  }
  return out;
}

enum class Objective { welfare, utilization };

struct FirstBestOptions {
  /// Welfare objective only: allow transfers that restore participation for
  /// fixed-cost agents whose jump point exceeds their break-even penalty, so
  /// their (w - cost) * availability counts unconditionally.
  bool fixed_cost_transfers = false;
};

/// A full-information planner's benchmark: per-agent optimal values for the
/// chosen objective, the best m agents, and the welfare/utilization the
/// resulting plan achieves (the off-objective column lets one report row
/// carry both coordinates).
struct FirstBestResult {
  double value = 0.0;                  // sum of chosen per-agent objective values
  std::vector<double> per_agent;       // objective value for every agent
  std::vector<std::size_t> allocated;  // chosen agents, ascending
  double welfare = 0.0;
  double utilization = 0.0;
};

namespace detail {

struct FirstBestEntry {
  double value = 0.0;
  double welfare = 0.0;
  double usage = 0.0;
};

/// Per-agent first best. Welfare peaks at penalty (1 - bias) w, where the
/// agent internalizes the full continuation value; utilization peaks at the
/// largest penalty that still leaves welfare nonnegative (found through
/// W_{-1} for the exponential model).
inline FirstBestEntry first_best_entry(const AgentType& a, Objective obj,
                                       const FirstBestOptions& opts) {
  const double w = a.future_value;
  return std::visit(
      overloaded{
          [&](const FixedCostModel& m) {
            FirstBestEntry fb;
            const double gain = (w - m.cost) * m.availability;
            if (obj == Objective::welfare) {
              if (participates(a) || opts.fixed_cost_transfers) {
                fb.value = fb.welfare = gain;
                fb.usage = m.availability;
              }
            } else {
              fb.value = fb.usage = m.availability;
              fb.welfare = gain;
            }
            return fb;
          },
          [&](const ExponentialCostModel& m) {
            FirstBestEntry fb;
            const double s = m.rate * w;
            if (obj == Objective::welfare) {
              fb.value = fb.welfare = w + (std::exp(-s) - 1.0) / m.rate;
              fb.usage = 1.0 - std::exp(-s);
            } else {
              const double arg = (s - 1.0) * std::exp(s - 1.0);
              fb.value = fb.usage =
                  1.0 - std::exp(1.0 - s + lambert_w_minus1(arg));
              fb.welfare = 0.0;
            }
            return fb;
          },
          [&](const UniformCostModel& m) {
            FirstBestEntry fb;
            if (obj == Objective::welfare) {
              fb.value = fb.welfare = w * w / (2.0 * m.cost_cap);
              fb.usage = w / m.cost_cap;
            } else {
              fb.value = fb.usage = 2.0 * w / m.cost_cap;
              fb.welfare = 0.0;
            }
            return fb;
          }},
      a.model);
}

}  // namespace detail

inline FirstBestResult first_best(const Economy& e, Objective obj,
                                  const FirstBestOptions& opts = {}) {
  e.validate();
  const std::size_t n = e.agents.size();
  const std::size_t m = static_cast<std::size_t>(e.resources);

  std::vector<detail::FirstBestEntry> entries(n);
  FirstBestResult out;
  out.per_agent.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    entries[i] = detail::first_best_entry(e.agents[i], obj, opts);
    out.per_agent[i] = entries[i].value;
  }

  std::vector<std::size_t> order = detail::all_indices(n);
  std::sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) {
    if (out.per_agent[l] != out.per_agent[r]) {
      return out.per_agent[l] > out.per_agent[r];
    }
    return l < r;  // deterministic; value ties carry no welfare consequence
  });
  order.resize(std::min(m, n));
  std::sort(order.begin(), order.end());
  out.allocated = std::move(order);
  for (std::size_t i : out.allocated) {
    out.value += out.per_agent[i];
    out.welfare += entries[i].welfare;
    out.utilization += entries[i].usage;
  }
  return out;
}

}  // namespace plab
