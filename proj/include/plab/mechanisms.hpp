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
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "plab/agent_types.hpp"
#include "plab/random.hpp"

namespace plab {

/// Payment terms for one agent: a base amount owed unconditionally and a
/// penalty owed only if she fails to use the resource.
struct TwoPartPayment {
  double base = 0.0;
  double penalty = 0.0;
};

/// Result of running one mechanism: who got a resource, what everyone pays,
/// and the bids that produced it. Non-allocated agents always carry zero
/// payments. second_bids parallels `allocated` and is empty for mechanisms
/// without a second round; min_penalty is the announced floor for second bids
/// (two-bid mechanism only).
struct MechanismOutcome {
  std::vector<std::size_t> allocated;    // ascending agent indices
  std::vector<TwoPartPayment> payments;  // one entry per agent
  std::vector<double> first_bids;        // one entry per agent
  std::vector<double> second_bids;       // parallel to allocated
  double min_penalty = 0.0;
};

namespace detail {

/// Ranks candidate indices by bid descending; equal bids are ordered by the
/// caller-supplied tie rank (lower rank first). The tie rank is one uniform
/// random permutation per run, so ties are broken uniformly while the whole
/// ranking stays reproducible.
inline std::vector<std::size_t> rank_bidders(
    const std::vector<double>& bids, std::vector<std::size_t> candidates,
    const std::vector<std::size_t>& tie_rank) {
  std::sort(candidates.begin(), candidates.end(),
            [&](std::size_t l, std::size_t r) {
              if (bids[l] != bids[r]) return bids[l] > bids[r];
              return tie_rank[l] < tie_rank[r];
            });
  return candidates;
}

inline std::vector<std::size_t> all_indices(std::size_t n) {
  std::vector<std::size_t> ix(n);
  for (std::size_t i = 0; i < n; ++i) ix[i] = i;
  return ix;
}

inline void require_tie_rank(std::size_t n,
                             const std::vector<std::size_t>& tie_rank) {
  if (tie_rank.size() != n) {
    throw std::invalid_argument("tie_rank must have one entry per agent");
  }
}

}  // namespace detail

/// Two-bid penalty mechanism, deterministic variant: ties among equal first
/// bids are resolved by the given rank permutation. The rng overload below is
/// the normal entry point; this one exists so tests can pin the tie order.
///
/// First bids are each agent's maximum acceptable penalty. The top m bidders
/// among participants win; the (m+1)th participant bid (0 if there is none)
/// becomes the floor every winner's self-chosen penalty must respect. Winners
/// then pick their preferred penalty at or above the floor. No base payments.
inline MechanismOutcome run_two_bid(const Economy& e,
                                    const std::vector<std::size_t>& tie_rank) {
  e.validate();
  const std::size_t n = e.agents.size();
  const std::size_t m = static_cast<std::size_t>(e.resources);
  detail::require_tie_rank(n, tie_rank);

  MechanismOutcome out;
  out.payments.resize(n);
  out.first_bids.resize(n, 0.0);

  std::vector<std::size_t> bidders;
  for (std::size_t i = 0; i < n; ++i) {
    if (!participates(e.agents[i])) continue;  // declines any allocation
    out.first_bids[i] = max_acceptable_penalty(e.agents[i]);
    bidders.push_back(i);
  }

  const std::vector<std::size_t> order =
      detail::rank_bidders(out.first_bids, bidders, tie_rank);
  const std::size_t winners = std::min(m, order.size());
  out.min_penalty = order.size() > m ? out.first_bids[order[m]] : 0.0;

  out.allocated.assign(order.begin(), order.begin() + winners);
  std::sort(out.allocated.begin(), out.allocated.end());
  out.second_bids.reserve(winners);
  for (std::size_t i : out.allocated) {
    const double z = preferred_penalty(e.agents[i], out.min_penalty);
    out.second_bids.push_back(z);
    out.payments[i].penalty = z;
  }
  return out;
}

inline MechanismOutcome run_two_bid(const Economy& e, Rng& rng) {
  return run_two_bid(e, rng.permutation(e.agents.size()));
}

/// m+1th-price auction: everyone bids her value of winning at a zero penalty,
/// the top m win and each pays the (m+1)th bid up front (0 when there is no
/// such bid). No penalties, so no commitment: utilization comes only from
/// agents who would show anyway.
inline MechanismOutcome run_mplus1_auction(
    const Economy& e, const std::vector<std::size_t>& tie_rank) {
  e.validate();
  const std::size_t n = e.agents.size();
  const std::size_t m = static_cast<std::size_t>(e.resources);
  detail::require_tie_rank(n, tie_rank);

  MechanismOutcome out;
  out.payments.resize(n);
  out.first_bids.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.first_bids[i] = sp_bid(e.agents[i]);

  const std::vector<std::size_t> order =
      detail::rank_bidders(out.first_bids, detail::all_indices(n), tie_rank);
  const std::size_t winners = std::min(m, n);
  const double price = n > m ? out.first_bids[order[m]] : 0.0;

  out.allocated.assign(order.begin(), order.begin() + winners);
  std::sort(out.allocated.begin(), out.allocated.end());
  for (std::size_t i : out.allocated) out.payments[i].base = price;
  return out;
}

inline MechanismOutcome run_mplus1_auction(const Economy& e, Rng& rng) {
  return run_mplus1_auction(e, rng.permutation(e.agents.size()));
}

/// Contingent second-price primitive over raw bids: the top m bidders win and
/// each owes the highest losing bid as a penalty on no-show. No equilibrium
/// bid is computed here because none exists in dominant strategies; callers
/// supply whatever bids they want to study.
inline MechanismOutcome run_gcsp(const std::vector<double>& bids, int resources,
                                 const std::vector<std::size_t>& tie_rank) {
  if (resources < 1) throw std::invalid_argument("run_gcsp: resources >= 1");
  const std::size_t n = bids.size();
  const std::size_t m = static_cast<std::size_t>(resources);
  detail::require_tie_rank(n, tie_rank);
  for (double b : bids) {
    if (!std::isfinite(b) || b < 0.0) {
      throw std::invalid_argument("run_gcsp: bids must be finite and >= 0");
    }
  }

  MechanismOutcome out;
  out.payments.resize(n);
  out.first_bids = bids;

  const std::vector<std::size_t> order =
      detail::rank_bidders(bids, detail::all_indices(n), tie_rank);
  const std::size_t winners = std::min(m, n);
  const double penalty = n > m ? bids[order[m]] : 0.0;

  out.allocated.assign(order.begin(), order.begin() + winners);
  std::sort(out.allocated.begin(), out.allocated.end());
  for (std::size_t i : out.allocated) out.payments[i].penalty = penalty;
  return out;
}

inline MechanismOutcome run_gcsp(const std::vector<double>& bids, int resources,
                                 Rng& rng) {
  return run_gcsp(bids, resources, rng.permutation(bids.size()));
}

/// First-come-first-serve at a posted penalty: agents arrive in uniform
/// random order and the first m willing to accept the penalty (nonnegative
/// subjective utility) are allocated at exactly that penalty. Decliners do
/// not block later arrivals.
inline MechanismOutcome run_fcfs(const Economy& e, double fixed_penalty,
                                 const std::vector<std::size_t>& arrival) {
  e.validate();
  detail::require_penalty(fixed_penalty, "run_fcfs");
  const std::size_t n = e.agents.size();
  const std::size_t m = static_cast<std::size_t>(e.resources);
  detail::require_tie_rank(n, arrival);

  MechanismOutcome out;
  out.payments.resize(n);
  out.first_bids.resize(n, 0.0);

  for (std::size_t pos = 0; pos < n && out.allocated.size() < m; ++pos) {
    const std::size_t i = arrival[pos];
    if (subjective_utility(e.agents[i], fixed_penalty) < 0.0) continue;
    out.allocated.push_back(i);
    out.payments[i].penalty = fixed_penalty;
  }
  std::sort(out.allocated.begin(), out.allocated.end());
  return out;
}

inline MechanismOutcome run_fcfs(const Economy& e, double fixed_penalty,
                                 Rng& rng) {
  return run_fcfs(e, fixed_penalty, rng.permutation(e.agents.size()));
}

}  // namespace plab
