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

#include <stdexcept>
#include <vector>

#include "plab/mechanisms.hpp"
#include "plab/random.hpp"

using namespace plab;

namespace {

AgentType fixed_cost(double cost, double availability, double w, double bias,
                     double believed) {
  AgentType a;
  a.model = FixedCostModel{cost, availability};
  a.future_value = w;
  a.bias = bias;
  a.believed_bias = believed;
  a.validate();
  return a;
}

const std::vector<std::size_t> kOrder01{0, 1};

}  // namespace

TEST_CASE("penalty-bid mechanism runs the worked two-agent economy") {
  Economy e;
  e.resources = 1;
  e.agents = {fixed_cost(10, 0.8, 16, 0.5, 0.5),
              fixed_cost(6, 0.5, 10, 0.8, 0.8)};

  const MechanismOutcome o = run_two_bid(e, kOrder01);
  REQUIRE(o.first_bids.size() == 2);
  CHECK(o.first_bids[0] == Catch::Approx(24.0).margin(1e-12));
  CHECK(o.first_bids[1] == Catch::Approx(4.0).margin(1e-12));
  CHECK(o.allocated == std::vector<std::size_t>{0});
  CHECK(o.min_penalty == Catch::Approx(4.0).margin(1e-12));
  CHECK(o.second_bids.size() == 1);
  CHECK(o.second_bids[0] == Catch::Approx(4.0).margin(1e-12));
  CHECK(o.payments[0].penalty == Catch::Approx(4.0).margin(1e-12));
  CHECK(o.payments[0].base == 0.0);
  CHECK(o.payments[1].base == 0.0);
  CHECK(o.payments[1].penalty == 0.0);
}

TEST_CASE("penalty floor vanishes without an excluded bidder") {
  Economy e;
  e.resources = 2;  // everyone wins
  e.agents = {fixed_cost(10, 0.8, 16, 0.5, 0.5),
              fixed_cost(6, 0.5, 10, 0.8, 0.8)};
  const MechanismOutcome o = run_two_bid(e, kOrder01);
  CHECK(o.allocated == (std::vector<std::size_t>{0, 1}));
  CHECK(o.min_penalty == 0.0);
  // With a zero floor each winner picks her own preferred penalty.
  CHECK(o.payments[0].penalty == Catch::Approx(2.0).margin(1e-12));
  CHECK(o.payments[1].penalty == 0.0);  // jump point is negative, floor binds
}

TEST_CASE("unwilling agents never receive a slot, even with spare capacity") {
  Economy e;
  e.resources = 3;
  // Middle agent's believed jump (2) exceeds her break-even penalty (1/9).
  e.agents = {fixed_cost(10, 0.8, 16, 0.5, 0.5), fixed_cost(5, 0.1, 6, 0.5, 0.5),
              fixed_cost(6, 0.5, 10, 0.8, 0.8)};
  const MechanismOutcome o = run_two_bid(e, std::vector<std::size_t>{0, 1, 2});
  CHECK(o.allocated == (std::vector<std::size_t>{0, 2}));
  CHECK(o.first_bids[1] == 0.0);
  CHECK(o.payments[1].penalty == 0.0);
  CHECK(o.min_penalty == 0.0);
}

TEST_CASE("equal first bids resolve by the tie permutation") {
  Economy e;
  e.resources = 1;
  e.agents = {fixed_cost(10, 0.8, 16, 0.5, 0.5),
              fixed_cost(10, 0.8, 16, 0.5, 0.5)};

  const MechanismOutcome a = run_two_bid(e, std::vector<std::size_t>{0, 1});
  const MechanismOutcome b = run_two_bid(e, std::vector<std::size_t>{1, 0});
  CHECK(a.allocated == std::vector<std::size_t>{0});
  CHECK(b.allocated == std::vector<std::size_t>{1});
  CHECK(a.min_penalty == Catch::Approx(24.0).margin(1e-12));

  // The rng overload is deterministic in the seed.
  Rng r1(derive_seed({9, 9}));
  Rng r2(derive_seed({9, 9}));
  const MechanismOutcome c = run_two_bid(e, r1);
  const MechanismOutcome d = run_two_bid(e, r2);
  CHECK(c.allocated == d.allocated);
}

TEST_CASE("price auction charges the highest excluded bid") {
  Economy e;
  e.resources = 1;
  e.agents = {fixed_cost(5, 0.8, 7.5, 0.2, 1.0),
              fixed_cost(5, 1.0 / 6.0, 20.0, 1.0, 1.0)};
  const MechanismOutcome o = run_mplus1_auction(e, kOrder01);
  CHECK(o.first_bids[0] == Catch::Approx(2.0).margin(1e-12));
  CHECK(o.first_bids[1] == Catch::Approx(2.5).margin(1e-12));
  CHECK(o.allocated == std::vector<std::size_t>{1});
  CHECK(o.payments[1].base == Catch::Approx(2.0).margin(1e-12));
  CHECK(o.payments[1].penalty == 0.0);
  CHECK(o.payments[0].base == 0.0);
  CHECK(o.second_bids.empty());

  e.resources = 2;  // no excluded bid -> free allocation
  const MechanismOutcome p = run_mplus1_auction(e, kOrder01);
  CHECK(p.allocated == (std::vector<std::size_t>{0, 1}));
  CHECK(p.payments[0].base == 0.0);
  CHECK(p.payments[1].base == 0.0);
}

TEST_CASE("contingent second price charges the highest losing bid as penalty") {
  const MechanismOutcome o =
      run_gcsp({5.0, 2.0, 7.0}, 2, std::vector<std::size_t>{0, 1, 2});
  CHECK(o.allocated == (std::vector<std::size_t>{0, 2}));
  CHECK(o.payments[0].penalty == Catch::Approx(2.0).margin(1e-12));
  CHECK(o.payments[2].penalty == Catch::Approx(2.0).margin(1e-12));
  CHECK(o.payments[1].penalty == 0.0);
  CHECK(o.payments[0].base == 0.0);

  CHECK_THROWS_AS(run_gcsp({1.0, -0.5}, 1, kOrder01), std::invalid_argument);
  CHECK_THROWS_AS(run_gcsp({1.0, 2.0}, 0, kOrder01), std::invalid_argument);
  CHECK_THROWS_AS(run_gcsp({1.0, 2.0}, 1, std::vector<std::size_t>{0}),
                  std::invalid_argument);
}

TEST_CASE("posted-penalty queue skips decliners without blocking") {
  Economy e;
  e.resources = 1;
  // At penalty 5 the first arrival declines (subjective utility -5), the
  // second accepts (utility 1).
  e.agents = {fixed_cost(10, 0.5, 20, 0.2, 0.2), fixed_cost(5, 0.6, 10, 1, 1)};

  const MechanismOutcome o = run_fcfs(e, 5.0, std::vector<std::size_t>{0, 1});
  CHECK(o.allocated == std::vector<std::size_t>{1});
  CHECK(o.payments[1].penalty == 5.0);
  CHECK(o.payments[0].penalty == 0.0);

  // At penalty 12 both decline and the slot stays open.
  const MechanismOutcome p = run_fcfs(e, 12.0, std::vector<std::size_t>{0, 1});
  CHECK(p.allocated.empty());

  // At penalty 7 both would accept; arrival order decides.
  const MechanismOutcome q = run_fcfs(e, 7.0, std::vector<std::size_t>{1, 0});
  CHECK(q.allocated == std::vector<std::size_t>{1});
  const MechanismOutcome r = run_fcfs(e, 7.0, std::vector<std::size_t>{0, 1});
  CHECK(r.allocated == std::vector<std::size_t>{0});

  CHECK_THROWS_AS(run_fcfs(e, -1.0, std::vector<std::size_t>{0, 1}),
                  std::invalid_argument);
}
