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

// Release gate: runs the six acceptance batteries and prints one PASS/FAIL
// line per criterion (details below each line). Exits nonzero if any fail.

#include <chrono>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "plab/verification.hpp"

namespace {

struct Criterion {
  std::string label;
  double budget_seconds;
  std::function<std::vector<plab::CheckReport>()> battery;
};

std::string indent(const std::string& text) {
  std::istringstream in(text);
  std::ostringstream out;
  std::string line;
  while (std::getline(in, line)) out << "      " << line << "\n";
  return out.str();
}

}  // namespace

int main() {
  constexpr std::uint64_t kSeed = 20260814ull;
  using plab::CheckReport;

  const std::vector<Criterion> criteria = {
      {"worked-example exactness (bids, penalties, welfare, utilization)",
       60.0,
       [] {
         return std::vector<CheckReport>{
             plab::check_commitment_premium_pair(),
             plab::check_naive_overcommitment_pair(),
             plab::check_sophisticated_commitment_pair()};
       }},
      {"closed forms vs quadrature/bisection/grid oracles", 120.0,
       [] {
         std::vector<CheckReport> r = plab::run_curve_battery(1000, kSeed);
         for (CheckReport& c : plab::run_first_best_battery(1000, kSeed)) {
           r.push_back(std::move(c));
         }
         return r;
       }},
      {"dominant-strategy deviation search and no-dominant-bid certificate",
       300.0, [] { return plab::run_dse_battery(100, kSeed); }},
      {"structural property suite", 300.0,
       [] { return plab::run_property_battery(kSeed); }},
      {"seeded experiment orderings at desk scale", 900.0,
       [] { return plab::run_figure_battery(kSeed, {10'000, 100'000}); }},
      {"Lambert W branch -1 residual bound", 60.0,
       [] { return plab::run_lambert_battery(10'000); }},
  };

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const Criterion& c = criteria[i];
    const auto start = std::chrono::steady_clock::now();
    std::vector<CheckReport> reports;
    bool threw = false;
    std::string what;
    try {
      reports = c.battery();
    } catch (const std::exception& e) {
      threw = true;
      what = e.what();
    }
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    const bool in_budget = elapsed <= c.budget_seconds;
    const bool ok = !threw && plab::all_passed(reports) && in_budget;
    if (!ok) ++failures;

    std::cout << "[" << (i + 1) << "/" << criteria.size() << "] " << c.label
              << ": " << (ok ? "PASS" : "FAIL") << "  ("
              << plab::detail::fmt(elapsed) << " s of "
              << plab::detail::fmt(c.budget_seconds) << " s budget)\n";
    if (threw) {
      std::cout << "      error: " << what << "\n";
    } else {
      std::cout << indent(plab::render_reports(reports));
    }
    if (!in_budget) std::cout << "      runtime budget exceeded\n";
  }

  std::cout << (failures == 0 ? "ACCEPTED" : "REJECTED") << ": "
            << (criteria.size() - failures) << "/" << criteria.size()
            << " criteria passed\n";
  return failures == 0 ? 0 : 1;
}
