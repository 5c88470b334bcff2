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

// Command-line front end.
//
//   penalty_lab run --config <path> --out <path> [--format csv|json]
//                   [--seed N] [--replicates N]
//   penalty_lab verify --suite <name> [--samples N] [--seed N]
//   penalty_lab examples
//
// Exit codes: 0 success, 1 failed verification or example check,
// 2 config or I/O error (the message names the offending field).
// PENALTY_LAB_THREADS caps worker threads (default: hardware concurrency).

#include <cstdint>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "plab/experiment_io.hpp"
#include "plab/verification.hpp"

namespace {

int finish_checks(const std::vector<plab::CheckReport>& reports) {
  std::cout << plab::render_reports(reports);
  const std::size_t failed =
      static_cast<std::size_t>(std::count_if(
          reports.begin(), reports.end(),
          [](const plab::CheckReport& r) { return !r.passed; }));
  std::cout << reports.size() - failed << "/" << reports.size()
            << " checks passed\n";
  return failed == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "penalty-lab: simulation and verification toolkit for "
      "contingent-payment resource allocation under present bias.\n"
      "Set PENALTY_LAB_THREADS to cap worker threads."};
  app.require_subcommand(1);

  // --- run ---------------------------------------------------------------
  std::string config_path;
  std::string out_path;
  std::string format = "csv";
  std::uint64_t seed_override = 0;
  long long replicates_override = 0;
  CLI::App* run_cmd =
      app.add_subcommand("run", "Run a config-driven experiment sweep");
  run_cmd->add_option("--config", config_path, "Config file (key = value)")
      ->required();
  run_cmd->add_option("--out", out_path, "Output file path")->required();
  run_cmd->add_option("--format", format, "Output format")
      ->check(CLI::IsMember({"csv", "json"}));
  CLI::Option* seed_opt =
      run_cmd->add_option("--seed", seed_override, "Override the config seed");
  CLI::Option* reps_opt = run_cmd->add_option(
      "--replicates", replicates_override, "Override the replicate count");

  // --- verify ------------------------------------------------------------
  std::string suite;
  long long samples = 0;
  std::uint64_t verify_seed = 20260814ull;
  CLI::App* verify_cmd =
      app.add_subcommand("verify", "Run independent verification suites");
  verify_cmd
      ->add_option("--suite", suite,
                   "curves | firstbest | dse | lambert | properties | "
                   "figures | all (all = everything except figures)")
      ->required()
      ->check(CLI::IsMember({"curves", "firstbest", "dse", "lambert",
                             "properties", "figures", "all"}));
  verify_cmd->add_option("--samples", samples,
                         "Per-suite sample count (0 = suite default)");
  verify_cmd->add_option("--seed", verify_seed, "Verification stream seed");

  // --- examples ----------------------------------------------------------
  app.add_subcommand("examples",
                     "Reproduce the hand-computed worked scenarios");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (run_cmd->parsed()) {
      plab::ExperimentConfig cfg = plab::load_config(config_path);
      if (seed_opt->count() > 0) cfg.seed = seed_override;
      if (reps_opt->count() > 0) {
        if (replicates_override < 1) {
          throw plab::ConfigError("option '--replicates': must be >= 1");
        }
        cfg.replicates = replicates_override;
      }
      const std::vector<plab::ResultRow> rows = plab::run_experiment(cfg);
      plab::save_results(rows, out_path, format);
      std::cout << "wrote " << rows.size() << " result rows to " << out_path
                << "\n";
      if (format == "csv" && cfg.per_agent_stats) {
        std::cout << "wrote per-agent statistics to "
                  << plab::per_agent_path(out_path) << "\n";
      }
      return 0;
    }

    if (verify_cmd->parsed()) {
      if (samples < 0) {
        throw plab::ConfigError("option '--samples': must be >= 0");
      }
      std::vector<plab::CheckReport> reports;
      const auto append = [&](std::vector<plab::CheckReport> r) {
        for (plab::CheckReport& c : r) reports.push_back(std::move(c));
      };
      const bool everything = suite == "all";
      if (everything || suite == "curves") {
        append(plab::run_curve_battery(samples > 0 ? samples : 1000,
                                       verify_seed));
      }
      if (everything || suite == "firstbest") {
        append(plab::run_first_best_battery(samples > 0 ? samples : 1000,
                                            verify_seed));
      }
      if (everything || suite == "dse") {
        append(plab::run_dse_battery(
            samples > 0 ? static_cast<int>(samples) : 100, verify_seed));
      }
      if (everything || suite == "lambert") {
        append(plab::run_lambert_battery(samples > 0 ? samples : 10'000));
      }
      if (everything || suite == "properties") {
        append(plab::run_property_battery(verify_seed,
                                          samples > 0 ? samples : 400));
      }
      if (suite == "figures") {
        append(plab::run_figure_battery(verify_seed));
      }
      return finish_checks(reports);
    }

    // examples
    return finish_checks(plab::run_worked_examples());
  } catch (const plab::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return verify_cmd->parsed() ? 1 : 2;
  }
}
