// Copyright 2026 The Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cstdlib>
#include <functional>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "ridepolicy/errors.hpp"
#include "ridepolicy/pipeline.hpp"

namespace rp = ridepolicy::pipeline;

int main(int argc, char** argv) {
  CLI::App app{"Staggered-adoption policy evaluation on ride-hailing logs"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path, out, model;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  bool quiet = false;
  app.add_option("--config", config_path, "Sectioned key = value config file")
      ->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "Master seed (required here or in [run] seed)");
  app.add_option("--threads", threads, "Worker threads for the bootstrap")
      ->check(CLI::PositiveNumber);
  app.add_option("--out", out, "Output directory (RIDEPOLICY_OUT overrides)");
  app.add_option("--model", model, "Estimator design")
      ->check(CLI::IsMember({"1", "2", "3", "4", "all"}));
  app.add_flag("--quiet", quiet, "No progress messages on stderr");

  const std::map<std::string, std::pair<std::string, std::function<void(const rp::RunConfig&)>>>
      commands = {
          {"simulate", {"Simulate trip and demand logs with ground truth", rp::cmd_simulate}},
          {"panel", {"Build driver-week and zone-week panels", rp::cmd_panel}},
          {"estimate", {"Staggered DiD estimates for the selected designs", rp::cmd_estimate}},
          {"bacon", {"Goodman-Bacon decomposition of the TWFE coefficient", rp::cmd_bacon}},
          {"placebo", {"Prior-year-label and zero-effect placebos", rp::cmd_placebo}},
          {"production", {"Cobb-Douglas matching functions per market", rp::cmd_production}},
          {"counterfactual", {"Supply reallocation heuristics", rp::cmd_counterfactual}},
          {"gini", {"Weekly spatial supply Gini and Lorenz curves", rp::cmd_gini}},
          {"report", {"Consolidated markdown report", rp::cmd_report}},
          {"all", {"Every step from simulate to report", rp::cmd_all}},
      };
  for (const auto& [name, c] : commands) app.add_subcommand(name, c.first);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    rp::RunConfig cfg = config_path.empty() ? rp::RunConfig{} : rp::load_config(config_path);
    if (seed) cfg.seed = *seed;
    if (threads) cfg.threads = *threads;
    if (!out.empty()) cfg.out = out;
    if (const char* env = std::getenv("RIDEPOLICY_OUT"); env && *env) cfg.out = env;
    if (!model.empty()) cfg.model = model;
    cfg.quiet = quiet;
    rp::finalize(cfg);
    const std::string name = app.get_subcommands().front()->get_name();
    commands.at(name).second(cfg);
  } catch (const ridepolicy::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const rp::MissingArtifact& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const ridepolicy::IntegrityError& e) {
    std::cerr << "integrity error: " << e.what() << "\n";
    return 4;
  } catch (const ridepolicy::EstimationError& e) {
    std::cerr << "estimation error: " << e.what() << "\n";
    return 5;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
