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

#ifndef RIDEPOLICY_PIPELINE_HPP_
#define RIDEPOLICY_PIPELINE_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ridepolicy/matchfn.hpp"
#include "ridepolicy/simkit.hpp"

namespace ridepolicy::pipeline {

namespace fs = std::filesystem;

// An upstream artifact is absent; the message names the subcommand to run.
class MissingArtifact : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::optional<std::uint64_t> seed;
  fs::path out = "ridepolicy_out";
  int threads = 1;
  std::string model = "all";  // 1, 2, 3, 4 or all
  bool quiet = false;

  sim::SimConfig sim = sim::default_config();
  bool two_year = true;
  fs::path trips_path;   // empty = <out>/trips.csv
  fs::path demand_path;  // empty = <out>/demand.csv

  int anticipation = 0;
  int bootstrap_reps = 199;
  double clip_lo = 0.01;
  double clip_hi = 0.99;
  bool never_treated_only = false;
  std::vector<std::string> outcomes = {"num_hour", "num_trip", "ave_utilization",
                                       "hourly_earning", "weekly_cancel_rate"};
  std::vector<std::string> heterogeneity_outcomes = {"num_hour"};
  double buffer_km = 50.0;
  double band_km = 10.0;
  double caliper_sd = 0.5;
  double match_threshold_sd = 0.5;
  double zip_area_km2 = 36.0;
  int top_hexagons = 10;
  std::string bacon_outcome = "num_hour";

  int placebo_seeds = 3;

  int counterfactual_week = -1;
  std::vector<std::string> heuristics = {"one_hop", "two_hop", "demand_weighted",
                                         "greedy_spatial", "greedy_temporal"};
  int min_sessions = 5;
};

// Sectioned key = value file ([run], [sim], [estimate], [placebo],
// [counterfactual], [paths]). Unknown keys raise ConfigError.
RunConfig load_config(const fs::path& path);
void apply_setting(RunConfig& cfg, const std::string& section, const std::string& key,
                   const std::string& value);

// Canonical "section.key" = value pairs of every setting.
std::vector<std::pair<std::string, std::string>> effective_config(const RunConfig& cfg);
std::uint64_t config_hash(const RunConfig& cfg);

// Throws ConfigError if the seed is unset or a setting is invalid; fills the
// simulator seed.
void finalize(RunConfig& cfg);

void cmd_simulate(const RunConfig& cfg);
void cmd_panel(const RunConfig& cfg);
void cmd_estimate(const RunConfig& cfg);
void cmd_bacon(const RunConfig& cfg);
void cmd_placebo(const RunConfig& cfg);
void cmd_production(const RunConfig& cfg);
void cmd_counterfactual(const RunConfig& cfg);
void cmd_gini(const RunConfig& cfg);
void cmd_report(const RunConfig& cfg);
// Every subcommand in pipeline order.
void cmd_all(const RunConfig& cfg);

// Ground-truth sidecar.
void write_truth(const fs::path& path, const sim::GroundTruth& truth);
sim::GroundTruth read_truth(const fs::path& path);

void write_params(const fs::path& path, const std::vector<matchfn::ProductionParams>& params);
std::vector<matchfn::ProductionParams> read_params(const fs::path& path);

// Log outcomes for strictly positive aggregates, levels for rates and shares.
bool log_outcome(const std::string& outcome);

}  // namespace ridepolicy::pipeline

#endif  // RIDEPOLICY_PIPELINE_HPP_
