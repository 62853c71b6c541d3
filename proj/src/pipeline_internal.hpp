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

#ifndef RIDEPOLICY_PIPELINE_INTERNAL_HPP_
#define RIDEPOLICY_PIPELINE_INTERNAL_HPP_

#include <optional>
#include <string>
#include <vector>

#include "ridepolicy/pipeline.hpp"
#include "ridepolicy/trip.hpp"

namespace ridepolicy::pipeline::detail {

fs::path out_dir(const RunConfig& cfg);
fs::path trips_file(const RunConfig& cfg);
fs::path demand_file(const RunConfig& cfg);
inline fs::path prior_dir(const RunConfig& cfg) { return out_dir(cfg) / "prior"; }

// Throws MissingArtifact naming the subcommand that writes `path`.
const fs::path& require(const fs::path& path, const std::string& producer);

void log(const RunConfig& cfg, const std::string& msg);

std::string num(double v);
std::string num(int v);
std::string num(std::size_t v);
std::string num(std::int64_t v);

Timestamp prior_anchor(const RunConfig& cfg);
std::optional<sim::GroundTruth> maybe_truth(const fs::path& path);

std::vector<TripEvent> load_trips(const fs::path& path);
std::vector<DemandRow> load_demand(const fs::path& path);

}  // namespace ridepolicy::pipeline::detail

#endif  // RIDEPOLICY_PIPELINE_INTERNAL_HPP_
