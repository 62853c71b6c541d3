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

#ifndef RIDEPOLICY_BOOTSTRAP_HPP_
#define RIDEPOLICY_BOOTSTRAP_HPP_

#include <cstdint>
#include <functional>
#include <vector>

namespace ridepolicy::causal {

struct BootstrapOptions {
  int reps = 199;
  std::uint64_t seed = 1;
  int threads = 1;
  double max_drop_share = 0.10;
  double ci_level = 0.95;
};

struct BootstrapResult {
  std::vector<double> estimate;  // statistic on the original sample
  std::vector<double> std_error;
  std::vector<double> ci_lo;
  std::vector<double> ci_hi;
  int reps = 0;
  int dropped = 0;
  // reps x components; NaN where a component was undefined in a replicate.
  std::vector<std::vector<double>> replicates;
};

// The statistic receives a multiplicity per cluster (how many times the
// cluster was drawn; all ones for the original sample).
using ClusterStatistic =
    std::function<std::vector<double>(const std::vector<double>& multiplicity)>;

// Replicate r draws n_clusters clusters with replacement from an mt19937_64
// seeded with splitmix64(seed + r), so results do not depend on threads.
// A replicate whose statistic throws is dropped; more than max_drop_share
// dropped replicates raise EstimationError.
BootstrapResult cluster_bootstrap(const ClusterStatistic& statistic,
                                  std::size_t n_clusters,
                                  const BootstrapOptions& options = {});

std::vector<double> draw_multiplicity(std::size_t n_clusters, std::uint64_t seed,
                                      int replicate);

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace ridepolicy::causal

#endif  // RIDEPOLICY_BOOTSTRAP_HPP_
