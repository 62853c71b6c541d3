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

#ifndef RIDEPOLICY_SPLITS_HPP_
#define RIDEPOLICY_SPLITS_HPP_

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ridepolicy/panel.hpp"
#include "ridepolicy/trip.hpp"

namespace ridepolicy::causal {

struct TakeRateSplit {
  std::set<std::int64_t> hh;  // share > threshold in every active pre week
  std::set<std::int64_t> lh;
};

// Share = earnings / net passenger payments per pre week; weeks without
// trips or payments are skipped.
TakeRateSplit split_hh_lh(const std::vector<panel::DriverWeekRecord>& rows,
                          double guarantee_share = 0.70);

struct UncertaintySplit {
  std::set<std::int64_t> low_tolerance;
  std::set<std::int64_t> high_tolerance;
  std::set<std::int64_t> others;
  std::set<std::int64_t> no_data;  // no pre week with a defined variance
};

// Compares each driver's within-week hourly-earnings variance with that
// week's median across drivers, over pre weeks with a defined variance.
UncertaintySplit split_uncertainty(const std::vector<panel::DriverWeekRecord>& rows);

struct KMeansResult {
  std::vector<int> labels;
  Eigen::MatrixXd centroids;  // k x p
  std::vector<double> objective;  // within-cluster SS after each iteration
  int iterations = 0;
  bool converged = false;
};

// Lloyd iterations from k-means++ seeding; the best of n_init starts is
// kept. Throws std::invalid_argument if k < 1 or k > rows.
KMeansResult kmeans(const Eigen::MatrixXd& X, int k, std::uint64_t seed,
                    int max_iter = 300, int n_init = 10);

// Column z-scores; constant columns become 0.
Eigen::MatrixXd zscore_columns(const Eigen::MatrixXd& X);

// 8 time-window shares, weekend share, 6 vehicle shares.
const std::vector<std::string>& driver_feature_names();

struct DriverFeatures {
  std::vector<std::int64_t> driver_ids;
  Eigen::MatrixXd x;
};

// Pre-period completed trips of each driver with at least one.
DriverFeatures driver_features(const std::vector<TripEvent>& trips, Timestamp anchor,
                               int first_week);

// Cluster names: highest luxury share is LUX, then of the rest the higher
// mean pre-period hours is FT. Needs k == 3.
std::vector<std::string> name_clusters(const DriverFeatures& f, const KMeansResult& km,
                                       const std::map<std::int64_t, double>& pre_hours);

}  // namespace ridepolicy::causal

#endif  // RIDEPOLICY_SPLITS_HPP_
