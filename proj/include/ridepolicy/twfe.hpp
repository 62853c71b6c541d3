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

#ifndef RIDEPOLICY_TWFE_HPP_
#define RIDEPOLICY_TWFE_HPP_

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ridepolicy/csa.hpp"
#include "ridepolicy/geo.hpp"
#include "ridepolicy/panel.hpp"
#include "ridepolicy/trip.hpp"

namespace ridepolicy::causal {

struct FeOlsResult {
  std::vector<std::string> names;
  Eigen::VectorXd coef;  // NaN for absorbed columns
  Eigen::VectorXd se;
  std::vector<bool> identified;
  Eigen::VectorXd residuals;
  int n_obs = 0;
  int n_clusters = 0;
  double r2_within = 0.0;
};

// OLS of y on X after absorbing two sets of fixed effects by alternating
// projections. Standard errors are cluster-robust with the small-sample
// factor G/(G-1) * (N-1)/(N-K). Columns that vanish after demeaning raise
// EstimationError unless allow_absorbed, in which case they are reported as
// not identified; collinear remaining columns always raise, naming them.
FeOlsResult fe_ols(const Eigen::VectorXd& y, const Eigen::MatrixXd& X,
                   const std::vector<std::string>& names, const std::vector<int>& fe1,
                   const std::vector<int>& fe2, const std::vector<int>& cluster,
                   bool allow_absorbed = false);

// Staggered TWFE coefficient on D_it = 1{t >= g_i} with unit and week
// effects, clustered by unit. Requires a complete (NaN-free) panel.
FeOlsResult twfe_staggered(const UnitPanel& p);

enum class BaconCategory { kEarlierVsLater, kLaterVsEarlier, kTreatedVsUntreated };
std::string bacon_category_name(BaconCategory c);

struct BaconComponent {
  BaconCategory category = BaconCategory::kTreatedVsUntreated;
  int treated_group = 0;
  std::optional<int> control_group;  // nullopt = never treated
  double estimate = 0.0;
  double weight = 0.0;
};

struct BaconSummary {
  BaconCategory category;
  double estimate = 0.0;  // weight-averaged within the category
  double weight = 0.0;
  int n_components = 0;
};

struct BaconResult {
  std::vector<BaconComponent> components;
  std::vector<BaconSummary> summary;
  double weighted_sum = 0.0;
  double twfe_coef = 0.0;
};

// Goodman-Bacon decomposition of the staggered TWFE coefficient. Cohorts
// treated at or before the first week count as always treated; cohorts
// after the last week count as never treated. Throws EstimationError on a
// panel with missing cells.
BaconResult bacon_decompose(const UnitPanel& p);

// Model 4: y on treated_y, post_t, treated_y x post_t and the demand control,
// with unit and week-of-year effects and unit clusters. post_t is absorbed
// by the week effects and comes back not identified.
struct TwoYearObs {
  std::int64_t unit = 0;
  int week = 0;
  int treated_y = 0;
  int post_t = 0;
  double y = 0.0;
  double demand = 0.0;
};

struct TwfeResult {
  double beta1 = 0.0, beta2 = 0.0, beta3 = 0.0, beta_demand = 0.0;
  double se1 = 0.0, se2 = 0.0, se3 = 0.0, se_demand = 0.0;
  bool beta2_identified = false;
  int n_obs = 0;
  int n_units = 0;
  double residual_sd = 0.0;
};

TwfeResult twfe_did(const std::vector<TwoYearObs>& obs, bool include_demand = true);

// Share of each driver's pre-period completed pickups per zone.
struct ZoneShares {
  std::map<std::int64_t, std::map<geo::HexCell, double>> shares;
  // Drivers without pre-period trips: uniform over every zone they visited.
  std::set<std::int64_t> flagged;
};

ZoneShares driver_zone_shares(const std::vector<TripEvent>& trips,
                              const geo::HexGrid& zone_grid, Timestamp anchor,
                              int first_week);

// d_t = sum_z share_z * intents_{z,t}; zones missing from the series count 0.
std::vector<double> exposure_weighted_demand(
    const std::map<geo::HexCell, double>& shares,
    const std::map<geo::HexCell, std::vector<double>>& zone_series, int n_weeks);

struct SpilloverResult {
  std::string outcome;
  bool triple = false;
  FeOlsResult fit;
  double interaction = 0.0;     // TreatMarket x After (x HighDemand if triple)
  double interaction_se = 0.0;
};

// log1p(outcome) on TreatMarket x After [+ HighDemand x After +
// TreatMarket x HighDemand x After] + price_indicator, zone and week
// effects, zone clusters. After = week >= 0.
SpilloverResult demand_spillover_did(const std::vector<panel::ZoneWeekDemand>& rows,
                                     const std::string& outcome, bool triple);

}  // namespace ridepolicy::causal

#endif  // RIDEPOLICY_TWFE_HPP_
