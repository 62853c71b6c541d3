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

#ifndef RIDEPOLICY_DESIGNS_HPP_
#define RIDEPOLICY_DESIGNS_HPP_

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ridepolicy/csa.hpp"
#include "ridepolicy/geo.hpp"
#include "ridepolicy/panel.hpp"
#include "ridepolicy/propensity.hpp"
#include "ridepolicy/trip.hpp"
#include "ridepolicy/twfe.hpp"

namespace ridepolicy::causal {

// 100 * (exp(c) - 1).
double pct_effect(double coefficient);

// Model 1: drivers whose hull of pre-period pickups lies within buffer_km of
// the market and who completed at least one pre-period trip inside it.
std::set<std::int64_t> model1_sample(const std::vector<TripEvent>& trips,
                                     const geo::ConvexPolygon& market, Timestamp anchor,
                                     int first_week, double buffer_km = 50.0);

struct BorderWeek {
  int week = 0;
  std::set<std::int64_t> treated;
  std::set<std::int64_t> control;
};

// Model 2 groups for one week, by dropoff location and dropoff week. Inner
// band: -band_km <= signed distance <= 0; outer band: 0 < d <= band_km.
// Treated takes precedence; controls have no dropoff inside the market.
BorderWeek border_sample(const std::vector<TripEvent>& trips,
                         const geo::ConvexPolygon& market, Timestamp anchor, int week,
                         double band_km = 10.0);

std::vector<BorderWeek> border_samples(const std::vector<TripEvent>& trips,
                                       const geo::ConvexPolygon& market, Timestamp anchor,
                                       int first_post_week, int last_post_week,
                                       double band_km = 10.0);

struct BorderUnits {
  std::set<std::int64_t> treated;  // border-treated in their own cohort week
  std::set<std::int64_t> control;  // border control in some week, not in treated
};

BorderUnits border_units(const std::vector<BorderWeek>& weeks,
                         const std::vector<panel::CohortAssignment>& cohorts);

struct CaliperMatch {
  std::vector<std::size_t> keep;  // unit indices, sorted
  int n_treated_matched = 0;
  int n_treated_unmatched = 0;
  int n_controls_used = 0;
};

// Nearest control (with replacement) for each treated unit among controls
// whose covariates all differ by less than caliper_sd pooled sds.
CaliperMatch caliper_match(const UnitPanel& p, const std::vector<std::size_t>& treated,
                           const std::vector<std::size_t>& controls,
                           double caliper_sd = 0.5);

// Model 3.
struct CrossYearMatch {
  std::vector<std::int64_t> eligible;  // treated, active in both years
  std::vector<std::int64_t> retained;
  std::vector<std::string> covariate_names;
  Eigen::VectorXd pooled_sd;
  PropensityModel year_model;
  // Between-year SMD: smd_pre on eligible drivers, smd_post on retained.
  std::vector<BalanceRow> balance;
  std::string warning;  // set when a retained SMD is 0.1 or more
};

// Per-driver pre-period covariate means from a driver-week table.
std::map<std::int64_t, std::vector<double>> pre_period_means(
    const std::vector<panel::DriverWeekRecord>& rows,
    const std::vector<std::string>& covariates);

CrossYearMatch match_across_years(const std::vector<panel::DriverWeekRecord>& current,
                                  const std::vector<panel::DriverWeekRecord>& prior,
                                  const std::vector<std::string>& covariates =
                                      default_covariates(),
                                  double threshold_sd = 0.5);

// Gives every row the cohort of its driver in `cohorts` (missing = never).
std::vector<panel::DriverWeekRecord> relabel_cohorts(
    std::vector<panel::DriverWeekRecord> rows,
    const std::map<std::int64_t, std::optional<int>>& cohorts);

// Current-year copies keep their cohort; prior-year copies become never
// treated with unit id -(id + 1).
UnitPanel stack_two_year(const UnitPanel& current, const UnitPanel& prior,
                         const std::vector<std::int64_t>& retained);

// Model 4 observations for cohort-0 drivers in `drivers`. NaN outcomes under
// the transform are skipped; demand is log1p of the exposure series.
std::vector<TwoYearObs> model4_observations(
    const std::vector<panel::DriverWeekRecord>& current,
    const std::vector<panel::DriverWeekRecord>& prior,
    const std::set<std::int64_t>& drivers, const std::string& outcome,
    OutcomeTransform transform,
    const std::map<std::int64_t, std::vector<double>>& demand_current,
    const std::map<std::int64_t, std::vector<double>>& demand_prior, int first_week);

// Drivers whose pre-period completed trips all start and end in the market.
std::set<std::int64_t> all_pre_trips_inside(const std::vector<TripEvent>& trips,
                                            const geo::ConvexPolygon& market,
                                            Timestamp anchor, int first_week);

// Zone x week intents on zone_grid from a demand log (hour indices relative
// to the log's own anchor); weeks first..last.
std::map<geo::HexCell, std::vector<double>> zone_intent_series(
    const std::vector<DemandRow>& demand, const geo::HexGrid& demand_grid,
    const geo::HexGrid& zone_grid, int first_week, int last_week);

// Exposure-weighted demand per driver from pre-period zone shares.
std::map<std::int64_t, std::vector<double>> driver_demand_exposure(
    const std::vector<TripEvent>& trips, const std::vector<DemandRow>& demand,
    const geo::HexGrid& demand_grid, const geo::HexGrid& zone_grid, Timestamp anchor,
    int first_week, int last_week);

}  // namespace ridepolicy::causal

#endif  // RIDEPOLICY_DESIGNS_HPP_
