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

#ifndef RIDEPOLICY_SIMKIT_HPP_
#define RIDEPOLICY_SIMKIT_HPP_

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ridepolicy/geo.hpp"
#include "ridepolicy/matchfn.hpp"
#include "ridepolicy/timeutil.hpp"
#include "ridepolicy/trip.hpp"

namespace ridepolicy::sim {

// splitmix64 finaliser; used to derive independent sub-streams.
std::uint64_t mix64(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag,
                          std::uint64_t a = 0, std::uint64_t b = 0);

inline constexpr int kNumTimeWindows = 8;
// Start hours of the work windows: morning rush, midday break, lunch,
// afternoon lull, evening rush, dinner/night, late night, rest.
inline constexpr std::array<int, kNumTimeWindows + 1> kWindowBounds = {
    6, 9, 12, 14, 16, 19, 24, 27, 30};
int time_window_of_hour(int hour_of_day);

struct MarketSpec {
  std::string name;
  geo::ConvexPolygon polygon;
  bool major = false;
};

struct Hotspot {
  geo::Point center;
  double peak_rate = 0.0;  // extra intents per demand cell-hour at the centre
  double sigma_km = 1.0;
};

struct SimConfig {
  std::uint64_t seed = 1;
  std::optional<std::uint64_t> prior_year_seed;
  // Driver population and market elasticities; defaults to seed.
  std::optional<std::uint64_t> population_seed;
  int n_drivers = 2000;
  int n_weeks_pre = 13;
  int n_weeks_post = 12;
  Timestamp anchor = make_timestamp(2024, 2, 5);
  std::vector<MarketSpec> markets;
  double hex_cell_area_km2 = 5.16;
  double production_hex_area_km2 = 36.0;

  // Demand: base + Gaussian hotspots per demand cell-hour, unless an explicit
  // per-cell map is given.
  double base_intent_rate = 1.5;
  std::vector<Hotspot> hotspots;
  std::map<geo::HexCell, double> demand_intensity_override;
  double request_share = 0.6;
  bool generate_demand = true;

  double effect_hours = 0.25;
  double effect_utilization = 0.03;
  double effect_hourly_earnings = 0.10;
  double cancel_lift = 0.006;
  double demand_spillover = 0.03;
  int anticipation_weeks = 0;
  double guarantee_share = 0.70;
  double price_index_volatility = 0.05;

  double major_home_share = 0.35;
  double venture_scale = 1.0;
  double cancel_base = 0.03;
  double year_drift_share = 0.03;
  // Share of FT/PT drivers whose class is swapped in this run (set by
  // prior_year_config).
  double population_drift = 0.0;
  bool apply_guarantee = true;

  int first_week() const { return -(n_weeks_pre - 1); }
  int last_week() const { return n_weeks_post; }
  int n_weeks() const { return n_weeks_pre + n_weeks_post; }
  std::uint64_t effective_prior_seed() const;
  std::uint64_t effective_population_seed() const;
  const MarketSpec& major_market() const;
};

// Major [0,40]x[0,30] flanked by two 25 km-wide adjacent markets.
std::vector<MarketSpec> default_layout();
std::vector<Hotspot> default_hotspots();
SimConfig default_config();

// Throws ConfigError.
void validate(const SimConfig& config);

enum class DriverClass { kFullTime, kPartTime, kLuxury };
enum class TakeRateType { kAlwaysAbove70, kSometimesBelow70 };
enum class EarningsVarianceType { kLow, kMid, kHigh };

std::string driver_class_name(DriverClass c);

struct DriverProfile {
  std::int64_t driver_id = 0;
  DriverClass driver_class = DriverClass::kFullTime;
  int home_market = 0;
  geo::Point home;
  geo::HexCell home_hex;
  double activity_radius_km = 8.0;
  double sessions_per_week_mean = 3.0;
  std::array<double, kNumVehicleTypes> vehicle_mix{};
  std::array<double, kNumTimeWindows> time_window_mix{};
  double weekend_weight = 1.0;
  TakeRateType take_rate_type = TakeRateType::kAlwaysAbove70;
  EarningsVarianceType earnings_variance_type = EarningsVarianceType::kMid;
  double log_hours_mean = 0.0;
  double session_hours = 4.0;
  double active_prob = 0.95;
  double venture_prob = 0.0;  // per active week, adjacent-market drivers
  double cancel_rate = 0.03;
  double rating_mean = 4.8;
};

// Throws std::invalid_argument if mixes do not sum to 1 or radius <= 0.
void check_profile(const DriverProfile& p);

struct MarketElasticity {
  matchfn::MarketKey market;
  double log_A = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
};

struct GroundTruth {
  std::uint64_t seed = 0;
  Timestamp anchor{};
  // nullopt = never treated.
  std::vector<std::pair<std::int64_t, std::optional<int>>> cohorts;
  std::map<std::string, double> effects;
  int anticipation_weeks = 0;
  std::vector<MarketElasticity> elasticities;

  std::optional<int> cohort_of(std::int64_t driver_id) const;
};

// Demand and production grids shared by the simulator and the pipeline.
struct Layout {
  geo::HexGrid demand_grid{5.16};
  geo::HexGrid production_grid{36.0};
  // Demand cells whose centre lies in some market, sorted.
  std::vector<geo::HexCell> demand_cells;
  std::vector<int> demand_cell_market;
  std::vector<geo::HexCell> production_cells;
  matchfn::AreaAssignment areas;

  geo::HexCell production_cell_of_demand(const geo::HexCell& c) const;
};

Layout build_layout(const SimConfig& config);

// Per demand cell base rate of intents per hour.
std::map<geo::HexCell, double> demand_intensity_map(const SimConfig& config,
                                                    const Layout& layout);

std::vector<DriverProfile> make_population(const SimConfig& config);

struct SimOutput {
  std::vector<TripEvent> trips;   // sorted by accept time, then driver
  std::vector<DemandRow> demand;  // sorted by (hour, hex); zero rows omitted
  GroundTruth truth;
  std::vector<DriverProfile> drivers;
};

SimOutput generate_market(const SimConfig& config);

struct TwoYearOutput {
  SimOutput prior;
  SimOutput treatment;
};

// Prior year: anchor shifted back 364 days, all effects zero, seed
// effective_prior_seed(), a year_drift_share of FT/PT drivers swapped.
TwoYearOutput generate_two_year(const SimConfig& config);
SimConfig prior_year_config(const SimConfig& config);
// Every injected effect zeroed and the guarantee switched off.
SimConfig zero_effects(SimConfig config);

}  // namespace ridepolicy::sim

#endif  // RIDEPOLICY_SIMKIT_HPP_
