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

#ifndef RIDEPOLICY_PANEL_HPP_
#define RIDEPOLICY_PANEL_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ridepolicy/geo.hpp"
#include "ridepolicy/timeutil.hpp"
#include "ridepolicy/trip.hpp"

namespace ridepolicy::panel {

struct CohortAssignment {
  std::int64_t driver_id = 0;
  std::optional<int> cohort;  // nullopt = never treated
  // Index into the trip vector of the first qualifying dropoff.
  std::optional<std::size_t> first_treatment_trip;
};

// One entry per driver in `trips`, sorted by driver id. Cohort = first week in
// [launch_week, launch_week + horizon] with a completed dropoff inside the
// polygon.
std::vector<CohortAssignment> assign_cohorts(const std::vector<TripEvent>& trips,
                                             const geo::ConvexPolygon& major,
                                             Timestamp anchor, int launch_week = 0,
                                             int horizon = 12);

struct DriverWeekRecord {
  std::int64_t driver_id = 0;
  int week = 0;
  std::optional<int> cohort;
  int num_trip = 0;
  int num_session = 0;
  double num_hour = 0.0;
  double trip_hour = 0.0;
  double num_mile = 0.0;
  double ave_utilization = 0.0;
  double ave_dur_per_session = 0.0;
  double ave_n_trip_per_hour = 0.0;
  double hourly_earning = 0.0;
  double earning_per_ride = 0.0;
  double tips = 0.0;
  double perc_tips = 0.0;
  double weekly_cancel_rate = 0.0;
  std::optional<double> driver_rating;
  double rider_wait_time = 0.0;
  double frac_Hdemand = 0.0;
  double frac_Phour = 0.0;
  int enter_treatment = 0;
  // Supporting columns for the splits and strategic-response outcomes.
  int num_accepted = 0;
  double earnings = 0.0;       // driver earnings, dollars, tips excluded
  double net_payments = 0.0;   // rider payment minus external fees
  double platform_take = 0.0;
  double hourly_revenue = 0.0;
  // Variance of per-trip hourly earnings within the week; NaN below 2 trips.
  double hourly_earning_var = 0.0;
};

struct PanelConfig {
  Timestamp anchor = make_timestamp(2024, 2, 5);
  int first_week = -12;
  int last_week = 12;
  geo::HexGrid demand_grid{5.16};
  // Pickup cells labelled high-demand from the pre period.
  std::set<geo::HexCell> high_demand_cells;
};

// Peak windows used by frac_Phour: 06-09 and 16-19.
bool is_peak_hour(int hour_of_day);

// One row per cohort driver x week, sorted by (driver, week). Trips are
// assigned to the week of their accept time; trips outside the horizon are
// ignored. Throws IntegrityError on duplicated trips or on drivers missing
// from `cohorts`.
std::vector<DriverWeekRecord> build_driver_week_panel(
    const std::vector<TripEvent>& trips,
    const std::vector<CohortAssignment>& cohorts, const PanelConfig& config);

// Column names of the driver-week CSV, summary outcomes first.
const std::vector<std::string>& driver_week_columns();
void write_driver_week_panel(const std::filesystem::path& path,
                             const std::vector<DriverWeekRecord>& rows);
std::vector<DriverWeekRecord> read_driver_week_panel(
    const std::filesystem::path& path);

// Outcome lookup by column name; throws std::out_of_range for unknown names.
double outcome_value(const DriverWeekRecord& r, const std::string& name);
bool is_outcome_name(const std::string& name);

// Demand cells whose pre-period average weekly intents are strictly above the
// median across cells.
std::set<geo::HexCell> median_high_demand_cells(
    const std::vector<DemandRow>& demand, int first_week);

enum class ZoneKind { kZip, kHex };

struct ZoneWeekDemand {
  std::string zone_id;
  geo::HexCell zone;
  int week = 0;
  std::int64_t intents = 0;
  std::int64_t requests = 0;
  std::int64_t completes = 0;
  double price_indicator = 1.0;
  bool in_major_market = false;
  bool high_demand = false;
};

struct ZoneConfig {
  ZoneKind kind = ZoneKind::kZip;
  Timestamp anchor = make_timestamp(2024, 2, 5);
  int first_week = -12;
  int last_week = 12;
  geo::HexGrid demand_grid{5.16};
  geo::HexGrid zip_grid{36.0};
  geo::ConvexPolygon major = geo::ConvexPolygon::rectangle(0, 0, 1, 1);
  // Zones to report; empty = every zone seen in the demand log.
  std::vector<geo::HexCell> zones;
  int top_hexagons = 10;
};

// Pre-period flags: kZip marks zones strictly above the decile cut, kHex the
// top_hexagons cells (ties by zone id ascending).
std::vector<bool> high_demand_flags(const std::vector<geo::HexCell>& zones,
                                    const std::vector<double>& pre_average,
                                    ZoneKind kind, int top_hexagons = 10);

// Balanced zone x week table, sorted by (zone, week). The price indicator is
// the zip-level payment per mile in that week over its pre-period value.
std::vector<ZoneWeekDemand> build_zone_week_demand(
    const std::vector<DemandRow>& demand, const std::vector<TripEvent>& trips,
    const ZoneConfig& config);

void write_zone_week_demand(const std::filesystem::path& path,
                            const std::vector<ZoneWeekDemand>& rows);
std::vector<ZoneWeekDemand> read_zone_week_demand(
    const std::filesystem::path& path);

}  // namespace ridepolicy::panel

#endif  // RIDEPOLICY_PANEL_HPP_
