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

#include <doctest.h>

#include <cmath>
#include <map>

#include "ridepolicy/errors.hpp"
#include "ridepolicy/panel.hpp"
#include "ridepolicy/simkit.hpp"
#include "test_util.hpp"

using namespace ridepolicy;
using testutil::at;
using testutil::kAnchor;

namespace {

const auto kMajor = geo::ConvexPolygon::rectangle(0, 0, 10, 10);

panel::PanelConfig cfg() {
  panel::PanelConfig c;
  c.anchor = kAnchor;
  return c;
}

const panel::DriverWeekRecord& row(const std::vector<panel::DriverWeekRecord>& rows,
                                   std::int64_t driver, int week) {
  for (const auto& r : rows) {
    if (r.driver_id == driver && r.week == week) return r;
  }
  throw std::out_of_range("no row");
}

}  // namespace

TEST_CASE("single trip week arithmetic") {
  // 10 min to pickup, 30 min with the passenger.
  const std::vector<TripEvent> trips = {testutil::trip(1, at(-2, 1, 10), 10, 30, {20, 20}, {21, 20}, 2000)};
  const auto coh = panel::assign_cohorts(trips, kMajor, kAnchor);
  const auto rows = panel::build_driver_week_panel(trips, coh, cfg());
  CHECK(rows.size() == 25);
  const auto& r = row(rows, 1, -2);
  CHECK(r.num_trip == 1);
  CHECK(r.num_session == 1);
  CHECK(r.num_hour == doctest::Approx(40.0 / 60.0));
  CHECK(r.trip_hour == doctest::Approx(0.5));
  CHECK(r.ave_utilization == doctest::Approx(0.75));
  CHECK(r.hourly_earning == doctest::Approx(20.0 / (40.0 / 60.0)));
  CHECK(r.earning_per_ride == doctest::Approx(20.0));
  CHECK(r.ave_n_trip_per_hour == doctest::Approx(1.5));
  CHECK(r.rider_wait_time == doctest::Approx(10.0 / 60.0));
  CHECK(r.weekly_cancel_rate == 0.0);
  CHECK(r.driver_rating == 5.0);
  CHECK(std::isnan(r.hourly_earning_var));
}

TEST_CASE("a week with no trips is all zeros") {
  const std::vector<TripEvent> trips = {testutil::trip(1, at(-2, 1, 10), 10, 30, {20, 20}, {21, 20})};
  const auto rows = panel::build_driver_week_panel(trips, panel::assign_cohorts(trips, kMajor, kAnchor), cfg());
  const auto& r = row(rows, 1, 5);
  CHECK(r.num_trip == 0);
  CHECK(r.num_hour == 0.0);
  CHECK(r.hourly_earning == 0.0);
  CHECK(r.ave_utilization == 0.0);
  CHECK_FALSE(r.driver_rating.has_value());
}

TEST_CASE("cancellation rate counts accepted requests") {
  std::vector<TripEvent> trips = {
      testutil::trip(1, at(0, 2, 9), 5, 10, {20, 20}, {21, 20}),
      testutil::cancelled(1, at(0, 2, 10), {20, 20}),
      testutil::trip(1, at(0, 2, 11), 5, 10, {20, 20}, {21, 20}),
      testutil::cancelled(1, at(0, 2, 12), {20, 20}),
  };
  const auto rows = panel::build_driver_week_panel(trips, panel::assign_cohorts(trips, kMajor, kAnchor), cfg());
  const auto& r = row(rows, 1, 0);
  CHECK(r.num_accepted == 4);
  CHECK(r.num_trip == 2);
  CHECK(r.weekly_cancel_rate == doctest::Approx(0.5));
}

TEST_CASE("cohort is the first post-launch week with a dropoff in the major market") {
  const std::vector<TripEvent> trips = {
      // Pre-launch dropoff inside: ignored.
      testutil::trip(1, at(-3, 0, 9), 5, 10, {20, 20}, {5, 5}),
      testutil::trip(1, at(4, 0, 9), 5, 10, {20, 20}, {5, 5}),
      testutil::trip(1, at(2, 0, 9), 5, 10, {20, 20}, {5, 5}),
      // Pickup inside, dropoff outside: not a treatment trip.
      testutil::trip(2, at(1, 0, 9), 5, 10, {5, 5}, {20, 20}),
      testutil::cancelled(3, at(1, 0, 9), {5, 5}),
      // Beyond the horizon.
      testutil::trip(4, at(13, 0, 9), 5, 10, {20, 20}, {5, 5}),
  };
  const auto coh = panel::assign_cohorts(trips, kMajor, kAnchor);
  REQUIRE(coh.size() == 4);
  CHECK(coh[0].cohort == 2);
  CHECK(coh[0].first_treatment_trip == 2u);
  CHECK_FALSE(coh[1].cohort.has_value());
  CHECK_FALSE(coh[2].cohort.has_value());
  CHECK_FALSE(coh[3].cohort.has_value());
}

TEST_CASE("duplicates and unassigned drivers are integrity errors") {
  std::vector<TripEvent> trips = {testutil::trip(1, at(0, 0, 9), 5, 10, {20, 20}, {21, 20})};
  trips.push_back(trips[0]);
  const auto coh = panel::assign_cohorts(trips, kMajor, kAnchor);
  CHECK_THROWS_AS(panel::build_driver_week_panel(trips, coh, cfg()), IntegrityError);
  trips.pop_back();
  CHECK_THROWS_AS(panel::build_driver_week_panel(trips, {}, cfg()), IntegrityError);
}

TEST_CASE("one trip per week gives aligned weekly rows across two logs") {
  std::vector<TripEvent> cur, prior;
  const auto prior_anchor = kAnchor - std::chrono::days(364);
  for (int w = -12; w <= 12; ++w) {
    cur.push_back(testutil::trip(9, at(w, 2, 12), 5, 25, {20, 20}, {21, 20}));
    auto p = cur.back();
    p.request_ts -= std::chrono::days(364);
    p.accept_ts -= std::chrono::days(364);
    *p.pickup_ts -= std::chrono::days(364);
    *p.dropoff_ts -= std::chrono::days(364);
    prior.push_back(p);
  }
  auto pc = cfg();
  const auto a = panel::build_driver_week_panel(cur, panel::assign_cohorts(cur, kMajor, kAnchor), pc);
  pc.anchor = prior_anchor;
  const auto b = panel::build_driver_week_panel(prior, panel::assign_cohorts(prior, kMajor, prior_anchor), pc);
  REQUIRE(a.size() + b.size() == 50);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].week == b[i].week);
    CHECK(a[i].num_trip == 1);
    CHECK(a[i].num_hour == doctest::Approx(b[i].num_hour));
  }
}

TEST_CASE("simulated panel is balanced, consistent with the log and round-trips") {
  auto c = sim::default_config();
  c.n_drivers = 120;
  c.seed = 3;
  c.generate_demand = false;
  const auto o = sim::generate_market(c);
  const auto coh = panel::assign_cohorts(o.trips, c.major_market().polygon, c.anchor);
  const auto rows = panel::build_driver_week_panel(o.trips, coh, cfg());
  CHECK(rows.size() == coh.size() * 25);

  std::int64_t trips_in_log = 0;
  double hours_in_log = 0;
  for (const auto& t : o.trips) {
    const int w = week_offset(t.accept_ts, c.anchor);
    if (t.cancelled || w < -12 || w > 12) continue;
    ++trips_in_log;
    hours_in_log += t.online_minutes() / 60.0;
  }
  std::int64_t trips_in_panel = 0;
  double hours_in_panel = 0;
  std::map<std::int64_t, int> last_enter;
  for (const auto& r : rows) {
    trips_in_panel += r.num_trip;
    hours_in_panel += r.num_hour;
    CHECK(r.ave_utilization <= 1.0 + 1e-12);
    CHECK(r.trip_hour <= r.num_hour + 1e-12);
    // enter_treatment never switches off.
    auto [it, fresh] = last_enter.try_emplace(r.driver_id, r.enter_treatment);
    if (!fresh) {
      CHECK(r.enter_treatment >= it->second);
      it->second = r.enter_treatment;
    }
  }
  CHECK(trips_in_panel == trips_in_log);
  CHECK(hours_in_panel == doctest::Approx(hours_in_log));

  const auto dir = testutil::temp_dir("panel_rt");
  panel::write_driver_week_panel(dir / "p.csv", rows);
  const auto back = panel::read_driver_week_panel(dir / "p.csv");
  REQUIRE(back.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); i += 97) {
    CHECK(back[i].driver_id == rows[i].driver_id);
    CHECK(back[i].cohort == rows[i].cohort);
    CHECK(back[i].num_hour == doctest::Approx(rows[i].num_hour));
    CHECK(panel::outcome_value(back[i], "hourly_earning") ==
          doctest::Approx(rows[i].hourly_earning).epsilon(1e-6));
  }
  CHECK_THROWS_AS(panel::outcome_value(rows[0], "bogus"), std::out_of_range);
}

TEST_CASE("high-demand flags") {
  std::vector<geo::HexCell> zones;
  std::vector<double> avg;
  for (int i = 0; i < 20; ++i) {
    zones.push_back({i, 0});
    avg.push_back(i);
  }
  // Decile: 20 zones, cut at the third-highest value, so two zones are flagged.
  const auto zip = panel::high_demand_flags(zones, avg, panel::ZoneKind::kZip);
  CHECK(std::count(zip.begin(), zip.end(), true) == 2);
  CHECK(zip[19]);
  CHECK(zip[18]);
  const auto hex = panel::high_demand_flags(zones, avg, panel::ZoneKind::kHex, 10);
  CHECK(std::count(hex.begin(), hex.end(), true) == 10);
  CHECK(hex[10]);
  CHECK_FALSE(hex[9]);
  // Ties broken by zone id.
  const auto tie = panel::high_demand_flags(zones, std::vector<double>(20, 1.0), panel::ZoneKind::kHex, 3);
  CHECK(tie[0]);
  CHECK(tie[2]);
  CHECK_FALSE(tie[3]);

  const std::vector<DemandRow> d = {{{0, 0}, -10, 5, 5, 5}, {{1, 0}, -10, 1, 1, 1},
                                    {{2, 0}, -10, 9, 9, 9}, {{2, 0}, 10, 100, 1, 1}};
  const auto hi = panel::median_high_demand_cells(d, -12);
  CHECK(hi == std::set<geo::HexCell>{{2, 0}});
}

TEST_CASE("zone-week table is balanced and counts sum to the demand log") {
  std::vector<DemandRow> d;
  for (int h = -12 * 168; h < 13 * 168; h += 17) d.push_back({{((h % 3) + 3) % 3, 0}, h, 4, 3, 2});
  panel::ZoneConfig zc;
  zc.kind = panel::ZoneKind::kHex;
  zc.anchor = kAnchor;
  const auto rows = panel::build_zone_week_demand(d, {}, zc);
  CHECK(rows.size() == 3 * 25);
  std::int64_t total = 0;
  for (const auto& r : rows) {
    total += r.intents;
    CHECK(r.price_indicator == 1.0);
  }
  CHECK(total == static_cast<std::int64_t>(d.size()) * 4);
}
