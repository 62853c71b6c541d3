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

#include <fstream>

#include "ridepolicy/errors.hpp"
#include "ridepolicy/io.hpp"
#include "ridepolicy/timeutil.hpp"
#include "ridepolicy/trip.hpp"
#include "test_util.hpp"

using namespace ridepolicy;
using testutil::at;
using testutil::kAnchor;

TEST_CASE("week offsets around the anchor") {
  CHECK(week_offset(kAnchor, kAnchor) == 0);
  CHECK(week_offset(kAnchor - std::chrono::minutes(1), kAnchor) == -1);
  CHECK(week_offset(kAnchor + std::chrono::days(13) + std::chrono::hours(23) +
                        std::chrono::minutes(59),
                    kAnchor) == 1);
  CHECK(week_offset(kAnchor - std::chrono::days(7 * 12), kAnchor) == -12);
  CHECK_THROWS_AS(week_index(at(13, 0, 0), kAnchor, -12, 12), std::out_of_range);
  CHECK(floor_div(-1, 168) == -1);
  CHECK(floor_div(167, 168) == 0);
}

TEST_CASE("calendar helpers") {
  CHECK(day_of_week(kAnchor) == 0);
  CHECK(day_of_week(at(0, 6, 23)) == 6);
  CHECK(hour_of_day(at(2, 3, 17, 45)) == 17);
  CHECK(hour_index(at(-1, 6, 23), kAnchor) == -1);
  CHECK(format_timestamp(at(0, 1, 8, 5)) == "2024-02-06 08:05");
  CHECK(parse_timestamp("2024-02-06 08:05") == at(0, 1, 8, 5));
}

TEST_CASE("trip integrity checks") {
  auto t = testutil::trip(1, at(0, 0, 10), 10, 30, {1, 1}, {2, 2});
  CHECK_NOTHROW(check_trip(t));
  CHECK(t.online_minutes() == 40);
  CHECK(t.passenger_minutes() == 30);
  auto bad = t;
  bad.platform_take += 1;
  CHECK_THROWS_AS(check_trip(bad), IntegrityError);
  bad = t;
  bad.pickup_ts = t.accept_ts - std::chrono::minutes(1);
  CHECK_THROWS_AS(check_trip(bad), IntegrityError);
  auto c = testutil::cancelled(1, at(0, 0, 9), {0, 0});
  CHECK_NOTHROW(check_trip(c));
  c.driver_earnings = 5;
  c.rider_payment = 5;
  CHECK_THROWS_AS(check_trip(c), IntegrityError);
  CHECK_THROWS_AS(check_demand({{0, 0}, 0, 5, 4, 5}), IntegrityError);
  CHECK_NOTHROW(check_demand({{0, 0}, 0, 5, 4, 4}));
}

TEST_CASE("sessions split at the idle cutoff") {
  std::vector<TripEvent> trips = {
      testutil::trip(7, at(0, 0, 8), 5, 20, {0, 0}, {1, 0}),
      // Gap 119 min after the 08:25 dropoff: same session.
      testutil::trip(7, at(0, 0, 10, 24), 5, 20, {1, 0}, {2, 0}),
      // Gap of exactly 120 min: new session.
      testutil::trip(7, at(0, 0, 12, 49), 5, 20, {2, 0}, {3, 0}),
      testutil::cancelled(7, at(0, 0, 14), {3, 0}),
      testutil::trip(8, at(0, 0, 9), 5, 20, {0, 0}, {1, 0}),
  };
  const auto s = sessionize(trips);
  REQUIRE(s.size() == 3);
  std::size_t n7 = 0;
  for (const auto& x : s) {
    if (x.driver_id == 7) {
      ++n7;
      CHECK((x.trips.size() == 2 || x.trips.size() == 1));
    }
  }
  CHECK(n7 == 2);
  trips.push_back(testutil::trip(8, at(0, 0, 9, 10), 5, 20, {0, 0}, {1, 0}));
  CHECK_THROWS_AS(sessionize(trips), IntegrityError);
}

TEST_CASE("trip and demand logs round-trip through CSV") {
  const auto dir = testutil::temp_dir("io");
  std::vector<TripEvent> trips = {testutil::trip(1, at(-3, 2, 7, 13), 4, 17, {1.25, 2.5}, {3, 4}, 1234),
                                  testutil::cancelled(2, at(-3, 2, 8), {5, 6})};
  trips[0].tip = 150;
  trips[0].vehicle = VehicleType::kLuxSuv;
  trips[1].rating.reset();
  io::write_trips(dir / "t.csv", trips);
  const auto back = io::read_trips(dir / "t.csv");
  REQUIRE(back.size() == 2);
  CHECK(back[0].driver_id == 1);
  CHECK(back[0].accept_ts == trips[0].accept_ts);
  CHECK(back[0].dropoff_ts == trips[0].dropoff_ts);
  CHECK(back[0].driver_earnings == 1234);
  CHECK(back[0].tip == 150);
  CHECK(back[0].vehicle == VehicleType::kLuxSuv);
  CHECK(back[0].origin.x_km == doctest::Approx(1.25));
  CHECK(back[1].cancelled);
  CHECK_FALSE(back[1].rating.has_value());

  std::vector<DemandRow> d = {{{1, -2}, -5, 10, 6, 3}, {{0, 0}, 7, 1, 1, 0}};
  io::write_demand(dir / "d.csv", d);
  const auto db = io::read_demand(dir / "d.csv");
  REQUIRE(db.size() == 2);
  CHECK(db[0].hex == geo::HexCell{1, -2});
  CHECK(db[0].hour_index == -5);
  CHECK(db[0].completes == 3);
}

TEST_CASE("reading a log with a broken identity raises an integrity error") {
  const auto dir = testutil::temp_dir("io_bad");
  io::write_demand(dir / "d.csv", {{{0, 0}, 0, 3, 2, 1}});
  std::ifstream in(dir / "d.csv");
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  in.close();
  // Swap requests and completes: completes > requests.
  {
    std::ofstream out(dir / "d.csv");
    out << header << "\n0,0,0,3,1,2\n";
  }
  CHECK_THROWS_AS(io::read_demand(dir / "d.csv"), IntegrityError);
  CHECK_THROWS(io::read_trips(dir / "missing.csv"));
}

TEST_CASE("money and number formatting") {
  CHECK(io::fmt_money(1234) == "12.34");
  CHECK(io::parse_money("12.34") == 1234);
  CHECK(io::fmt_double(std::nan("")).empty());
  CHECK(std::isnan(io::parse_double("")));
}
