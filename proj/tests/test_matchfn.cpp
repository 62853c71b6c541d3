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

#include <chrono>
#include <cmath>
#include <random>

#include "ridepolicy/matchfn.hpp"
#include "test_util.hpp"

using namespace ridepolicy;
using namespace ridepolicy::matchfn;
using testutil::at;
using testutil::kAnchor;

namespace {

std::vector<MarketHourObs> synthetic(const MarketKey& k, int n, double logA, double a, double b,
                                     double sigma, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<MarketHourObs> obs(n);
  for (auto& o : obs) {
    o.market = k;
    const double ld = 3.0 + z(rng), ls = 2.0 + 0.5 * (ld - 3.0) + 0.8 * z(rng);
    o.D = std::exp(ld);
    o.S = std::exp(ls);
    o.y = std::exp(logA + a * ld + b * ls + sigma * z(rng));
  }
  return obs;
}

AreaAssignment grid_areas(const geo::HexGrid& g, std::vector<geo::HexCell>* cells_out = nullptr) {
  std::vector<geo::HexCell> cells;
  for (int q = 0; q < 6; ++q) {
    for (int r = 0; r < 6; ++r) cells.push_back({q, r});
  }
  if (cells_out) *cells_out = cells;
  return AreaAssignment::partition(cells, g);
}

}  // namespace

TEST_CASE("one trip inside one hex, next accept 10 minutes later") {
  const geo::HexGrid g(5.16);
  const auto c = g.center({2, 2});
  const std::vector<TripEvent> trips = {
      testutil::trip(1, at(0, 2, 10, 0), 0, 30, c, {c.x_km + 0.1, c.y_km}),
      testutil::trip(1, at(0, 2, 10, 40), 0, 5, {c.x_km + 0.1, c.y_km}, c),
  };
  const auto f = supply_accounting(trips, g, kAnchor);
  const auto h = hour_index(at(0, 2, 10), kAnchor);
  const auto* s = f.find({2, 2}, h);
  REQUIRE(s);
  CHECK(s->transporting_h == doctest::Approx(35.0 / 60));
  // 10 min between trips plus 15 min of the terminal idle in this hour.
  CHECK(s->idle_h == doctest::Approx(25.0 / 60));
  CHECK(s->enroute_h == 0.0);
}

TEST_CASE("a session-final dropoff gets exactly two idle hours") {
  const geo::HexGrid g(5.16);
  const auto c = g.center({0, 0});
  const std::vector<TripEvent> trips = {testutil::trip(4, at(1, 3, 13, 20), 7, 13, c, c)};
  const auto f = supply_accounting(trips, g, kAnchor);
  double idle = 0, total = 0;
  for (const auto& r : f.rows()) {
    idle += r.hours.idle_h;
    total += r.hours.total();
    CHECK(r.hours.total() <= 1.0 + 1e-12);
  }
  CHECK(idle == doctest::Approx(2.0));
  CHECK(total == doctest::Approx(2.0 + 20.0 / 60));
}

TEST_CASE("state hours respect the time budget on a busy day") {
  const geo::HexGrid g(5.16);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0, 30);
  std::vector<TripEvent> trips;
  auto ts = at(0, 0, 6);
  for (int k = 0; k < 40; ++k) {
    trips.push_back(testutil::trip(1, ts, 6, 17, {u(rng), u(rng)}, {u(rng), u(rng)}));
    ts = *trips.back().dropoff_ts + std::chrono::minutes(k % 5 == 4 ? 150 : 4);
  }
  const auto f = supply_accounting(trips, g, kAnchor);
  std::map<std::int64_t, double> per_hour;
  std::map<std::int64_t, double> per_day;
  for (const auto& r : f.rows()) {
    per_hour[r.hour_index] += r.hours.total();
    per_day[floor_div(r.hour_index, 24)] += r.hours.total();
  }
  for (const auto& [h, v] : per_hour) CHECK(v <= 1.0 + 1e-9);
  for (const auto& [d, v] : per_day) CHECK(v <= 24.0 + 1e-9);
}

TEST_CASE("slots and market keys") {
  CHECK(slot_of_hour(8) == Slot::kMorningPeak);
  CHECK(slot_of_hour(7) == Slot::kMorningPeak);
  CHECK(slot_of_hour(9) == Slot::kMidday);
  CHECK(slot_of_hour(17) == Slot::kEveningPeak);
  CHECK(slot_of_hour(20) == Slot::kOffPeak);
  CHECK(slot_of_hour(23) == Slot::kLateNight);
  CHECK_FALSE(slot_of_hour(3).has_value());

  const geo::HexGrid g(36.0);
  std::vector<geo::HexCell> cells;
  const auto areas = grid_areas(g, &cells);
  // Wednesday 08:30.
  const auto wed = market_of(areas, cells[7], hour_index(at(0, 2, 8, 30), kAnchor), kAnchor);
  REQUIRE(wed);
  CHECK(wed->slot == Slot::kMorningPeak);
  CHECK(wed->day == 2);
  CHECK(wed->area == areas.area_of(cells[7]));
  CHECK_FALSE(market_of(areas, cells[7], hour_index(at(0, 2, 3), kAnchor), kAnchor).has_value());
  // Pre-anchor hours map to the right weekday too.
  const auto sun = market_of(areas, cells[0], hour_index(at(-1, 6, 22), kAnchor), kAnchor);
  REQUIRE(sun);
  CHECK(sun->day == 6);

  const auto keys = define_markets(areas);
  CHECK(keys.size() == 525);
  for (int i = 0; i < kNumMarkets; ++i) CHECK(market_index(market_from_index(i)) == i);
  CHECK(parse_slot(slot_name(Slot::kEveningPeak)) == Slot::kEveningPeak);
  CHECK(parse_day(day_name(4)) == 4);

  std::map<int, int> per_area;
  for (const auto& [c, a] : areas.cells()) ++per_area[a];
  CHECK(per_area.size() == 15);
  CHECK_THROWS_AS(areas.area_of({99, 99}), std::out_of_range);
}

TEST_CASE("noiseless Cobb-Douglas data is recovered exactly") {
  const MarketKey k{3, Slot::kMidday, 1};
  const auto fit = fit_cobb_douglas(k, synthetic(k, 200, std::log(2.0), 0.8, 0.3, 0.0, 2));
  REQUIRE(fit.fitted());
  CHECK(std::abs(fit.log_A - std::log(2.0)) < 1e-10);
  CHECK(std::abs(fit.alpha - 0.8) < 1e-10);
  CHECK(std::abs(fit.beta - 0.3) < 1e-10);
  CHECK(fit.r2 == doctest::Approx(1.0));
  CHECK(fit.returns_to_scale() == doctest::Approx(1.1));
}

TEST_CASE("lognormal noise: elasticities within 0.05") {
  for (std::uint64_t seed = 10; seed < 20; ++seed) {
    const MarketKey k{1, Slot::kLateNight, 6};
    const auto fit = fit_cobb_douglas(k, synthetic(k, 500, 0.5, 0.75, 0.4, 0.1, seed));
    CHECK(std::abs(fit.alpha - 0.75) < 0.05);
    CHECK(std::abs(fit.beta - 0.4) < 0.05);
  }
}

TEST_CASE("rescaling supply shifts only the intercept") {
  const MarketKey k{2, Slot::kOffPeak, 3};
  auto obs = synthetic(k, 300, 0.2, 0.9, 0.35, 0.1, 3);
  const auto a = fit_cobb_douglas(k, obs);
  const double c = 7.5;
  for (auto& o : obs) o.S *= c;
  const auto b = fit_cobb_douglas(k, obs);
  CHECK(std::abs(b.alpha - a.alpha) < 1e-8);
  CHECK(std::abs(b.beta - a.beta) < 1e-8);
  CHECK(std::abs(b.log_A - (a.log_A - a.beta * std::log(c))) < 1e-8);
}

TEST_CASE("zero rows are dropped; thin or collinear markets are flagged") {
  const MarketKey k{5, Slot::kMorningPeak, 0};
  auto obs = synthetic(k, 50, 0.0, 0.7, 0.3, 0.05, 4);
  obs[0].y = 0;
  obs[1].S = 0;
  const auto fit = fit_cobb_douglas(k, obs);
  CHECK(fit.n_dropped == 2);
  CHECK(fit.n_obs == 48);
  CHECK(fit_cobb_douglas(k, synthetic(k, 5, 0, 0.5, 0.5, 0.1, 5)).status == FitStatus::kTooFewObs);
  auto col = synthetic(k, 40, 0, 0.5, 0.5, 0.1, 6);
  for (auto& o : col) o.S = 2 * o.D;
  CHECK(fit_cobb_douglas(k, col).status == FitStatus::kCollinear);
}

TEST_CASE("525 market fit runs well inside 30 s") {
  std::vector<MarketKey> keys;
  std::vector<MarketHourObs> obs;
  for (int i = 0; i < kNumMarkets; ++i) {
    keys.push_back(market_from_index(i));
    const auto o = synthetic(keys.back(), 500, 0.1, 0.8, 0.4, 0.1, 100 + i);
    obs.insert(obs.end(), o.begin(), o.end());
  }
  const auto t0 = std::chrono::steady_clock::now();
  const auto fits = fit_all_markets(keys, obs);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  CHECK(secs < 30.0);
  REQUIRE(fits.size() == 525);
  double a = 0, b = 0;
  for (const auto& f : fits) {
    CHECK(f.fitted());
    a += f.alpha / 525;
    b += f.beta / 525;
  }
  CHECK(a == doctest::Approx(0.8).epsilon(0.01));
  CHECK(b == doctest::Approx(0.4).epsilon(0.02));
}

TEST_CASE("market observations join supply and demand by hex-hour") {
  const geo::HexGrid g(5.16);
  std::vector<geo::HexCell> cells;
  const auto areas = grid_areas(g, &cells);
  SupplyField s;
  const auto h = hour_index(at(0, 1, 12), kAnchor);
  s.add(cells[0], h, SupplyStateKind::kIdle, 0.5);
  s.add(cells[0], h, SupplyStateKind::kTransporting, 0.25);
  s.add(cells[1], hour_index(at(0, 1, 4), kAnchor), SupplyStateKind::kIdle, 1.0);  // no slot
  s.add({50, 50}, h, SupplyStateKind::kIdle, 1.0);  // outside the areas
  DemandField d;
  d.add(cells[0], h, {10, 8, 6});
  d.add(cells[2], h, {3, 2, 1});
  const auto obs = build_market_obs(s, d, areas, kAnchor);
  REQUIRE(obs.size() == 2);
  CHECK(obs[0].hex == cells[0]);
  CHECK(obs[0].S == doctest::Approx(0.75));
  CHECK(obs[0].D == 10);
  CHECK(obs[0].y == 6);
  CHECK(obs[1].S == 0.0);
  CHECK(hex_from_key(hex_hour_key({-3, 7}, -1234)) == geo::HexCell{-3, 7});
  CHECK(hour_from_key(hex_hour_key({-3, 7}, -1234)) == -1234);

  const std::vector<DemandRow> rows = {{{0, 0}, h, 4, 3, 2}, {{0, 0}, h, 1, 1, 1}};
  const auto agg = aggregate_demand(rows, g, g);
  REQUIRE(agg.find({0, 0}, h));
  CHECK(agg.find({0, 0}, h)->intents == 5);
}
