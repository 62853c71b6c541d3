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
#include <fstream>
#include <map>
#include <sstream>

#include "ridepolicy/errors.hpp"
#include "ridepolicy/io.hpp"
#include "ridepolicy/panel.hpp"
#include "ridepolicy/simkit.hpp"
#include "test_util.hpp"

using namespace ridepolicy;

namespace {

sim::SimConfig small(int n = 150, std::uint64_t seed = 7) {
  auto c = sim::default_config();
  c.n_drivers = n;
  c.seed = seed;
  return c;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// (treated post - treated pre) - (never post - never pre) in mean log weekly hours.
double did_gap(const sim::SimOutput& o, const sim::SimConfig& c) {
  const auto coh = panel::assign_cohorts(o.trips, c.major_market().polygon, c.anchor);
  panel::PanelConfig pc;
  pc.anchor = c.anchor;
  const auto rows = panel::build_driver_week_panel(o.trips, coh, pc);
  double s[2][2] = {}, n[2][2] = {};
  for (const auto& r : rows) {
    if (r.num_hour <= 0) continue;
    const int g = r.cohort ? 1 : 0;
    const int post = r.cohort ? (r.week >= *r.cohort) : (r.week >= 0);
    s[g][post] += std::log(r.num_hour);
    n[g][post] += 1;
  }
  return (s[1][1] / n[1][1] - s[1][0] / n[1][0]) - (s[0][1] / n[0][1] - s[0][0] / n[0][0]);
}

}  // namespace

TEST_CASE("config validation") {
  auto c = small();
  CHECK_NOTHROW(sim::validate(c));
  c.anchor += std::chrono::days(1);
  CHECK_THROWS_AS(sim::validate(c), ConfigError);
  c = small();
  c.n_drivers = 0;
  CHECK_THROWS_AS(sim::validate(c), ConfigError);
  c = small();
  c.markets[1].polygon = geo::ConvexPolygon::rectangle(10, 10, 20, 20);
  CHECK_THROWS_AS(sim::validate(c), ConfigError);
  c = small();
  c.markets[0].major = false;
  CHECK_THROWS_AS(sim::validate(c), ConfigError);
}

TEST_CASE("same seed gives byte-identical logs; another seed differs") {
  const auto dir = testutil::temp_dir("sim_det");
  const auto c = small(80);
  io::write_trips(dir / "a.csv", sim::generate_market(c).trips);
  io::write_trips(dir / "b.csv", sim::generate_market(c).trips);
  auto c2 = c;
  c2.seed = 8;
  io::write_trips(dir / "c.csv", sim::generate_market(c2).trips);
  CHECK(slurp(dir / "a.csv") == slurp(dir / "b.csv"));
  CHECK(slurp(dir / "a.csv") != slurp(dir / "c.csv"));
}

TEST_CASE("generated logs satisfy the payment identity and the demand funnel") {
  const auto o = sim::generate_market(small(120));
  REQUIRE(!o.trips.empty());
  REQUIRE(!o.demand.empty());
  for (const auto& t : o.trips) CHECK_NOTHROW(check_trip(t));
  for (const auto& d : o.demand) {
    CHECK(d.completes <= d.requests);
    CHECK(d.requests <= d.intents);
  }
  CHECK(std::is_sorted(o.trips.begin(), o.trips.end(), trip_less));
  CHECK_NOTHROW(sessionize(o.trips));
}

TEST_CASE("truth cohorts match the dropoff rule applied to the log") {
  const auto c = small(200);
  const auto o = sim::generate_market(c);
  const auto coh = panel::assign_cohorts(o.trips, c.major_market().polygon, c.anchor);
  std::map<std::int64_t, std::optional<int>> truth(o.truth.cohorts.begin(), o.truth.cohorts.end());
  int treated = 0, never = 0;
  for (const auto& x : coh) {
    REQUIRE(truth.count(x.driver_id));
    CHECK(truth[x.driver_id] == x.cohort);
    (x.cohort ? treated : never) += 1;
  }
  CHECK(treated > 0);
  CHECK(never > 0);
  CHECK(o.truth.effects.at("log_num_hour") == doctest::Approx(0.25));
  CHECK(o.truth.elasticities.size() == 525);
}

TEST_CASE("a lone driver confined to an adjacent market is never treated") {
  auto c = small(1);
  c.major_home_share = 0.0;
  c.venture_scale = 0.0;
  const auto o = sim::generate_market(c);
  REQUIRE(o.truth.cohorts.size() == 1);
  CHECK_FALSE(o.truth.cohorts[0].second.has_value());
}

TEST_CASE("prior year equals a zero-effect rerun shifted by 364 days") {
  auto c = small(60);
  c.prior_year_seed = c.seed;
  c.year_drift_share = 0.0;
  const auto two = sim::generate_two_year(c);
  auto z = sim::zero_effects(c);
  const auto rerun = sim::generate_market(z);
  REQUIRE(two.prior.trips.size() == rerun.trips.size());
  for (std::size_t i = 0; i < rerun.trips.size(); ++i) {
    CHECK(two.prior.trips[i].accept_ts + std::chrono::days(364) == rerun.trips[i].accept_ts);
    CHECK(two.prior.trips[i].driver_earnings == rerun.trips[i].driver_earnings);
  }
  REQUIRE(two.prior.demand.size() == rerun.demand.size());
  for (std::size_t i = 0; i < rerun.demand.size(); ++i) {
    CHECK(two.prior.demand[i].intents == rerun.demand[i].intents);
  }
  CHECK(two.prior.truth.anchor == c.anchor - std::chrono::days(364));
  for (const auto& [k, v] : two.prior.truth.effects) CHECK(v == 0.0);
}

TEST_CASE("larger injected effect widens the treated-minus-control gap") {
  double prev = -1e9;
  for (double e : {0.0, 0.1, 0.25}) {
    auto c = small(300, 21);
    c.effect_hours = e;
    c.generate_demand = false;
    const double gap = did_gap(sim::generate_market(c), c);
    CHECK(gap > prev);
    prev = gap;
    if (e == 0.0) CHECK(std::abs(gap) < 0.05);
    if (e == 0.25) CHECK(gap == doctest::Approx(0.25).epsilon(0.25));
  }
}

TEST_CASE("population classes and layout") {
  const auto c = small(500);
  const auto pop = sim::make_population(c);
  std::map<sim::DriverClass, int> n;
  for (const auto& p : pop) {
    CHECK_NOTHROW(sim::check_profile(p));
    ++n[p.driver_class];
  }
  CHECK(n.size() == 3);
  const auto layout = sim::build_layout(c);
  CHECK(std::is_sorted(layout.demand_cells.begin(), layout.demand_cells.end()));
  CHECK(matchfn::define_markets(layout.areas).size() == 525);
}
