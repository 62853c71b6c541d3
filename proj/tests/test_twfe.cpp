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
#include <random>

#include "ridepolicy/csa.hpp"
#include "ridepolicy/errors.hpp"
#include "ridepolicy/twfe.hpp"
#include "test_util.hpp"

using namespace ridepolicy;
using namespace ridepolicy::causal;

namespace {

// Dummy-variable OLS with the same cluster sandwich, restricted to the first
// k columns.
struct DummyFit {
  Eigen::VectorXd coef, se;
};

DummyFit dummy_ols(const Eigen::VectorXd& y, const Eigen::MatrixXd& X, const std::vector<int>& f1,
                   const std::vector<int>& f2, const std::vector<int>& cl) {
  const int n = static_cast<int>(y.size()), k = static_cast<int>(X.cols());
  const int n1 = *std::max_element(f1.begin(), f1.end()) + 1;
  const int n2 = *std::max_element(f2.begin(), f2.end()) + 1;
  // Drop the first level of f2 to avoid the dummy trap.
  Eigen::MatrixXd Z = Eigen::MatrixXd::Zero(n, k + n1 + n2 - 1);
  Z.leftCols(k) = X;
  for (int i = 0; i < n; ++i) {
    Z(i, k + f1[i]) = 1.0;
    if (f2[i] > 0) Z(i, k + n1 + f2[i] - 1) = 1.0;
  }
  const Eigen::VectorXd b = Z.colPivHouseholderQr().solve(y);
  const Eigen::VectorXd e = y - Z * b;
  const Eigen::MatrixXd bread = (Z.transpose() * Z).inverse();
  const int ng = *std::max_element(cl.begin(), cl.end()) + 1;
  Eigen::MatrixXd score = Eigen::MatrixXd::Zero(ng, Z.cols());
  for (int i = 0; i < n; ++i) score.row(cl[i]) += e(i) * Z.row(i);
  const double factor = static_cast<double>(ng) / (ng - 1) * (n - 1.0) / (n - k);
  const Eigen::MatrixXd V = factor * bread * score.transpose() * score * bread;
  DummyFit out{b.head(k), V.diagonal().head(k).cwiseSqrt()};
  return out;
}

UnitPanel staggered(int n, int weeks, const std::vector<std::optional<int>>& cohort_cycle,
                    double delta, std::uint64_t seed, bool dynamic_effect = false) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  UnitPanel p;
  p.first_week = -weeks / 2;
  p.y.resize(n, weeks);
  p.x.resize(n, 0);
  for (int i = 0; i < n; ++i) {
    p.unit_ids.push_back(i + 1);
    p.cohort.push_back(cohort_cycle[i % cohort_cycle.size()]);
    const double a = z(rng);
    for (int j = 0; j < weeks; ++j) {
      const int t = p.first_week + j;
      const auto& g = p.cohort.back();
      const double eff = g && t >= *g ? delta * (dynamic_effect ? 1 + t - *g : 1) : 0.0;
      p.y(i, j) = a + 0.05 * j * j + eff + 0.2 * z(rng);
    }
  }
  return p;
}

}  // namespace

TEST_CASE("fe_ols matches dummy-variable OLS on an unbalanced panel") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> z(0.0, 1.0);
  std::bernoulli_distribution keep(0.8);
  std::vector<double> yv;
  std::vector<std::array<double, 2>> xv;
  std::vector<int> f1, f2;
  for (int i = 0; i < 40; ++i) {
    const double a = z(rng);
    for (int t = 0; t < 8; ++t) {
      if (!keep(rng)) continue;
      const double x1 = z(rng) + 0.3 * a, x2 = z(rng) + 0.1 * t;
      yv.push_back(a + 0.2 * t + 1.5 * x1 - 0.7 * x2 + z(rng));
      xv.push_back({x1, x2});
      f1.push_back(i);
      f2.push_back(t);
    }
  }
  const Eigen::Index n = static_cast<Eigen::Index>(yv.size());
  Eigen::VectorXd y(n);
  Eigen::MatrixXd X(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    y(i) = yv[i];
    X(i, 0) = xv[i][0];
    X(i, 1) = xv[i][1];
  }
  const auto fit = fe_ols(y, X, {"x1", "x2"}, f1, f2, f1);
  const auto oracle = dummy_ols(y, X, f1, f2, f1);
  for (int j = 0; j < 2; ++j) {
    CHECK(std::abs(fit.coef(j) - oracle.coef(j)) < 1e-8);
    CHECK(fit.se(j) == doctest::Approx(oracle.se(j)).epsilon(1e-6));
  }
  CHECK(fit.n_clusters == 40);
}

TEST_CASE("regressors absorbed by the fixed effects") {
  const int n = 30;
  Eigen::VectorXd y = Eigen::VectorXd::LinSpaced(n, 0, 1);
  Eigen::MatrixXd X(n, 2);
  std::vector<int> unit(n), week(n);
  for (int i = 0; i < n; ++i) {
    unit[i] = i / 5;
    week[i] = i % 5;
    X(i, 0) = week[i] * 2.0;  // absorbed by week effects
    X(i, 1) = std::sin(i);
  }
  CHECK_THROWS_AS(fe_ols(y, X, {"post", "x"}, unit, week, unit), EstimationError);
  const auto fit = fe_ols(y, X, {"post", "x"}, unit, week, unit, true);
  CHECK_FALSE(fit.identified[0]);
  CHECK(std::isnan(fit.coef(0)));
  CHECK(fit.identified[1]);
  X.col(0) = 3.0 * X.col(1);
  try {
    fe_ols(y, X, {"a", "b"}, unit, week, unit);
    FAIL("expected collinearity error");
  } catch (const EstimationError& e) {
    CHECK(std::string(e.what()).find("collinear") != std::string::npos);
  }
}

TEST_CASE("Bacon decomposition reproduces the TWFE coefficient") {
  const std::vector<std::optional<int>> cycle = {std::nullopt, -2, 0, 0, 3, std::nullopt};
  for (bool dynamic : {false, true}) {
    const auto p = staggered(240, 14, cycle, 0.3, 2, dynamic);
    const auto b = bacon_decompose(p);
    CHECK(std::abs(b.weighted_sum - b.twfe_coef) < 1e-8);
    double w = 0;
    for (const auto& c : b.components) w += c.weight;
    CHECK(std::abs(w - 1.0) < 1e-9);
    REQUIRE(b.summary.size() == 3);
    CHECK(bacon_category_name(b.summary[0].category) == "Earlier vs Later Treated");
    CHECK(bacon_category_name(b.summary[1].category) == "Later vs Earlier Treated");
    CHECK(bacon_category_name(b.summary[2].category) == "Treated vs Untreated");
    for (const auto& s : b.summary) CHECK(s.n_components > 0);
  }
}

TEST_CASE("Bacon identity holds without never-treated units and with always-treated units") {
  const auto p = staggered(150, 10, {-5, -1, 2}, 0.2, 3, true);
  const auto b = bacon_decompose(p);
  CHECK(std::abs(b.weighted_sum - b.twfe_coef) < 1e-8);
  CHECK(b.summary[2].n_components == 0);
}

TEST_CASE("single cohort against never treated has one component with weight 1") {
  const auto p = staggered(100, 8, {0, std::nullopt}, 0.5, 4);
  const auto b = bacon_decompose(p);
  REQUIRE(b.components.size() == 1);
  CHECK(b.components[0].weight == doctest::Approx(1.0));
  CHECK(b.components[0].estimate == doctest::Approx(b.twfe_coef));
  CHECK(b.components[0].category == BaconCategory::kTreatedVsUntreated);
}

TEST_CASE("constant outcome gives zero estimates; missing cells are rejected") {
  auto p = staggered(60, 8, {0, 2, std::nullopt}, 0.0, 5);
  p.y.setConstant(3.0);
  const auto b = bacon_decompose(p);
  for (const auto& c : b.components) CHECK(std::abs(c.estimate) < 1e-12);
  CHECK(std::abs(b.twfe_coef) < 1e-10);
  p.y(0, 0) = std::nan("");
  CHECK_THROWS_AS(bacon_decompose(p), EstimationError);
}

TEST_CASE("two-year DiD recovers the interaction and the demand slope") {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<TwoYearObs> obs;
  // Each driver is observed in the prior year and the treatment year.
  for (int i = 0; i < 300; ++i) {
    const double a = z(rng);
    for (int treated_y : {0, 1}) {
      for (int w = -6; w <= 6; ++w) {
        const int post = w >= 0;
        const double demand = 5.0 + z(rng) + 0.5 * post;
        const double y = a + 0.1 * w + 0.3 * treated_y + 0.2 * treated_y * post +
                         0.4 * demand + 0.1 * z(rng);
        obs.push_back({i, w, treated_y, post, y, demand});
      }
    }
  }
  const auto r = twfe_did(obs);
  CHECK_FALSE(r.beta2_identified);
  CHECK(r.beta1 == doctest::Approx(0.3).epsilon(0.05));
  CHECK(r.beta3 == doctest::Approx(0.2).epsilon(0.05));
  CHECK(r.beta_demand == doctest::Approx(0.4).epsilon(0.05));
  CHECK(r.se3 > 0);
  CHECK(r.n_units == 300);
  const auto nd = twfe_did(obs, false);
  CHECK(std::isnan(nd.beta_demand));
}

TEST_CASE("exposure-weighted demand uses pre-period zone shares") {
  using testutil::at;
  const geo::HexGrid grid(36.0);
  const geo::Point p0 = grid.center({0, 0}), p1 = grid.center({3, 0});
  const std::vector<TripEvent> trips = {
      testutil::trip(1, at(-3, 0, 9), 5, 10, p0, p0),
      testutil::trip(1, at(-2, 0, 9), 5, 10, p0, p0),
      testutil::trip(1, at(-1, 0, 9), 5, 10, p1, p1),
      testutil::trip(1, at(2, 0, 9), 5, 10, p1, p1),
      testutil::trip(2, at(3, 0, 9), 5, 10, p1, p1),
  };
  const auto s = driver_zone_shares(trips, grid, testutil::kAnchor, -12);
  CHECK(s.shares.at(1).at({0, 0}) == doctest::Approx(2.0 / 3));
  CHECK(s.shares.at(1).at({3, 0}) == doctest::Approx(1.0 / 3));
  CHECK(s.flagged.count(2));
  CHECK(s.shares.at(2).at({3, 0}) == 1.0);
  const std::map<geo::HexCell, std::vector<double>> series = {{{0, 0}, {30, 60}}, {{3, 0}, {3, 6}}};
  const auto d = exposure_weighted_demand(s.shares.at(1), series, 2);
  CHECK(d[0] == doctest::Approx(21.0));
  CHECK(d[1] == doctest::Approx(42.0));
}

TEST_CASE("spillover DiD recovers a planted demand shift") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> z(0.0, 0.05);
  std::vector<panel::ZoneWeekDemand> rows;
  for (int q = 0; q < 20; ++q) {
    for (int w = -12; w <= 12; ++w) {
      panel::ZoneWeekDemand r;
      r.zone = {q, 0};
      r.week = w;
      r.in_major_market = q < 8;
      r.high_demand = q % 4 == 0;
      const double shift = (r.in_major_market && w >= 0 ? 0.1 : 0.0) +
                           (r.in_major_market && r.high_demand && w >= 0 ? 0.15 : 0.0);
      r.price_indicator = 1.0 + 0.1 * std::sin(q * 7 + w);
      r.intents = static_cast<std::int64_t>(std::lround(std::expm1(6.0 + 0.02 * q + 0.01 * w + shift + z(rng))));
      r.requests = r.intents;
      r.completes = r.intents;
      rows.push_back(r);
    }
  }
  const auto dd = demand_spillover_did(rows, "intents", false);
  CHECK(dd.interaction == doctest::Approx(0.1 + 0.15 * 2.0 / 8.0).epsilon(0.15));
  const auto ddd = demand_spillover_did(rows, "intents", true);
  CHECK(ddd.interaction == doctest::Approx(0.15).epsilon(0.15));
  CHECK(ddd.interaction_se > 0);
  CHECK_THROWS_AS(demand_spillover_did(rows, "bogus", false), std::invalid_argument);
}

TEST_CASE("spillover DiD: constant demand gives zero, a 3% shift is recovered") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> z(0.0, 0.01);
  std::vector<panel::ZoneWeekDemand> flat, shifted;
  for (int q = 0; q < 30; ++q) {
    for (int w = -12; w <= 12; ++w) {
      panel::ZoneWeekDemand r;
      r.zone = {q, 1};
      r.week = w;
      r.in_major_market = q < 10;
      r.price_indicator = 1.0 + 0.05 * std::cos(q + 3 * w);
      r.intents = r.requests = r.completes = 500;
      flat.push_back(r);
      const double lift = r.in_major_market && w >= 0 ? std::log(1.03) : 0.0;
      r.intents = static_cast<std::int64_t>(std::lround(5000.0 * std::exp(0.01 * q + lift + z(rng))));
      shifted.push_back(r);
    }
  }
  CHECK(std::abs(demand_spillover_did(flat, "intents", false).interaction) < 1e-10);
  const auto r = demand_spillover_did(shifted, "intents", false);
  CHECK(std::abs(r.interaction - 0.03) < 0.01);
}
