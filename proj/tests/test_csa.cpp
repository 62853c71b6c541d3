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

#include "ridepolicy/bootstrap.hpp"
#include "ridepolicy/csa.hpp"
#include "ridepolicy/errors.hpp"

using namespace ridepolicy;
using namespace ridepolicy::causal;

namespace {

UnitPanel make_panel(const Eigen::MatrixXd& y, const std::vector<std::optional<int>>& cohort,
                     int first_week) {
  UnitPanel p;
  p.first_week = first_week;
  p.y = y;
  p.cohort = cohort;
  for (std::size_t i = 0; i < cohort.size(); ++i) p.unit_ids.push_back(static_cast<std::int64_t>(i + 1));
  p.x.resize(y.rows(), 0);
  return p;
}

// Staggered panel with unit and week effects, one covariate, and effect
// `delta` from the cohort week on.
UnitPanel random_panel(int n, double delta, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  std::uniform_int_distribution<int> pick(0, 3);
  const int first = -4, nw = 9;
  Eigen::MatrixXd y(n, nw);
  std::vector<std::optional<int>> cohort(n);
  Eigen::MatrixXd x(n, 1);
  for (int i = 0; i < n; ++i) {
    const int k = pick(rng);
    if (k > 0) cohort[i] = k - 1;  // cohorts 0, 1, 2
    const double alpha = z(rng);
    x(i, 0) = alpha + z(rng);
    for (int w = 0; w < nw; ++w) {
      const int week = first + w;
      y(i, w) = alpha + 0.1 * week + 0.3 * z(rng) + (cohort[i] && week >= *cohort[i] ? delta : 0.0);
    }
  }
  auto p = make_panel(y, cohort, first);
  p.x = x;
  p.covariate_names = {"pre"};
  return p;
}

CsaOptions no_boot(bool ipw = false) {
  CsaOptions o;
  o.ipw = ipw;
  o.bootstrap = false;
  return o;
}

}  // namespace

TEST_CASE("hand 2x2 difference in differences") {
  Eigen::MatrixXd y(2, 2);
  y << 1, 3, 1, 2;
  const auto p = make_panel(y, {0, std::nullopt}, -1);
  const auto r = att_gt(p, 0, 0, no_boot());
  CHECK(r.estimate == doctest::Approx(1.0));
  CHECK(r.base_period == -1);
  CHECK(r.n_treated == 1);
  CHECK(r.n_control == 1);
}

TEST_CASE("pre-treatment cells use the previous week as base") {
  Eigen::MatrixXd y(2, 4);
  y << 0, 1, 5, 9, 0, 0, 0, 0;
  const auto p = make_panel(y, {1, std::nullopt}, -2);
  // t = 0 < g = 1: short difference y(0) - y(-1).
  const auto pre = att_gt(p, 1, 0, no_boot());
  CHECK(pre.base_period == -1);
  CHECK(pre.estimate == doctest::Approx(4.0));
  // t = 1 >= g: long difference from g - 1 = 0.
  const auto post = att_gt(p, 1, 1, no_boot());
  CHECK(post.base_period == 0);
  CHECK(post.estimate == doctest::Approx(4.0));
}

TEST_CASE("anticipation moves the base period back") {
  Eigen::MatrixXd y(2, 5);
  y << 0, 0, 1, 1, 1, 0, 0, 0, 0, 0;
  const auto p = make_panel(y, {0, std::nullopt}, -3);
  CHECK(att_gt(p, 0, 0, no_boot()).estimate == doctest::Approx(0.0));
  auto o = no_boot();
  o.anticipation = 1;
  const auto r = att_gt(p, 0, 0, o);
  CHECK(r.base_period == -2);
  CHECK(r.estimate == doctest::Approx(1.0));
}

TEST_CASE("not-yet-treated controls and the never-treated-only switch") {
  Eigen::MatrixXd y(3, 4);
  y << 0, 0, 2, 2,   // g = 0
      0, 0, 1, 1,    // g = 1: control for t = 0 only
      0, 0, 0, 0;    // never
  const auto p = make_panel(y, {0, 1, std::nullopt}, -2);
  const auto r = att_gt(p, 0, 0, no_boot());
  CHECK(r.n_control == 2);
  CHECK(r.estimate == doctest::Approx(2.0 - 0.5));
  auto o = no_boot();
  o.never_treated_only = true;
  CHECK(att_gt(p, 0, 0, o).estimate == doctest::Approx(2.0));
  CHECK(att_gt(p, 0, 1, no_boot()).n_control == 1);
}

TEST_CASE("every unit treated at once leaves no controls") {
  Eigen::MatrixXd y(2, 2);
  y << 0, 1, 0, 2;
  const auto p = make_panel(y, {0, 0}, -1);
  CHECK_THROWS_AS(att_gt(p, 0, 0, no_boot()), EstimationError);
  CHECK_THROWS_AS(estimate_csa(p, no_boot()), EstimationError);
}

TEST_CASE("overall effect weights cohorts by size") {
  const std::vector<GroupTimeATT> cells = {
      {0, 1, 0.1}, {1, 1, 0.2}, {1, 0, 9.0},  // the pre cell is ignored
  };
  const auto a = aggregate_overall(cells, {{0, 100}, {1, 300}});
  CHECK(a.value == doctest::Approx(0.175));
  double s = 0;
  for (const auto& [g, w] : a.weights) s += w;
  CHECK(std::abs(s - 1.0) < 1e-9);
  CHECK(aggregate_overall({{2, 2, 0.37}}, {{2, 5}}).value == doctest::Approx(0.37));
  CHECK_THROWS_AS(aggregate_overall({}, {}), EstimationError);
}

TEST_CASE("single cohort: dynamic effects equal the cells") {
  auto p = random_panel(300, 0.5, 5);
  for (auto& g : p.cohort) {
    if (g && *g != 1) g.reset();
  }
  const auto r = estimate_csa(p, no_boot());
  for (const auto& d : r.dynamic) {
    bool found = false;
    for (const auto& c : r.cells) {
      if (c.t - c.g == d.e) {
        CHECK(d.value == doctest::Approx(c.estimate).epsilon(1e-12));
        found = true;
      }
    }
    CHECK(found);
  }
  CHECK(r.dynamic.front().e == -4);
  CHECK(r.dynamic.back().e == 3);
}

TEST_CASE("injected effect is recovered; pre-trends are near zero") {
  const auto r = estimate_csa(random_panel(3000, 0.4, 6), no_boot(true));
  CHECK(r.overall.value == doctest::Approx(0.4).epsilon(0.1));
  for (const auto& d : r.dynamic) {
    if (d.e < 0) CHECK(std::abs(d.value) < 0.06);
    else CHECK(std::abs(d.value - 0.4) < 0.06);
  }
}

TEST_CASE("negating the outcome negates every estimate") {
  for (bool ipw : {false, true}) {
    auto p = random_panel(400, 0.3, 7);
    const auto a = estimate_csa(p, no_boot(ipw));
    p.y = -p.y;
    const auto b = estimate_csa(p, no_boot(ipw));
    REQUIRE(a.cells.size() == b.cells.size());
    for (std::size_t k = 0; k < a.cells.size(); ++k) {
      CHECK(b.cells[k].estimate == doctest::Approx(-a.cells[k].estimate).epsilon(1e-9));
    }
    CHECK(b.overall.value == doctest::Approx(-a.overall.value).epsilon(1e-9));
    for (std::size_t k = 0; k < a.dynamic.size(); ++k) {
      CHECK(b.dynamic[k].value == doctest::Approx(-a.dynamic[k].value).epsilon(1e-9));
    }
  }
}

TEST_CASE("bootstrap is deterministic in the seed and independent of threads") {
  const auto p = random_panel(200, 0.3, 8);
  CsaOptions o;
  o.boot.reps = 49;
  o.boot.seed = 99;
  const auto a = estimate_csa(p, o);
  o.boot.threads = 3;
  const auto b = estimate_csa(p, o);
  CHECK(a.overall.std_error == b.overall.std_error);
  CHECK(a.overall.ci_lo == b.overall.ci_lo);
  CHECK(a.overall.std_error > 0);
  CHECK(a.overall.ci_lo < a.overall.value);
  CHECK(a.overall.ci_hi > a.overall.value);
  o.boot.seed = 100;
  CHECK(estimate_csa(p, o).overall.std_error != a.overall.std_error);
}

TEST_CASE("cluster bootstrap SE of a mean matches sd / sqrt(n)") {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> z(0.0, 2.0);
  const std::size_t n = 400;
  std::vector<double> v(n);
  for (auto& x : v) x = z(rng);
  auto mean = [&](const std::vector<double>& m) {
    double s = 0, k = 0;
    for (std::size_t i = 0; i < n; ++i) {
      s += m[i] * v[i];
      k += m[i];
    }
    return std::vector<double>{s / k};
  };
  BootstrapOptions o;
  o.reps = 999;
  const auto r = cluster_bootstrap(mean, n, o);
  double mu = 0, ss = 0;
  for (double x : v) mu += x / n;
  for (double x : v) ss += (x - mu) * (x - mu);
  const double se = std::sqrt(ss / (n - 1) / n);
  CHECK(r.estimate[0] == doctest::Approx(mu));
  CHECK(r.std_error[0] == doctest::Approx(se).epsilon(0.1));
  CHECK(r.reps == 999);
}

TEST_CASE("failing replicates are dropped, too many raise") {
  int calls = 0;
  auto flaky = [&](const std::vector<double>& m) {
    ++calls;
    if (m[0] == 0.0 && m[1] == 0.0) throw EstimationError("degenerate");
    return std::vector<double>{m[0]};
  };
  BootstrapOptions o;
  o.reps = 200;
  o.max_drop_share = 0.5;
  const auto r = cluster_bootstrap(flaky, 3, o);
  CHECK(r.dropped > 0);
  CHECK(r.reps == 200);
  CHECK(r.dropped < 100);
  o.max_drop_share = 0.01;
  CHECK_THROWS_AS(cluster_bootstrap(flaky, 3, o), EstimationError);
  const auto m = draw_multiplicity(10, 4, 2);
  double s = 0;
  for (double x : m) s += x;
  CHECK(s == 10.0);
}
