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
#include <stdexcept>

#include "ridepolicy/ineq.hpp"

using namespace ridepolicy::ineq;

namespace {

double pairwise_gini(const std::vector<double>& x) {
  double num = 0.0, sum = 0.0;
  for (double a : x) {
    sum += a;
    for (double b : x) num += std::abs(a - b);
  }
  const double n = static_cast<double>(x.size());
  return num / (2.0 * n * sum);
}

// One minus twice the trapezoid area under the curve.
double lorenz_gini(const LorenzCurve& c) {
  double area = 0.0;
  for (std::size_t i = 1; i < c.population_share.size(); ++i) {
    area += (c.population_share[i] - c.population_share[i - 1]) *
            (c.value_share[i] + c.value_share[i - 1]) / 2.0;
  }
  return 1.0 - 2.0 * area;
}

}  // namespace

TEST_CASE("equal supply has zero Gini") {
  CHECK(gini(std::vector<double>(548, 3.25)) == doctest::Approx(0.0));
  CHECK(gini({7.0}) == 0.0);
}

TEST_CASE("all supply in one hex gives (n-1)/n") {
  for (int n : {2, 10, 548}) {
    std::vector<double> x(n, 0.0);
    x[n / 2] = 12.0;
    CHECK(gini(x) == doctest::Approx((n - 1.0) / n));
  }
}

TEST_CASE("sorted-rank Gini agrees with the pairwise and Lorenz forms") {
  std::mt19937_64 rng(5);
  std::lognormal_distribution<double> ln(0.0, 1.2);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<double> x(50 + 17 * rep);
    for (auto& v : x) v = ln(rng);
    if (rep % 3 == 0) x[0] = 0.0;
    const double g = gini(x);
    CHECK(std::abs(g - pairwise_gini(x)) < 1e-9);
    CHECK(std::abs(g - lorenz_gini(lorenz(x))) < 1e-9);
    CHECK(g >= 0.0);
    CHECK(g < 1.0);
  }
}

TEST_CASE("Gini is scale invariant and order free") {
  std::vector<double> x = {1, 4, 0, 9, 2, 2, 5};
  const double g = gini(x);
  std::vector<double> y = x;
  for (auto& v : y) v *= 37.5;
  std::reverse(y.begin(), y.end());
  CHECK(gini(y) == doctest::Approx(g));
}

TEST_CASE("Lorenz curve properties") {
  std::mt19937_64 rng(9);
  std::exponential_distribution<double> e(1.0);
  std::vector<double> x(300);
  for (auto& v : x) v = e(rng);
  const auto c = lorenz(x);
  REQUIRE(c.population_share.size() == 301);
  CHECK(c.population_share.front() == 0.0);
  CHECK(c.value_share.front() == 0.0);
  CHECK(c.population_share.back() == 1.0);
  CHECK(c.value_share.back() == 1.0);
  for (std::size_t i = 1; i < c.value_share.size(); ++i) {
    CHECK(c.value_share[i] >= c.value_share[i - 1]);
    CHECK(c.value_share[i] <= c.population_share[i] + 1e-12);
    // Convex: slopes do not decrease.
    if (i >= 2) {
      CHECK(c.value_share[i] - c.value_share[i - 1] >=
            c.value_share[i - 1] - c.value_share[i - 2] - 1e-12);
    }
  }
}

TEST_CASE("invalid inputs") {
  CHECK_THROWS_AS(gini({}), std::invalid_argument);
  CHECK_THROWS_AS(gini({0.0, 0.0}), std::invalid_argument);
  CHECK_THROWS_AS(gini({1.0, -1.0}), std::invalid_argument);
  CHECK_THROWS_AS(lorenz({1.0, std::nan("")}), std::invalid_argument);
}
