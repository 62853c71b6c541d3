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

#include "ridepolicy/splits.hpp"
#include "test_util.hpp"

using namespace ridepolicy;
using namespace ridepolicy::causal;

namespace {

panel::DriverWeekRecord share_row(std::int64_t id, int week, double share) {
  panel::DriverWeekRecord r;
  r.driver_id = id;
  r.week = week;
  r.num_trip = 5;
  r.net_payments = 100.0;
  r.earnings = 100.0 * share;
  return r;
}

panel::DriverWeekRecord var_row(std::int64_t id, int week, double v) {
  panel::DriverWeekRecord r;
  r.driver_id = id;
  r.week = week;
  r.hourly_earning_var = v;
  return r;
}

}  // namespace

TEST_CASE("take-rate split with the strict boundary") {
  std::vector<panel::DriverWeekRecord> rows;
  for (int w = -3; w < 0; ++w) {
    rows.push_back(share_row(1, w, 0.75));
    rows.push_back(share_row(2, w, w == -2 ? 0.65 : 0.75));
    rows.push_back(share_row(3, w, w == -1 ? 0.70 : 0.75));
  }
  // Post weeks do not matter.
  rows.push_back(share_row(1, 2, 0.1));
  // Inactive pre weeks are skipped; a driver with none is excluded.
  auto idle = share_row(4, -1, 0.2);
  idle.num_trip = 0;
  rows.push_back(idle);
  const auto s = split_hh_lh(rows, 0.70);
  CHECK(s.hh == std::set<std::int64_t>{1});
  CHECK(s.lh == std::set<std::int64_t>{2, 3});
}

TEST_CASE("uncertainty split against weekly medians") {
  std::vector<panel::DriverWeekRecord> rows;
  for (int w = -2; w < 0; ++w) {
    rows.push_back(var_row(1, w, 1.0));           // always lowest
    rows.push_back(var_row(2, w, 5.0));           // at the median: neither
    rows.push_back(var_row(3, w, 9.0));           // always highest
    rows.push_back(var_row(4, w, w == -2 ? 0.5 : 10.0));  // straddles
    rows.push_back(var_row(5, w, std::nan("")));  // no defined variance
  }
  const auto s = split_uncertainty(rows);
  CHECK(s.low_tolerance == std::set<std::int64_t>{1});
  CHECK(s.high_tolerance == std::set<std::int64_t>{3});
  CHECK(s.others == std::set<std::int64_t>{2, 4});
  CHECK(s.no_data == std::set<std::int64_t>{5});
}

TEST_CASE("k-means recovers well-separated blobs") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> z(0.0, 0.3);
  const int per = 100;
  Eigen::MatrixXd X(3 * per, 2);
  const double cx[3] = {0, 10, 0}, cy[3] = {0, 0, 10};
  for (int b = 0; b < 3; ++b) {
    for (int i = 0; i < per; ++i) {
      X(b * per + i, 0) = cx[b] + z(rng);
      X(b * per + i, 1) = cy[b] + z(rng);
    }
  }
  const auto km = kmeans(X, 3, 42);
  CHECK(km.converged);
  for (int b = 0; b < 3; ++b) {
    for (int i = 1; i < per; ++i) CHECK(km.labels[b * per + i] == km.labels[b * per]);
  }
  CHECK(km.labels[0] != km.labels[per]);
  CHECK(km.labels[0] != km.labels[2 * per]);
  CHECK(km.labels[per] != km.labels[2 * per]);
  for (std::size_t i = 1; i < km.objective.size(); ++i) {
    CHECK(km.objective[i] <= km.objective[i - 1] + 1e-9);
  }
  const auto again = kmeans(X, 3, 42);
  CHECK(again.labels == km.labels);
}

TEST_CASE("k-means objective never increases on overlapping data") {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> z(0.0, 1.0);
  Eigen::MatrixXd X(400, 5);
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    for (Eigen::Index j = 0; j < X.cols(); ++j) X(i, j) = z(rng);
  }
  for (int k : {2, 4, 7}) {
    const auto km = kmeans(X, k, 5, 300, 1);
    for (std::size_t i = 1; i < km.objective.size(); ++i) {
      CHECK(km.objective[i] <= km.objective[i - 1] + 1e-9);
    }
  }
}

TEST_CASE("k-means degenerate cases") {
  Eigen::MatrixXd X(5, 2);
  X << 1, 2, 3, 4, 5, 6, 7, 8, 9, 10;
  const auto one = kmeans(X, 1, 1);
  CHECK(one.centroids(0, 0) == doctest::Approx(5.0));
  CHECK(one.centroids(0, 1) == doctest::Approx(6.0));

  Eigen::MatrixXd D(6, 1);
  D << 1, 1, 4, 4, 9, 9;
  const auto dup = kmeans(D, 3, 1);
  CHECK(dup.objective.back() == doctest::Approx(0.0));

  CHECK_THROWS_AS(kmeans(X, 0, 1), std::invalid_argument);
  CHECK_THROWS_AS(kmeans(X, 6, 1), std::invalid_argument);
}

TEST_CASE("z-scores") {
  Eigen::MatrixXd X(4, 2);
  X << 1, 3, 2, 3, 3, 3, 4, 3;
  const auto Z = zscore_columns(X);
  CHECK(Z.col(0).mean() == doctest::Approx(0.0));
  CHECK(Z.col(1).cwiseAbs().maxCoeff() == 0.0);
  CHECK(Z.col(0).squaredNorm() / 3 == doctest::Approx(1.0));
}

TEST_CASE("driver features are shares and clusters get class names") {
  using testutil::at;
  std::vector<TripEvent> trips;
  // Driver 1: weekday morning standard trips; driver 2: weekend lux trips.
  for (int k = 0; k < 4; ++k) {
    trips.push_back(testutil::trip(1, at(-2, k, 7), 5, 10, {0, 0}, {1, 0}));
    auto t = testutil::trip(2, at(-2, 5 + k % 2, 22 + k % 2), 5, 10, {0, 0}, {1, 0});
    t.vehicle = VehicleType::kLux;
    trips.push_back(t);
  }
  trips.push_back(testutil::trip(3, at(1, 0, 7), 5, 10, {0, 0}, {1, 0}));  // post only
  const auto f = driver_features(trips, testutil::kAnchor, -12);
  REQUIRE(f.driver_ids == std::vector<std::int64_t>{1, 2});
  CHECK(f.x.cols() == static_cast<Eigen::Index>(driver_feature_names().size()));
  CHECK(f.x.cols() == 15);
  const auto& names = driver_feature_names();
  const auto col = [&](const std::string& n) {
    return static_cast<Eigen::Index>(std::find(names.begin(), names.end(), n) - names.begin());
  };
  CHECK(f.x(0, col("morning_rush")) == 1.0);
  CHECK(f.x(0, col("perc_wkd")) == 0.0);
  CHECK(f.x(0, col("standard")) == 1.0);
  CHECK(f.x(1, col("perc_wkd")) == 1.0);
  CHECK(f.x(1, col("lux")) == 1.0);
  // Time-window shares of each driver sum to one.
  CHECK(f.x.row(1).head(8).sum() == doctest::Approx(1.0));

  DriverFeatures g;
  g.driver_ids = {1, 2, 3};
  g.x = Eigen::MatrixXd::Zero(3, 15);
  g.x(0, col("lux")) = 1.0;
  KMeansResult km;
  km.labels = {2, 0, 1};
  km.centroids = Eigen::MatrixXd::Zero(3, 15);
  const auto n = name_clusters(g, km, {{1, 5.0}, {2, 30.0}, {3, 8.0}});
  CHECK(n[2] == "LUX");
  CHECK(n[0] == "FT");
  CHECK(n[1] == "PT");
}
