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

#include "ridepolicy/splits.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "ridepolicy/simkit.hpp"

namespace ridepolicy::causal {

TakeRateSplit split_hh_lh(const std::vector<panel::DriverWeekRecord>& rows,
                          double guarantee_share) {
  std::map<std::int64_t, bool> all_above;
  for (const auto& r : rows) {
    if (r.week >= 0 || r.num_trip <= 0 || r.net_payments <= 0) continue;
    const bool above = r.earnings / r.net_payments > guarantee_share;
    auto [it, fresh] = all_above.emplace(r.driver_id, above);
    if (!fresh) it->second = it->second && above;
  }
  TakeRateSplit s;
  for (const auto& [id, above] : all_above) (above ? s.hh : s.lh).insert(id);
  return s;
}

UncertaintySplit split_uncertainty(const std::vector<panel::DriverWeekRecord>& rows) {
  std::map<int, std::vector<double>> by_week;
  std::set<std::int64_t> drivers;
  for (const auto& r : rows) {
    drivers.insert(r.driver_id);
    if (r.week < 0 && std::isfinite(r.hourly_earning_var)) {
      by_week[r.week].push_back(r.hourly_earning_var);
    }
  }
  std::map<int, double> median;
  for (auto& [w, v] : by_week) {
    std::sort(v.begin(), v.end());
    const auto n = v.size();
    median[w] = n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
  }
  struct Flags {
    bool any = false, all_above = true, all_below = true;
  };
  std::map<std::int64_t, Flags> f;
  for (const auto& r : rows) {
    if (r.week >= 0 || !std::isfinite(r.hourly_earning_var)) continue;
    auto& x = f[r.driver_id];
    const double m = median.at(r.week);
    x.any = true;
    x.all_above = x.all_above && r.hourly_earning_var > m;
    x.all_below = x.all_below && r.hourly_earning_var < m;
  }
  UncertaintySplit s;
  for (auto id : drivers) {
    const auto it = f.find(id);
    if (it == f.end()) {
      s.no_data.insert(id);
    } else if (it->second.all_above) {
      s.high_tolerance.insert(id);
    } else if (it->second.all_below) {
      s.low_tolerance.insert(id);
    } else {
      s.others.insert(id);
    }
  }
  return s;
}

Eigen::MatrixXd zscore_columns(const Eigen::MatrixXd& X) {
  Eigen::MatrixXd z = X;
  const auto n = X.rows();
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    const double mean = X.col(j).mean();
    const double sd = std::sqrt((X.col(j).array() - mean).square().sum() /
                                std::max<double>(1.0, static_cast<double>(n - 1)));
    if (sd > 1e-12) {
      z.col(j) = (X.col(j).array() - mean) / sd;
    } else {
      z.col(j).setZero();
    }
  }
  return z;
}

namespace {

double assign(const Eigen::MatrixXd& X, const Eigen::MatrixXd& c, std::vector<int>& labels) {
  double obj = 0.0;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    int arg = 0;
    for (Eigen::Index k = 0; k < c.rows(); ++k) {
      const double d = (X.row(i) - c.row(k)).squaredNorm();
      if (d < best) {
        best = d;
        arg = static_cast<int>(k);
      }
    }
    labels[i] = arg;
    obj += best;
  }
  return obj;
}

double objective(const Eigen::MatrixXd& X, const Eigen::MatrixXd& c,
                 const std::vector<int>& labels) {
  double obj = 0.0;
  for (Eigen::Index i = 0; i < X.rows(); ++i) obj += (X.row(i) - c.row(labels[i])).squaredNorm();
  return obj;
}

KMeansResult lloyd(const Eigen::MatrixXd& X, int k, std::mt19937_64& rng, int max_iter) {
  const auto n = X.rows();
  KMeansResult r;
  r.centroids.resize(k, X.cols());
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto pick = [&](double total, const std::vector<double>& w) {
    double target = u(rng) * total;
    for (Eigen::Index i = 0; i < n; ++i) {
      target -= w[i];
      if (target < 0) return i;
    }
    return n - 1;
  };
  std::vector<double> d2(static_cast<std::size_t>(n), 1.0);
  r.centroids.row(0) = X.row(pick(static_cast<double>(n), d2));
  for (int c = 1; c < k; ++c) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (int j = 0; j < c; ++j) best = std::min(best, (X.row(i) - r.centroids.row(j)).squaredNorm());
      d2[i] = best;
      total += best;
    }
    // All remaining points coincide with a centre: any choice is as good.
    r.centroids.row(c) = total > 0 ? X.row(pick(total, d2)) : X.row(c % n);
  }
  r.labels.assign(static_cast<std::size_t>(n), -1);
  std::vector<int> next(static_cast<std::size_t>(n));
  for (int it = 0; it < max_iter; ++it) {
    assign(X, r.centroids, next);
    r.iterations = it + 1;
    if (next == r.labels) {
      r.converged = true;
      break;
    }
    r.labels = next;
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(k, X.cols());
    std::vector<int> cnt(static_cast<std::size_t>(k), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      sum.row(r.labels[i]) += X.row(i);
      ++cnt[r.labels[i]];
    }
    for (int c = 0; c < k; ++c) {
      if (cnt[c] > 0) r.centroids.row(c) = sum.row(c) / cnt[c];
    }
    r.objective.push_back(objective(X, r.centroids, r.labels));
  }
  return r;
}

}  // namespace

KMeansResult kmeans(const Eigen::MatrixXd& X, int k, std::uint64_t seed, int max_iter,
                    int n_init) {
  if (k < 1) throw std::invalid_argument("kmeans: k must be at least 1");
  if (k > X.rows()) throw std::invalid_argument("kmeans: k exceeds the number of points");
  std::mt19937_64 rng(sim::mix64(seed));
  KMeansResult best;
  double best_obj = std::numeric_limits<double>::infinity();
  for (int s = 0; s < std::max(1, n_init); ++s) {
    auto r = lloyd(X, k, rng, max_iter);
    const double obj = objective(X, r.centroids, r.labels);
    if (obj < best_obj) {
      best_obj = obj;
      best = std::move(r);
    }
  }
  return best;
}

const std::vector<std::string>& driver_feature_names() {
  static const std::vector<std::string> names = {
      "morning_rush", "midday_break", "lunch",   "afternoon_lull", "evening_rush",
      "dinner_night", "late_night",   "rest",    "perc_wkd",       "standard",
      "plus",         "premium",      "lux",     "luxsuv",         "courier"};
  return names;
}

DriverFeatures driver_features(const std::vector<TripEvent>& trips, Timestamp anchor,
                               int first_week) {
  constexpr int kCols = sim::kNumTimeWindows + 1 + kNumVehicleTypes;
  std::map<std::int64_t, std::array<double, kCols>> counts;
  std::map<std::int64_t, double> n;
  for (const auto& t : trips) {
    if (t.cancelled) continue;
    const int w = week_offset(t.accept_ts, anchor);
    if (w < first_week || w >= 0) continue;
    auto [it, fresh] = counts.try_emplace(t.driver_id);
    if (fresh) it->second.fill(0.0);
    auto& c = it->second;
    c[sim::time_window_of_hour(hour_of_day(t.accept_ts))] += 1;
    if (day_of_week(t.accept_ts) >= 5) c[sim::kNumTimeWindows] += 1;
    c[sim::kNumTimeWindows + 1 + static_cast<int>(t.vehicle)] += 1;
    n[t.driver_id] += 1;
  }
  DriverFeatures f;
  f.x.resize(static_cast<Eigen::Index>(counts.size()), kCols);
  Eigen::Index i = 0;
  for (const auto& [id, c] : counts) {
    f.driver_ids.push_back(id);
    for (int j = 0; j < kCols; ++j) f.x(i, j) = c[j] / n[id];
    ++i;
  }
  return f;
}

std::vector<std::string> name_clusters(const DriverFeatures& f, const KMeansResult& km,
                                       const std::map<std::int64_t, double>& pre_hours) {
  if (km.centroids.rows() != 3) throw std::invalid_argument("name_clusters: needs k = 3");
  const int lux0 = sim::kNumTimeWindows + 1 + static_cast<int>(VehicleType::kPremium);
  std::array<double, 3> lux{}, hours{}, cnt{};
  for (std::size_t i = 0; i < f.driver_ids.size(); ++i) {
    const int c = km.labels[i];
    const auto r = static_cast<Eigen::Index>(i);
    lux[c] += f.x(r, lux0) + f.x(r, lux0 + 1) + f.x(r, lux0 + 2);
    const auto it = pre_hours.find(f.driver_ids[i]);
    hours[c] += it == pre_hours.end() ? 0.0 : it->second;
    cnt[c] += 1;
  }
  for (int c = 0; c < 3; ++c) {
    if (cnt[c] > 0) {
      lux[c] /= cnt[c];
      hours[c] /= cnt[c];
    }
  }
  const int l = static_cast<int>(std::max_element(lux.begin(), lux.end()) - lux.begin());
  std::vector<int> rest;
  for (int c = 0; c < 3; ++c) {
    if (c != l) rest.push_back(c);
  }
  std::vector<std::string> names(3);
  names[l] = "LUX";
  const bool first_ft = hours[rest[0]] >= hours[rest[1]];
  names[rest[0]] = first_ft ? "FT" : "PT";
  names[rest[1]] = first_ft ? "PT" : "FT";
  return names;
}

}  // namespace ridepolicy::causal
