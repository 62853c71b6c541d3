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

#include "ridepolicy/bootstrap.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <random>
#include <thread>

#include "ridepolicy/errors.hpp"

namespace ridepolicy::causal {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::vector<double> draw_multiplicity(std::size_t n_clusters, std::uint64_t seed,
                                      int replicate) {
  std::mt19937_64 rng(splitmix64(seed + static_cast<std::uint64_t>(replicate)));
  std::uniform_int_distribution<std::size_t> pick(0, n_clusters - 1);
  std::vector<double> m(n_clusters, 0.0);
  for (std::size_t i = 0; i < n_clusters; ++i) m[pick(rng)] += 1.0;
  return m;
}

namespace {

double quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace

BootstrapResult cluster_bootstrap(const ClusterStatistic& statistic,
                                  std::size_t n_clusters,
                                  const BootstrapOptions& options) {
  if (n_clusters == 0) throw EstimationError("bootstrap: no clusters");
  BootstrapResult res;
  res.estimate = statistic(std::vector<double>(n_clusters, 1.0));
  const std::size_t k = res.estimate.size();
  const int reps = std::max(0, options.reps);
  std::vector<std::vector<double>> out(reps);
  std::vector<char> ok(reps, 0);
  std::atomic<int> next{0};
  auto worker = [&]() {
    for (int r = next++; r < reps; r = next++) {
      try {
        auto v = statistic(draw_multiplicity(n_clusters, options.seed, r));
        if (v.size() != k) throw EstimationError("bootstrap: statistic size changed");
        out[r] = std::move(v);
        ok[r] = 1;
      } catch (const EstimationError&) {
        ok[r] = 0;
      }
    }
  };
  const int threads = std::max(1, std::min(options.threads, reps));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (int r = 0; r < reps; ++r) {
    if (ok[r]) {
      res.replicates.push_back(std::move(out[r]));
    } else {
      ++res.dropped;
    }
  }
  res.reps = reps;
  if (reps > 0 && res.dropped > options.max_drop_share * reps) {
    throw EstimationError("bootstrap: " + std::to_string(res.dropped) + " of " +
                          std::to_string(reps) + " replicates failed");
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  res.std_error.assign(k, nan);
  res.ci_lo.assign(k, nan);
  res.ci_hi.assign(k, nan);
  const double a = 0.5 * (1.0 - options.ci_level);
  for (std::size_t j = 0; j < k; ++j) {
    std::vector<double> v;
    for (const auto& rep : res.replicates) {
      if (std::isfinite(rep[j])) v.push_back(rep[j]);
    }
    if (v.size() < 2) continue;
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    res.std_error[j] = std::sqrt(ss / static_cast<double>(v.size() - 1));
    res.ci_lo[j] = quantile(v, a);
    res.ci_hi[j] = quantile(v, 1.0 - a);
  }
  return res;
}

}  // namespace ridepolicy::causal
