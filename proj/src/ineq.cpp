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

#include "ridepolicy/ineq.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ridepolicy::ineq {

namespace {

double checked_total(const std::vector<double>& values) {
  if (values.empty()) throw std::invalid_argument("no values");
  double total = 0.0;
  for (double v : values) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw std::invalid_argument("values must be finite and nonnegative");
    }
    total += v;
  }
  if (total <= 0.0) throw std::invalid_argument("all-zero values");
  return total;
}

}  // namespace

LorenzCurve lorenz(std::vector<double> values) {
  const double total = checked_total(values);
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  LorenzCurve c;
  c.population_share.resize(n + 1);
  c.value_share.resize(n + 1);
  c.population_share[0] = 0.0;
  c.value_share[0] = 0.0;
  double cum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    cum += values[i];
    c.population_share[i + 1] = static_cast<double>(i + 1) / n;
    c.value_share[i + 1] = std::min(1.0, cum / total);
  }
  c.population_share[n] = 1.0;
  c.value_share[n] = 1.0;
  return c;
}

double gini(std::vector<double> values) {
  const double total = checked_total(values);
  std::sort(values.begin(), values.end());
  const auto n = static_cast<double>(values.size());
  // sum_i sum_j |x_i - x_j| = 2 sum_i (2i - n - 1) x_(i), i = 1..n
  double acc = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    acc += (2.0 * static_cast<double>(i + 1) - n - 1.0) * values[i];
  }
  return acc / (n * total);
}

}  // namespace ridepolicy::ineq
