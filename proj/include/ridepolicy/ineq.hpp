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

#ifndef RIDEPOLICY_INEQ_HPP_
#define RIDEPOLICY_INEQ_HPP_

#include <vector>

namespace ridepolicy::ineq {

struct LorenzCurve {
  // Both start at 0 and end at exactly 1; size n + 1.
  std::vector<double> population_share;
  std::vector<double> value_share;
};

// Throws std::invalid_argument on empty, negative or all-zero input.
LorenzCurve lorenz(std::vector<double> values);

// Mean absolute difference form, computed in O(n log n) via sorted ranks.
double gini(std::vector<double> values);

}  // namespace ridepolicy::ineq

#endif  // RIDEPOLICY_INEQ_HPP_
