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

#ifndef RIDEPOLICY_ERRORS_HPP_
#define RIDEPOLICY_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace ridepolicy {

// Input data violates a structural invariant (duplicate ids, funnel, overlap).
class IntegrityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An estimator cannot produce a number for the given sample.
class EstimationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace ridepolicy

#endif  // RIDEPOLICY_ERRORS_HPP_
