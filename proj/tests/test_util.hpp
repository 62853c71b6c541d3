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

#ifndef RIDEPOLICY_TEST_UTIL_HPP_
#define RIDEPOLICY_TEST_UTIL_HPP_

#include <chrono>
#include <filesystem>
#include <random>
#include <string>

#include "ridepolicy/timeutil.hpp"
#include "ridepolicy/trip.hpp"

namespace testutil {

using namespace ridepolicy;

inline const Timestamp kAnchor = make_timestamp(2024, 2, 5);

// Minute `minute` of hour `hour` on day `day` (0 = Mon) of week `week`.
inline Timestamp at(int week, int day, int hour, int minute = 0) {
  return kAnchor + std::chrono::days(7 * week + day) + std::chrono::hours(hour) +
         std::chrono::minutes(minute);
}

// Completed trip: pickup `wait` minutes after accept, `ride` minutes in the car.
inline TripEvent trip(std::int64_t driver, Timestamp accept, int wait, int ride,
                      geo::Point from, geo::Point to, Money earnings = 1000) {
  TripEvent t;
  t.driver_id = driver;
  t.request_ts = accept;
  t.accept_ts = accept;
  t.pickup_ts = accept + std::chrono::minutes(wait);
  t.dropoff_ts = *t.pickup_ts + std::chrono::minutes(ride);
  t.origin = from;
  t.destination = to;
  t.miles = geo::distance(from, to) / 1.609;
  t.driver_earnings = earnings;
  t.platform_take = earnings / 4;
  t.external_fees = 100;
  t.rider_payment = t.driver_earnings + t.platform_take + t.external_fees;
  t.rating = 5.0;
  return t;
}

inline TripEvent cancelled(std::int64_t driver, Timestamp accept, geo::Point at_point) {
  TripEvent t;
  t.driver_id = driver;
  t.request_ts = accept;
  t.accept_ts = accept;
  t.origin = at_point;
  t.destination = at_point;
  t.cancelled = true;
  return t;
}

inline std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("ridepolicy_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace testutil

#endif  // RIDEPOLICY_TEST_UTIL_HPP_
