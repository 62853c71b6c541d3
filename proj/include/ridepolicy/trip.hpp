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

#ifndef RIDEPOLICY_TRIP_HPP_
#define RIDEPOLICY_TRIP_HPP_

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ridepolicy/geo.hpp"
#include "ridepolicy/timeutil.hpp"

namespace ridepolicy {

// Integer cents, so the payment identity holds exactly.
using Money = std::int64_t;

inline double to_dollars(Money m) { return static_cast<double>(m) / 100.0; }

enum class VehicleType { kStandard, kPlus, kPremium, kLux, kLuxSuv, kCourier };
inline constexpr int kNumVehicleTypes = 6;
inline constexpr std::array<std::string_view, kNumVehicleTypes> kVehicleNames =
    {"standard", "plus", "premium", "lux", "luxsuv", "courier"};

std::string_view vehicle_name(VehicleType v);
VehicleType parse_vehicle(std::string_view s);

struct TripEvent {
  std::int64_t driver_id = 0;
  std::int64_t session_id = 0;
  Timestamp request_ts{};
  Timestamp accept_ts{};
  std::optional<Timestamp> pickup_ts;
  std::optional<Timestamp> dropoff_ts;
  geo::Point origin;
  geo::Point destination;
  double miles = 0.0;
  Money rider_payment = 0;
  Money external_fees = 0;
  Money platform_take = 0;
  Money driver_earnings = 0;
  Money tip = 0;
  VehicleType vehicle = VehicleType::kStandard;
  bool cancelled = false;
  std::optional<double> rating;

  Money net_payment() const { return rider_payment - external_fees; }
  // Minutes from accept to dropoff; 0 for cancelled trips.
  std::int64_t online_minutes() const;
  std::int64_t passenger_minutes() const;
};

// Throws IntegrityError if any payment identity, timestamp order or
// cancellation rule fails.
void check_trip(const TripEvent& t);

// Trip ordering used by every output: accept time, then driver id.
bool trip_less(const TripEvent& a, const TripEvent& b);

struct DemandRow {
  geo::HexCell hex;
  std::int64_t hour_index = 0;
  std::int64_t intents = 0;
  std::int64_t requests = 0;
  std::int64_t completes = 0;
};

void check_demand(const DemandRow& d);

// Session = maximal run of a driver's completed trips with
// dropoff-to-next-accept gaps below the idle cutoff.
inline constexpr std::int64_t kIdleCutoffMinutes = 120;

struct Session {
  std::int64_t driver_id = 0;
  // Indices into the trip vector, completed trips only, in accept order.
  std::vector<std::size_t> trips;
};

// Indices of completed trips ordered by (driver, accept, dropoff).
std::vector<std::size_t> completed_by_driver(const std::vector<TripEvent>& trips);

// Throws IntegrityError on overlapping trips of the same driver.
std::vector<Session> sessionize(const std::vector<TripEvent>& trips);

}  // namespace ridepolicy

#endif  // RIDEPOLICY_TRIP_HPP_
