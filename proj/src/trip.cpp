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

#include "ridepolicy/trip.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "ridepolicy/errors.hpp"

namespace ridepolicy {

std::string_view vehicle_name(VehicleType v) {
  return kVehicleNames[static_cast<int>(v)];
}

VehicleType parse_vehicle(std::string_view s) {
  for (int i = 0; i < kNumVehicleTypes; ++i) {
    if (kVehicleNames[i] == s) return static_cast<VehicleType>(i);
  }
  throw std::invalid_argument("unknown vehicle type: " + std::string(s));
}

std::int64_t TripEvent::online_minutes() const {
  if (cancelled || !dropoff_ts) return 0;
  return minutes_between(accept_ts, *dropoff_ts);
}

std::int64_t TripEvent::passenger_minutes() const {
  if (cancelled || !dropoff_ts || !pickup_ts) return 0;
  return minutes_between(*pickup_ts, *dropoff_ts);
}

void check_trip(const TripEvent& t) {
  auto fail = [&](const std::string& what) {
    throw IntegrityError("trip of driver " + std::to_string(t.driver_id) +
                         " accepted " + format_timestamp(t.accept_ts) + ": " +
                         what);
  };
  if (t.request_ts > t.accept_ts) fail("request after accept");
  if (t.rider_payment < 0 || t.external_fees < 0 || t.platform_take < 0 ||
      t.driver_earnings < 0 || t.tip < 0) {
    fail("negative money");
  }
  if (t.rider_payment != t.external_fees + t.platform_take + t.driver_earnings) {
    fail("payment decomposition does not add up");
  }
  if (t.miles < 0) fail("negative miles");
  if (t.rating && (*t.rating < 1.0 || *t.rating > 5.0)) fail("rating out of range");
  if (t.cancelled) {
    if (t.pickup_ts || t.dropoff_ts) fail("cancelled trip has pickup/dropoff");
    if (t.driver_earnings != 0 || t.rider_payment != 0) {
      fail("cancelled trip has earnings");
    }
    return;
  }
  if (!t.pickup_ts || !t.dropoff_ts) fail("completed trip lacks timestamps");
  if (t.accept_ts > *t.pickup_ts || *t.pickup_ts > *t.dropoff_ts) {
    fail("timestamps out of order");
  }
}

bool trip_less(const TripEvent& a, const TripEvent& b) {
  if (a.accept_ts != b.accept_ts) return a.accept_ts < b.accept_ts;
  return a.driver_id < b.driver_id;
}

void check_demand(const DemandRow& d) {
  if (d.intents < 0 || d.requests < 0 || d.completes < 0 ||
      d.completes > d.requests || d.requests > d.intents) {
    throw IntegrityError("demand funnel violated at hex " + geo::hex_label(d.hex) +
                         " hour " + std::to_string(d.hour_index));
  }
}

std::vector<std::size_t> completed_by_driver(
    const std::vector<TripEvent>& trips) {
  std::vector<std::size_t> idx;
  idx.reserve(trips.size());
  for (std::size_t i = 0; i < trips.size(); ++i) {
    if (!trips[i].cancelled) idx.push_back(i);
  }
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    const auto& x = trips[a];
    const auto& y = trips[b];
    if (x.driver_id != y.driver_id) return x.driver_id < y.driver_id;
    if (x.accept_ts != y.accept_ts) return x.accept_ts < y.accept_ts;
    if (*x.dropoff_ts != *y.dropoff_ts) return *x.dropoff_ts < *y.dropoff_ts;
    return a < b;
  });
  return idx;
}

std::vector<Session> sessionize(const std::vector<TripEvent>& trips) {
  const auto order = completed_by_driver(trips);
  std::vector<Session> sessions;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const TripEvent& t = trips[order[k]];
    bool fresh = sessions.empty() || sessions.back().driver_id != t.driver_id;
    if (!fresh) {
      const TripEvent& prev = trips[sessions.back().trips.back()];
      const auto gap = minutes_between(*prev.dropoff_ts, t.accept_ts);
      if (gap < 0) {
        throw IntegrityError("overlapping trips for driver " +
                             std::to_string(t.driver_id) + " at " +
                             format_timestamp(t.accept_ts));
      }
      fresh = gap >= kIdleCutoffMinutes;
    }
    if (fresh) {
      sessions.push_back(Session{t.driver_id, {}});
    }
    sessions.back().trips.push_back(order[k]);
  }
  return sessions;
}

}  // namespace ridepolicy
