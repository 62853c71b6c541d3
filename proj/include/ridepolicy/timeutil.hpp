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

#ifndef RIDEPOLICY_TIMEUTIL_HPP_
#define RIDEPOLICY_TIMEUTIL_HPP_

#include <chrono>
#include <cstdint>
#include <string>
#include <string_view>

namespace ridepolicy {

using Timestamp = std::chrono::sys_time<std::chrono::minutes>;

Timestamp make_timestamp(int year, unsigned month, unsigned day, int hour = 0,
                         int minute = 0);

// "YYYY-MM-DD HH:MM"
std::string format_timestamp(Timestamp ts);
Timestamp parse_timestamp(std::string_view text);

inline std::int64_t minutes_between(Timestamp a, Timestamp b) {
  return (b - a).count();
}

// Floor division so that anchor - 1 minute lands in week -1.
std::int64_t floor_div(std::int64_t a, std::int64_t b);

// Week offset relative to a Monday 00:00 anchor, no range check.
int week_offset(Timestamp ts, Timestamp anchor);

// Same, but throws std::out_of_range outside [first_week, last_week].
int week_index(Timestamp ts, Timestamp anchor, int first_week, int last_week);

// Hours since the anchor (negative before it).
std::int64_t hour_index(Timestamp ts, Timestamp anchor);

int hour_of_day(Timestamp ts);
// 0 = Monday ... 6 = Sunday.
int day_of_week(Timestamp ts);

}  // namespace ridepolicy

#endif  // RIDEPOLICY_TIMEUTIL_HPP_
