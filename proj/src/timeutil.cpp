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

#include "ridepolicy/timeutil.hpp"

#include <cstdio>
#include <stdexcept>
#include <string>

namespace ridepolicy {

using std::chrono::days;
using std::chrono::floor;
using std::chrono::minutes;

Timestamp make_timestamp(int year, unsigned month, unsigned day, int hour,
                         int minute) {
  const std::chrono::year_month_day ymd{std::chrono::year{year},
                                        std::chrono::month{month},
                                        std::chrono::day{day}};
  if (!ymd.ok()) throw std::invalid_argument("invalid calendar date");
  return Timestamp{std::chrono::sys_days{ymd}} + minutes{hour * 60 + minute};
}

std::string format_timestamp(Timestamp ts) {
  const auto day_start = floor<days>(ts);
  const std::chrono::year_month_day ymd{day_start};
  const auto rem = (ts - day_start).count();
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u %02lld:%02lld",
                static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()),
                static_cast<long long>(rem / 60),
                static_cast<long long>(rem % 60));
  return buf;
}

namespace {

int parse_digits(std::string_view s, std::size_t pos, std::size_t n) {
  int v = 0;
  for (std::size_t i = pos; i < pos + n; ++i) {
    const char c = s[i];
    if (c < '0' || c > '9') {
      throw std::invalid_argument("bad timestamp: " + std::string(s));
    }
    v = v * 10 + (c - '0');
  }
  return v;
}

}  // namespace

Timestamp parse_timestamp(std::string_view text) {
  if (text.size() != 16 || text[4] != '-' || text[7] != '-' ||
      text[10] != ' ' || text[13] != ':') {
    throw std::invalid_argument("bad timestamp: " + std::string(text));
  }
  return make_timestamp(parse_digits(text, 0, 4), parse_digits(text, 5, 2),
                        parse_digits(text, 8, 2), parse_digits(text, 11, 2),
                        parse_digits(text, 14, 2));
}

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

int week_offset(Timestamp ts, Timestamp anchor) {
  return static_cast<int>(floor_div(minutes_between(anchor, ts), 7 * 24 * 60));
}

int week_index(Timestamp ts, Timestamp anchor, int first_week, int last_week) {
  const int w = week_offset(ts, anchor);
  if (w < first_week || w > last_week) {
    throw std::out_of_range("timestamp " + format_timestamp(ts) +
                            " outside horizon weeks [" +
                            std::to_string(first_week) + ", " +
                            std::to_string(last_week) + "]");
  }
  return w;
}

std::int64_t hour_index(Timestamp ts, Timestamp anchor) {
  return floor_div(minutes_between(anchor, ts), 60);
}

int hour_of_day(Timestamp ts) {
  const auto rem = (ts - floor<days>(ts)).count();
  return static_cast<int>(rem / 60);
}

int day_of_week(Timestamp ts) {
  const std::chrono::weekday wd{floor<days>(ts)};
  return static_cast<int>(wd.iso_encoding()) - 1;
}

}  // namespace ridepolicy
