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

#include "ridepolicy/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

#include "ridepolicy/errors.hpp"

namespace ridepolicy::io {

namespace fs = std::filesystem;

std::string fmt_double(double v, int significant) {
  if (std::isnan(v)) return "";
  if (v == 0.0) return "0";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", significant, v);
  return buf;
}

std::string fmt_fixed(double v, int decimals) {
  if (std::isnan(v)) return "";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  if (std::string_view(buf).find_first_not_of("-0.") == std::string_view::npos) {
    std::snprintf(buf, sizeof buf, "%.*f", decimals, 0.0);
  }
  return buf;
}

std::string fmt_money(Money m) {
  char buf[32];
  const Money a = m < 0 ? -m : m;
  std::snprintf(buf, sizeof buf, "%s%lld.%02lld", m < 0 ? "-" : "",
                static_cast<long long>(a / 100), static_cast<long long>(a % 100));
  return buf;
}

Money parse_money(std::string_view s) {
  bool neg = false;
  if (!s.empty() && s.front() == '-') {
    neg = true;
    s.remove_prefix(1);
  }
  const auto dot = s.find('.');
  const std::string_view whole = s.substr(0, dot);
  std::string_view frac = dot == std::string_view::npos ? "" : s.substr(dot + 1);
  Money w = 0;
  if (!whole.empty()) {
    auto [p, ec] = std::from_chars(whole.data(), whole.data() + whole.size(), w);
    if (ec != std::errc() || p != whole.data() + whole.size()) {
      throw std::invalid_argument("bad money value: " + std::string(s));
    }
  }
  Money cents = 0;
  if (frac.size() > 2) throw std::invalid_argument("money beyond cents: " + std::string(s));
  for (std::size_t i = 0; i < 2; ++i) {
    cents *= 10;
    if (i < frac.size()) {
      if (frac[i] < '0' || frac[i] > '9') {
        throw std::invalid_argument("bad money value: " + std::string(s));
      }
      cents += frac[i] - '0';
    }
  }
  const Money v = w * 100 + cents;
  return neg ? -v : v;
}

double parse_double(std::string_view s) {
  if (s.empty()) return std::numeric_limits<double>::quiet_NaN();
  return std::stod(std::string(s));
}

std::int64_t parse_int(std::string_view s) {
  std::int64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    throw std::invalid_argument("bad integer: " + std::string(s));
  }
  return v;
}

CsvWriter::CsvWriter(const fs::path& path, const std::vector<std::string>& header)
    : path_(path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  out_.open(path, std::ios::binary | std::ios::trunc);
  if (!out_) throw std::runtime_error("cannot write " + path.string());
  row(header);
}

void CsvWriter::row(const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out_ << ',';
    out_ << cells[i];
  }
  out_ << '\n';
}

void CsvWriter::close() {
  out_.close();
  if (!out_) throw std::runtime_error("failed writing " + path_.string());
}

namespace {

void split_line(const std::string& line, std::vector<std::string>& out) {
  out.clear();
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string::npos) {
      out.emplace_back(line.substr(start));
      break;
    }
    out.emplace_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  if (!out.empty() && !out.back().empty() && out.back().back() == '\r') {
    out.back().pop_back();
  }
}

}  // namespace

CsvTable CsvTable::read(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  CsvTable t;
  t.source_ = path.string();
  std::string line;
  if (!std::getline(in, line)) {
    throw IntegrityError(path.string() + ": empty file");
  }
  split_line(line, t.header_);
  std::vector<std::string> cells;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    split_line(line, cells);
    if (cells.size() != t.header_.size()) {
      throw IntegrityError(path.string() + ": row " +
                           std::to_string(t.cells_.size() + 2) + " has " +
                           std::to_string(cells.size()) + " fields, expected " +
                           std::to_string(t.header_.size()));
    }
    t.cells_.push_back(cells);
  }
  return t;
}

bool CsvTable::has_column(std::string_view name) const {
  for (const auto& h : header_) {
    if (h == name) return true;
  }
  return false;
}

std::size_t CsvTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < header_.size(); ++i) {
    if (header_[i] == name) return i;
  }
  throw IntegrityError(source_ + ": missing column " + std::string(name));
}

const std::vector<std::string> kTripColumns = {
    "driver_id",     "session_id",    "request_ts",    "accept_ts",
    "pickup_ts",     "dropoff_ts",    "o_x_km",        "o_y_km",
    "d_x_km",        "d_y_km",        "miles",         "rider_payment",
    "external_fees", "platform_take", "driver_earnings", "tip",
    "vehicle_type",  "cancelled",     "rating"};

const std::vector<std::string> kDemandColumns = {
    "hex_q", "hex_r", "hour_index", "intents", "requests", "completes"};

void write_trips(const fs::path& path, const std::vector<TripEvent>& trips) {
  CsvWriter w(path, kTripColumns);
  for (const auto& t : trips) {
    w.row({std::to_string(t.driver_id), std::to_string(t.session_id),
           format_timestamp(t.request_ts), format_timestamp(t.accept_ts),
           t.pickup_ts ? format_timestamp(*t.pickup_ts) : "",
           t.dropoff_ts ? format_timestamp(*t.dropoff_ts) : "",
           fmt_fixed(t.origin.x_km, 4), fmt_fixed(t.origin.y_km, 4),
           fmt_fixed(t.destination.x_km, 4), fmt_fixed(t.destination.y_km, 4),
           fmt_fixed(t.miles, 3), fmt_money(t.rider_payment),
           fmt_money(t.external_fees), fmt_money(t.platform_take),
           fmt_money(t.driver_earnings), fmt_money(t.tip),
           std::string(vehicle_name(t.vehicle)), t.cancelled ? "1" : "0",
           t.rating ? fmt_fixed(*t.rating, 1) : ""});
  }
  w.close();
}

std::vector<TripEvent> read_trips(const fs::path& path) {
  const CsvTable tab = CsvTable::read(path);
  std::vector<std::size_t> c;
  for (const auto& name : kTripColumns) c.push_back(tab.column(name));
  std::vector<TripEvent> trips;
  trips.reserve(tab.rows());
  for (std::size_t i = 0; i < tab.rows(); ++i) {
    auto cell = [&](int k) -> const std::string& { return tab.at(i, c[k]); };
    try {
      TripEvent t;
      t.driver_id = parse_int(cell(0));
      t.session_id = parse_int(cell(1));
      t.request_ts = parse_timestamp(cell(2));
      t.accept_ts = parse_timestamp(cell(3));
      if (!cell(4).empty()) t.pickup_ts = parse_timestamp(cell(4));
      if (!cell(5).empty()) t.dropoff_ts = parse_timestamp(cell(5));
      t.origin = {parse_double(cell(6)), parse_double(cell(7))};
      t.destination = {parse_double(cell(8)), parse_double(cell(9))};
      t.miles = parse_double(cell(10));
      t.rider_payment = parse_money(cell(11));
      t.external_fees = parse_money(cell(12));
      t.platform_take = parse_money(cell(13));
      t.driver_earnings = parse_money(cell(14));
      t.tip = parse_money(cell(15));
      t.vehicle = parse_vehicle(cell(16));
      t.cancelled = cell(17) == "1";
      if (!cell(18).empty()) t.rating = parse_double(cell(18));
      check_trip(t);
      trips.push_back(t);
    } catch (const std::invalid_argument& e) {
      throw IntegrityError(path.string() + " row " + std::to_string(i + 2) +
                           ": " + e.what());
    }
  }
  return trips;
}

void write_demand(const fs::path& path, const std::vector<DemandRow>& rows) {
  CsvWriter w(path, kDemandColumns);
  for (const auto& d : rows) {
    w.row({std::to_string(d.hex.q), std::to_string(d.hex.r),
           std::to_string(d.hour_index), std::to_string(d.intents),
           std::to_string(d.requests), std::to_string(d.completes)});
  }
  w.close();
}

std::vector<DemandRow> read_demand(const fs::path& path) {
  const CsvTable tab = CsvTable::read(path);
  std::vector<std::size_t> c;
  for (const auto& name : kDemandColumns) c.push_back(tab.column(name));
  std::vector<DemandRow> rows;
  rows.reserve(tab.rows());
  for (std::size_t i = 0; i < tab.rows(); ++i) {
    DemandRow d;
    d.hex = {static_cast<int>(parse_int(tab.at(i, c[0]))),
             static_cast<int>(parse_int(tab.at(i, c[1])))};
    d.hour_index = parse_int(tab.at(i, c[2]));
    d.intents = parse_int(tab.at(i, c[3]));
    d.requests = parse_int(tab.at(i, c[4]));
    d.completes = parse_int(tab.at(i, c[5]));
    check_demand(d);
    rows.push_back(d);
  }
  return rows;
}

}  // namespace ridepolicy::io
