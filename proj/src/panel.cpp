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

#include "ridepolicy/panel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <unordered_map>

#include "ridepolicy/errors.hpp"
#include "ridepolicy/io.hpp"

namespace ridepolicy::panel {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace

std::vector<CohortAssignment> assign_cohorts(const std::vector<TripEvent>& trips,
                                             const geo::ConvexPolygon& major,
                                             Timestamp anchor, int launch_week,
                                             int horizon) {
  std::map<std::int64_t, CohortAssignment> by_driver;
  for (std::size_t i = 0; i < trips.size(); ++i) {
    const auto& t = trips[i];
    auto& a = by_driver[t.driver_id];
    a.driver_id = t.driver_id;
    if (t.cancelled || !t.dropoff_ts) continue;
    const int w = week_offset(*t.dropoff_ts, anchor);
    if (w < launch_week || w > launch_week + horizon) continue;
    if (!major.contains(t.destination)) continue;
    const bool earlier =
        !a.cohort || w < *a.cohort ||
        (w == *a.cohort && *t.dropoff_ts < *trips[*a.first_treatment_trip].dropoff_ts);
    if (earlier) {
      a.cohort = w;
      a.first_treatment_trip = i;
    }
  }
  std::vector<CohortAssignment> out;
  out.reserve(by_driver.size());
  for (auto& [id, a] : by_driver) out.push_back(a);
  return out;
}

bool is_peak_hour(int h) { return (h >= 6 && h < 9) || (h >= 16 && h < 19); }

namespace {

struct WeekAcc {
  int trips = 0;
  int accepted = 0;
  int cancelled = 0;
  int sessions = 0;
  std::int64_t online_min = 0;
  std::int64_t passenger_min = 0;
  std::int64_t wait_min = 0;
  double miles = 0.0;
  Money earnings = 0;
  Money net = 0;
  Money take = 0;
  Money tips = 0;
  double tip_share_sum = 0.0;
  int rated = 0;
  double rating_sum = 0.0;
  int peak = 0;
  int high_demand = 0;
  // Welford over per-trip hourly earnings.
  int he_n = 0;
  double he_mean = 0.0;
  double he_m2 = 0.0;
};

}  // namespace

std::vector<DriverWeekRecord> build_driver_week_panel(
    const std::vector<TripEvent>& trips,
    const std::vector<CohortAssignment>& cohorts, const PanelConfig& config) {
  if (config.last_week < config.first_week) {
    throw std::invalid_argument("empty panel horizon");
  }
  // Duplicate check on (driver, accept, session).
  {
    std::vector<std::size_t> idx(trips.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    auto key = [&](std::size_t i) {
      return std::tuple(trips[i].driver_id, trips[i].accept_ts, trips[i].session_id);
    };
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a, std::size_t b) { return key(a) < key(b); });
    for (std::size_t k = 1; k < idx.size(); ++k) {
      if (key(idx[k]) == key(idx[k - 1])) {
        const auto& t = trips[idx[k]];
        throw IntegrityError("duplicated trip: driver " + std::to_string(t.driver_id) +
                             " session " + std::to_string(t.session_id) + " at " +
                             format_timestamp(t.accept_ts));
      }
    }
  }
  std::map<std::int64_t, std::optional<int>> cohort_of;
  for (const auto& c : cohorts) cohort_of[c.driver_id] = c.cohort;
  for (const auto& t : trips) {
    if (!cohort_of.count(t.driver_id)) {
      throw IntegrityError("driver " + std::to_string(t.driver_id) +
                           " has trips but no cohort assignment");
    }
  }

  const int nw = config.last_week - config.first_week + 1;
  std::map<std::int64_t, std::size_t> driver_row;
  for (const auto& [id, g] : cohort_of) driver_row.emplace(id, driver_row.size());
  std::vector<WeekAcc> acc(driver_row.size() * nw);
  auto slot = [&](std::int64_t driver, Timestamp ts) -> WeekAcc* {
    const int w = week_offset(ts, config.anchor);
    if (w < config.first_week || w > config.last_week) return nullptr;
    return &acc[driver_row.at(driver) * nw + (w - config.first_week)];
  };

  for (const auto& t : trips) {
    WeekAcc* a = slot(t.driver_id, t.accept_ts);
    if (!a) continue;
    ++a->accepted;
    if (t.cancelled) {
      ++a->cancelled;
      continue;
    }
    ++a->trips;
    const auto online = t.online_minutes();
    a->online_min += online;
    a->passenger_min += t.passenger_minutes();
    a->wait_min += minutes_between(t.request_ts, *t.pickup_ts);
    a->miles += t.miles;
    a->earnings += t.driver_earnings;
    a->net += t.net_payment();
    a->take += t.platform_take;
    a->tips += t.tip;
    if (t.rider_payment > 0) {
      a->tip_share_sum += static_cast<double>(t.tip) / static_cast<double>(t.rider_payment);
    }
    if (t.rating) {
      ++a->rated;
      a->rating_sum += *t.rating;
    }
    if (is_peak_hour(hour_of_day(*t.pickup_ts))) ++a->peak;
    if (config.high_demand_cells.count(config.demand_grid.cell_of(t.origin))) {
      ++a->high_demand;
    }
    if (online > 0) {
      const double he = to_dollars(t.driver_earnings) / (static_cast<double>(online) / 60.0);
      ++a->he_n;
      const double d = he - a->he_mean;
      a->he_mean += d / a->he_n;
      a->he_m2 += d * (he - a->he_mean);
    }
  }
  for (const auto& s : sessionize(trips)) {
    WeekAcc* a = slot(s.driver_id, trips[s.trips.front()].accept_ts);
    if (a) ++a->sessions;
  }

  std::vector<DriverWeekRecord> out;
  out.reserve(acc.size());
  for (const auto& [id, row] : driver_row) {
    const auto g = cohort_of.at(id);
    for (int k = 0; k < nw; ++k) {
      const WeekAcc& a = acc[row * nw + k];
      DriverWeekRecord r;
      r.driver_id = id;
      r.week = config.first_week + k;
      r.cohort = g;
      r.enter_treatment = g && r.week >= *g ? 1 : 0;
      r.num_trip = a.trips;
      r.num_accepted = a.accepted;
      r.num_session = a.sessions;
      r.num_hour = static_cast<double>(a.online_min) / 60.0;
      r.trip_hour = static_cast<double>(a.passenger_min) / 60.0;
      r.num_mile = a.miles;
      r.earnings = to_dollars(a.earnings);
      r.net_payments = to_dollars(a.net);
      r.platform_take = to_dollars(a.take);
      r.tips = to_dollars(a.tips);
      if (a.online_min > 0) {
        r.ave_utilization = static_cast<double>(a.passenger_min) / static_cast<double>(a.online_min);
        r.ave_n_trip_per_hour = a.trips / r.num_hour;
        r.hourly_earning = r.earnings / r.num_hour;
        r.hourly_revenue = r.platform_take / r.num_hour;
      }
      if (a.sessions > 0) r.ave_dur_per_session = r.num_hour / a.sessions;
      if (a.trips > 0) {
        r.earning_per_ride = r.earnings / a.trips;
        r.perc_tips = a.tip_share_sum / a.trips;
        r.rider_wait_time = static_cast<double>(a.wait_min) / 60.0 / a.trips;
        r.frac_Phour = static_cast<double>(a.peak) / a.trips;
        r.frac_Hdemand = static_cast<double>(a.high_demand) / a.trips;
      }
      if (a.accepted > 0) {
        r.weekly_cancel_rate = static_cast<double>(a.cancelled) / a.accepted;
      }
      if (a.rated > 0) r.driver_rating = a.rating_sum / a.rated;
      r.hourly_earning_var = a.he_n >= 2 ? a.he_m2 / (a.he_n - 1) : kNaN;
      out.push_back(r);
    }
  }
  return out;
}

namespace {

struct Column {
  std::string name;
  double DriverWeekRecord::*field;
};

const std::vector<Column>& double_columns() {
  static const std::vector<Column> cols = {
      {"num_hour", &DriverWeekRecord::num_hour},
      {"trip_hour", &DriverWeekRecord::trip_hour},
      {"num_mile", &DriverWeekRecord::num_mile},
      {"ave_utilization", &DriverWeekRecord::ave_utilization},
      {"ave_dur_per_session", &DriverWeekRecord::ave_dur_per_session},
      {"ave_n_trip_per_hour", &DriverWeekRecord::ave_n_trip_per_hour},
      {"hourly_earning", &DriverWeekRecord::hourly_earning},
      {"earning_per_ride", &DriverWeekRecord::earning_per_ride},
      {"tips", &DriverWeekRecord::tips},
      {"perc_tips", &DriverWeekRecord::perc_tips},
      {"weekly_cancel_rate", &DriverWeekRecord::weekly_cancel_rate},
      {"rider_wait_time", &DriverWeekRecord::rider_wait_time},
      {"frac_Hdemand", &DriverWeekRecord::frac_Hdemand},
      {"frac_Phour", &DriverWeekRecord::frac_Phour},
      {"earnings", &DriverWeekRecord::earnings},
      {"net_payments", &DriverWeekRecord::net_payments},
      {"platform_take", &DriverWeekRecord::platform_take},
      {"hourly_revenue", &DriverWeekRecord::hourly_revenue},
      {"hourly_earning_var", &DriverWeekRecord::hourly_earning_var},
  };
  return cols;
}

}  // namespace

const std::vector<std::string>& driver_week_columns() {
  static const std::vector<std::string> cols = {
      "driver_id",       "week",
      "num_trip",        "num_session",
      "num_hour",        "num_mile",
      "trip_hour",       "ave_utilization",
      "ave_dur_per_session", "ave_n_trip_per_hour",
      "hourly_earning",  "earning_per_ride",
      "tips",            "perc_tips",
      "weekly_cancel_rate", "driver_rating",
      "rider_wait_time", "enter_treatment",
      "frac_Hdemand",    "frac_Phour",
      "cohort",          "num_accepted",
      "earnings",        "net_payments",
      "platform_take",   "hourly_revenue",
      "hourly_earning_var"};
  return cols;
}

bool is_outcome_name(const std::string& name) {
  if (name == "num_trip" || name == "num_session" || name == "driver_rating" ||
      name == "num_accepted") {
    return true;
  }
  for (const auto& c : double_columns()) {
    if (c.name == name) return true;
  }
  return false;
}

double outcome_value(const DriverWeekRecord& r, const std::string& name) {
  if (name == "num_trip") return r.num_trip;
  if (name == "num_session") return r.num_session;
  if (name == "num_accepted") return r.num_accepted;
  if (name == "driver_rating") return r.driver_rating ? *r.driver_rating : kNaN;
  for (const auto& c : double_columns()) {
    if (c.name == name) return r.*(c.field);
  }
  throw std::out_of_range("unknown outcome: " + name);
}

void write_driver_week_panel(const std::filesystem::path& path,
                             const std::vector<DriverWeekRecord>& rows) {
  const auto& names = driver_week_columns();
  io::CsvWriter w(path, names);
  std::vector<std::string> cells(names.size());
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < names.size(); ++i) {
      const auto& n = names[i];
      if (n == "driver_id") {
        cells[i] = std::to_string(r.driver_id);
      } else if (n == "week") {
        cells[i] = std::to_string(r.week);
      } else if (n == "cohort") {
        cells[i] = r.cohort ? std::to_string(*r.cohort) : "";
      } else if (n == "enter_treatment") {
        cells[i] = std::to_string(r.enter_treatment);
      } else if (n == "num_trip" || n == "num_session" || n == "num_accepted") {
        cells[i] = std::to_string(static_cast<int>(outcome_value(r, n)));
      } else {
        cells[i] = io::fmt_double(outcome_value(r, n));
      }
    }
    w.row(cells);
  }
  w.close();
}

std::vector<DriverWeekRecord> read_driver_week_panel(const std::filesystem::path& path) {
  const auto tab = io::CsvTable::read(path);
  std::vector<std::size_t> dc;
  for (const auto& c : double_columns()) dc.push_back(tab.column(c.name));
  const auto c_id = tab.column("driver_id"), c_w = tab.column("week"),
             c_g = tab.column("cohort"), c_e = tab.column("enter_treatment"),
             c_nt = tab.column("num_trip"), c_ns = tab.column("num_session"),
             c_na = tab.column("num_accepted"), c_r = tab.column("driver_rating");
  std::vector<DriverWeekRecord> rows;
  rows.reserve(tab.rows());
  for (std::size_t i = 0; i < tab.rows(); ++i) {
    try {
      DriverWeekRecord r;
      r.driver_id = io::parse_int(tab.at(i, c_id));
      r.week = static_cast<int>(io::parse_int(tab.at(i, c_w)));
      if (!tab.at(i, c_g).empty()) r.cohort = static_cast<int>(io::parse_int(tab.at(i, c_g)));
      r.enter_treatment = static_cast<int>(io::parse_int(tab.at(i, c_e)));
      r.num_trip = static_cast<int>(io::parse_int(tab.at(i, c_nt)));
      r.num_session = static_cast<int>(io::parse_int(tab.at(i, c_ns)));
      r.num_accepted = static_cast<int>(io::parse_int(tab.at(i, c_na)));
      if (!tab.at(i, c_r).empty()) r.driver_rating = io::parse_double(tab.at(i, c_r));
      for (std::size_t k = 0; k < dc.size(); ++k) {
        r.*(double_columns()[k].field) = io::parse_double(tab.at(i, dc[k]));
      }
      rows.push_back(r);
    } catch (const std::invalid_argument& e) {
      throw IntegrityError(path.string() + " row " + std::to_string(i + 2) + ": " +
                           e.what());
    }
  }
  return rows;
}

std::set<geo::HexCell> median_high_demand_cells(const std::vector<DemandRow>& demand,
                                                int first_week) {
  std::map<geo::HexCell, std::int64_t> total;
  for (const auto& d : demand) {
    const auto w = floor_div(d.hour_index, 168);
    if (w < first_week || w >= 0) continue;
    total[d.hex] += d.intents;
  }
  std::set<geo::HexCell> out;
  if (total.empty()) return out;
  std::vector<std::int64_t> v;
  for (const auto& [c, n] : total) v.push_back(n);
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size();
  const double median = m % 2 ? static_cast<double>(v[m / 2])
                              : 0.5 * static_cast<double>(v[m / 2 - 1] + v[m / 2]);
  for (const auto& [c, n] : total) {
    if (static_cast<double>(n) > median) out.insert(c);
  }
  return out;
}

std::vector<bool> high_demand_flags(const std::vector<geo::HexCell>& zones,
                                    const std::vector<double>& pre_average,
                                    ZoneKind kind, int top_hexagons) {
  const std::size_t n = zones.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (pre_average[a] != pre_average[b]) return pre_average[a] > pre_average[b];
    return zones[a] < zones[b];
  });
  std::vector<bool> flag(n, false);
  if (kind == ZoneKind::kHex) {
    const std::size_t k = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(0, top_hexagons)));
    for (std::size_t i = 0; i < k; ++i) flag[order[i]] = true;
    return flag;
  }
  if (n < 2) return flag;
  const std::size_t k = std::max<std::size_t>(1, n / 10);
  const double cut = pre_average[order[std::min(k, n - 1)]];
  for (std::size_t i = 0; i < n; ++i) flag[i] = pre_average[i] > cut;
  return flag;
}

std::vector<ZoneWeekDemand> build_zone_week_demand(const std::vector<DemandRow>& demand,
                                                   const std::vector<TripEvent>& trips,
                                                   const ZoneConfig& config) {
  const int nw = config.last_week - config.first_week + 1;
  const bool zip = config.kind == ZoneKind::kZip;
  const geo::HexGrid& zgrid = zip ? config.zip_grid : config.demand_grid;
  auto zone_of_demand_cell = [&](const geo::HexCell& c) {
    return zip ? config.zip_grid.cell_of(config.demand_grid.center(c)) : c;
  };

  std::map<geo::HexCell, std::vector<DemandRow>> counts;
  auto week_slot = [&](std::map<geo::HexCell, std::vector<DemandRow>>::iterator it,
                       int w) -> DemandRow& { return it->second[w - config.first_week]; };
  for (const auto& z : config.zones) counts.try_emplace(z, std::vector<DemandRow>(nw));
  for (const auto& d : demand) {
    check_demand(d);
    const int w = static_cast<int>(floor_div(d.hour_index, 168));
    if (w < config.first_week || w > config.last_week) continue;
    const auto z = zone_of_demand_cell(d.hex);
    auto it = counts.find(z);
    if (it == counts.end()) {
      if (!config.zones.empty()) continue;
      it = counts.emplace(z, std::vector<DemandRow>(nw)).first;
    }
    DemandRow& acc = week_slot(it, w);
    acc.intents += d.intents;
    acc.requests += d.requests;
    acc.completes += d.completes;
  }

  // Payment per mile by zip cell and week.
  std::map<geo::HexCell, std::vector<std::pair<double, double>>> ppm;
  for (const auto& t : trips) {
    if (t.cancelled || t.miles <= 0) continue;
    const int w = week_offset(t.accept_ts, config.anchor);
    if (w < config.first_week || w > config.last_week) continue;
    auto& v = ppm[config.zip_grid.cell_of(t.origin)];
    if (v.empty()) v.assign(nw, {0.0, 0.0});
    v[w - config.first_week].first += to_dollars(t.rider_payment);
    v[w - config.first_week].second += t.miles;
  }
  auto price_indicator = [&](const geo::HexCell& zone, int w) {
    const geo::HexCell zc = zip ? zone : config.zip_grid.cell_of(config.demand_grid.center(zone));
    const auto it = ppm.find(zc);
    if (it == ppm.end()) return 1.0;
    double pay = 0.0, miles = 0.0;
    for (int k = config.first_week; k < std::min(0, config.last_week + 1); ++k) {
      pay += it->second[k - config.first_week].first;
      miles += it->second[k - config.first_week].second;
    }
    const auto& cur = it->second[w - config.first_week];
    if (miles <= 0 || cur.second <= 0 || pay <= 0) return 1.0;
    return (cur.first / cur.second) / (pay / miles);
  };

  std::vector<geo::HexCell> zones;
  std::vector<double> pre_avg;
  const int n_pre = std::max(0, std::min(0, config.last_week + 1) - config.first_week);
  for (const auto& [z, v] : counts) {
    zones.push_back(z);
    double s = 0.0;
    for (int k = 0; k < n_pre; ++k) s += static_cast<double>(v[k].intents);
    pre_avg.push_back(n_pre > 0 ? s / n_pre : 0.0);
  }
  const auto flags = high_demand_flags(zones, pre_avg, config.kind, config.top_hexagons);

  std::vector<ZoneWeekDemand> out;
  out.reserve(zones.size() * nw);
  for (std::size_t i = 0; i < zones.size(); ++i) {
    const auto& v = counts.at(zones[i]);
    const bool major = config.major.contains(zgrid.center(zones[i]));
    for (int k = 0; k < nw; ++k) {
      ZoneWeekDemand r;
      r.zone = zones[i];
      r.zone_id = geo::hex_label(zones[i]);
      r.week = config.first_week + k;
      r.intents = v[k].intents;
      r.requests = v[k].requests;
      r.completes = v[k].completes;
      r.price_indicator = price_indicator(zones[i], r.week);
      r.in_major_market = major;
      r.high_demand = flags[i];
      out.push_back(r);
    }
  }
  return out;
}

void write_zone_week_demand(const std::filesystem::path& path,
                            const std::vector<ZoneWeekDemand>& rows) {
  io::CsvWriter w(path, {"zone_id", "week", "intents", "requests", "completes",
                         "price_indicator", "in_major_market", "high_demand"});
  for (const auto& r : rows) {
    w.row({r.zone_id, std::to_string(r.week), std::to_string(r.intents),
           std::to_string(r.requests), std::to_string(r.completes),
           io::fmt_double(r.price_indicator), r.in_major_market ? "1" : "0",
           r.high_demand ? "1" : "0"});
  }
  w.close();
}

std::vector<ZoneWeekDemand> read_zone_week_demand(const std::filesystem::path& path) {
  const auto tab = io::CsvTable::read(path);
  const auto cz = tab.column("zone_id"), cw = tab.column("week"),
             ci = tab.column("intents"), cr = tab.column("requests"),
             cc = tab.column("completes"), cp = tab.column("price_indicator"),
             cm = tab.column("in_major_market"), ch = tab.column("high_demand");
  std::vector<ZoneWeekDemand> rows;
  rows.reserve(tab.rows());
  for (std::size_t i = 0; i < tab.rows(); ++i) {
    try {
      ZoneWeekDemand r;
      r.zone_id = tab.at(i, cz);
      r.zone = geo::parse_hex_label(r.zone_id);
      r.week = static_cast<int>(io::parse_int(tab.at(i, cw)));
      r.intents = io::parse_int(tab.at(i, ci));
      r.requests = io::parse_int(tab.at(i, cr));
      r.completes = io::parse_int(tab.at(i, cc));
      r.price_indicator = io::parse_double(tab.at(i, cp));
      r.in_major_market = tab.at(i, cm) == "1";
      r.high_demand = tab.at(i, ch) == "1";
      check_demand({r.zone, 0, r.intents, r.requests, r.completes});
      rows.push_back(r);
    } catch (const std::invalid_argument& e) {
      throw IntegrityError(path.string() + " row " + std::to_string(i + 2) + ": " +
                           e.what());
    }
  }
  return rows;
}

}  // namespace ridepolicy::panel
