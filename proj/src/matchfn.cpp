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

#include "ridepolicy/matchfn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Dense>

#include "ridepolicy/errors.hpp"

namespace ridepolicy::matchfn {

namespace {

constexpr std::array<std::string_view, kNumSlots> kSlotNames = {
    "morning_peak", "midday", "evening_peak", "off_peak", "late_night"};
constexpr std::array<std::string_view, kNumDays> kDayNames = {
    "Mon", "Tue", "Wed", "Thu", "Fri", "Sat", "Sun"};

}  // namespace

std::string_view slot_name(Slot s) { return kSlotNames[static_cast<int>(s)]; }

Slot parse_slot(std::string_view s) {
  for (int i = 0; i < kNumSlots; ++i) {
    if (kSlotNames[i] == s) return static_cast<Slot>(i);
  }
  throw std::invalid_argument("unknown slot: " + std::string(s));
}

std::string_view day_name(int day) { return kDayNames.at(day); }

int parse_day(std::string_view s) {
  for (int i = 0; i < kNumDays; ++i) {
    if (kDayNames[i] == s) return i;
  }
  throw std::invalid_argument("unknown day: " + std::string(s));
}

std::optional<Slot> slot_of_hour(int hour_of_day) {
  if (hour_of_day >= 7 && hour_of_day < 9) return Slot::kMorningPeak;
  if (hour_of_day >= 9 && hour_of_day < 17) return Slot::kMidday;
  if (hour_of_day >= 17 && hour_of_day < 20) return Slot::kEveningPeak;
  if (hour_of_day == 20) return Slot::kOffPeak;
  if (hour_of_day >= 21 && hour_of_day < 24) return Slot::kLateNight;
  return std::nullopt;
}

int market_index(const MarketKey& k) {
  return ((k.area - 1) * kNumSlots + static_cast<int>(k.slot)) * kNumDays +
         k.day;
}

MarketKey market_from_index(int index) {
  MarketKey k;
  k.day = index % kNumDays;
  index /= kNumDays;
  k.slot = static_cast<Slot>(index % kNumSlots);
  k.area = index / kNumSlots + 1;
  return k;
}

std::string market_label(const MarketKey& k) {
  return "area" + std::to_string(k.area) + "/" + std::string(slot_name(k.slot)) +
         "/" + std::string(day_name(k.day));
}

AreaAssignment::AreaAssignment(std::map<geo::HexCell, int> areas)
    : areas_(std::move(areas)) {
  for (const auto& [cell, a] : areas_) {
    if (a < 1 || a > kNumAreas) {
      throw std::invalid_argument("area id out of range for hex " +
                                  geo::hex_label(cell));
    }
  }
}

AreaAssignment AreaAssignment::partition(const std::vector<geo::HexCell>& cells,
                                         const geo::HexGrid& grid) {
  if (cells.size() < static_cast<std::size_t>(kNumAreas)) {
    throw std::invalid_argument("need at least 15 production cells for 15 areas");
  }
  std::vector<geo::HexCell> sorted = cells;
  std::sort(sorted.begin(), sorted.end(),
            [&](const geo::HexCell& a, const geo::HexCell& b) {
              const double xa = grid.center(a).x_km;
              const double xb = grid.center(b).x_km;
              if (xa != xb) return xa < xb;
              return a < b;
            });
  std::map<geo::HexCell, int> out;
  const std::size_t n = sorted.size();
  constexpr int kCols = 5;
  constexpr int kRows = 3;
  for (int c = 0; c < kCols; ++c) {
    const std::size_t lo = c * n / kCols;
    const std::size_t hi = (c + 1) * n / kCols;
    std::vector<geo::HexCell> col(sorted.begin() + lo, sorted.begin() + hi);
    std::sort(col.begin(), col.end(),
              [&](const geo::HexCell& a, const geo::HexCell& b) {
                const double ya = grid.center(a).y_km;
                const double yb = grid.center(b).y_km;
                if (ya != yb) return ya < yb;
                return a < b;
              });
    for (int r = 0; r < kRows; ++r) {
      const std::size_t rlo = r * col.size() / kRows;
      const std::size_t rhi = (r + 1) * col.size() / kRows;
      for (std::size_t i = rlo; i < rhi; ++i) out[col[i]] = c * kRows + r + 1;
    }
  }
  return AreaAssignment(std::move(out));
}

int AreaAssignment::area_of(const geo::HexCell& c) const {
  const auto it = areas_.find(c);
  if (it == areas_.end()) {
    throw std::out_of_range("hex " + geo::hex_label(c) + " has no area");
  }
  return it->second;
}

std::optional<MarketKey> market_of(const AreaAssignment& areas,
                                   const geo::HexCell& hex,
                                   std::int64_t hour_index, Timestamp anchor) {
  const Timestamp ts = anchor + std::chrono::minutes(hour_index * 60);
  const auto slot = slot_of_hour(hour_of_day(ts));
  if (!slot) return std::nullopt;
  return MarketKey{areas.area_of(hex), *slot, day_of_week(ts)};
}

std::vector<MarketKey> define_markets(const AreaAssignment& areas) {
  std::array<bool, kNumAreas + 1> seen{};
  for (const auto& [cell, a] : areas.cells()) seen[a] = true;
  for (int a = 1; a <= kNumAreas; ++a) {
    if (!seen[a]) {
      throw std::invalid_argument("area " + std::to_string(a) + " has no cells");
    }
  }
  std::vector<MarketKey> keys;
  keys.reserve(kNumMarkets);
  for (int i = 0; i < kNumMarkets; ++i) keys.push_back(market_from_index(i));
  return keys;
}

void SupplyHours::add(SupplyStateKind s, double h) {
  switch (s) {
    case SupplyStateKind::kIdle:
      idle_h += h;
      break;
    case SupplyStateKind::kEnroute:
      enroute_h += h;
      break;
    case SupplyStateKind::kTransporting:
      transporting_h += h;
      break;
  }
}

std::uint64_t hex_hour_key(const geo::HexCell& c, std::int64_t hour_index) {
  if (c.q < -32768 || c.q > 32767 || c.r < -32768 || c.r > 32767 ||
      hour_index < std::numeric_limits<std::int32_t>::min() ||
      hour_index > std::numeric_limits<std::int32_t>::max()) {
    throw std::out_of_range("hex-hour key out of range");
  }
  return (static_cast<std::uint64_t>(static_cast<std::uint16_t>(c.q)) << 48) |
         (static_cast<std::uint64_t>(static_cast<std::uint16_t>(c.r)) << 32) |
         static_cast<std::uint32_t>(static_cast<std::int32_t>(hour_index));
}

geo::HexCell hex_from_key(std::uint64_t key) {
  return {static_cast<std::int16_t>(key >> 48),
          static_cast<std::int16_t>((key >> 32) & 0xffff)};
}

std::int64_t hour_from_key(std::uint64_t key) {
  return static_cast<std::int32_t>(key & 0xffffffffu);
}

void SupplyField::add(const geo::HexCell& c, std::int64_t hour,
                      SupplyStateKind s, double h) {
  cells_[hex_hour_key(c, hour)].add(s, h);
}

double SupplyField::total(const geo::HexCell& c, std::int64_t hour) const {
  const auto* s = find(c, hour);
  return s ? s->total() : 0.0;
}

const SupplyHours* SupplyField::find(const geo::HexCell& c,
                                     std::int64_t hour) const {
  const auto it = cells_.find(hex_hour_key(c, hour));
  return it == cells_.end() ? nullptr : &it->second;
}

std::vector<SupplyState> SupplyField::rows() const {
  std::vector<SupplyState> out;
  out.reserve(cells_.size());
  for (const auto& [key, h] : cells_) {
    out.push_back({hex_from_key(key), hour_from_key(key), h});
  }
  std::sort(out.begin(), out.end(), [](const SupplyState& a, const SupplyState& b) {
    if (a.hour_index != b.hour_index) return a.hour_index < b.hour_index;
    return a.hex < b.hex;
  });
  return out;
}

namespace {

class SegmentAllocator {
 public:
  SegmentAllocator(const geo::HexGrid& grid, const SupplySink& sink)
      : grid_(grid), sink_(sink) {}

  // [a, b) in minutes since the anchor.
  void run(std::size_t session, std::int64_t a, std::int64_t b,
           const geo::Point& p0, const geo::Point& p1, SupplyStateKind state) {
    if (b <= a) return;
    const geo::HexCell h0 = grid_.cell_of(p0);
    const geo::HexCell h1 = grid_.cell_of(p1);
    if (h0 == h1) {
      for (std::int64_t m = a; m < b;) {
        const std::int64_t hour = floor_div(m, 60);
        const std::int64_t end = std::min(b, (hour + 1) * 60);
        sink_(session, h0, hour, state, static_cast<double>(end - m) / 60.0);
        m = end;
      }
      return;
    }
    const double len = static_cast<double>(b - a);
    geo::HexCell run_hex{};
    std::int64_t run_hour = 0;
    std::int64_t run_minutes = 0;
    for (std::int64_t m = a; m < b; ++m) {
      const double f = (static_cast<double>(m - a) + 0.5) / len;
      const geo::Point p{p0.x_km + f * (p1.x_km - p0.x_km),
                         p0.y_km + f * (p1.y_km - p0.y_km)};
      const geo::HexCell h = grid_.cell_of(p);
      const std::int64_t hour = floor_div(m, 60);
      if (run_minutes > 0 && (h != run_hex || hour != run_hour)) {
        sink_(session, run_hex, run_hour, state, run_minutes / 60.0);
        run_minutes = 0;
      }
      run_hex = h;
      run_hour = hour;
      ++run_minutes;
    }
    if (run_minutes > 0) {
      sink_(session, run_hex, run_hour, state, run_minutes / 60.0);
    }
  }

 private:
  const geo::HexGrid& grid_;
  const SupplySink& sink_;
};

}  // namespace

void walk_supply(const std::vector<TripEvent>& trips,
                 const std::vector<Session>& sessions, const geo::HexGrid& grid,
                 Timestamp anchor, const SupplySink& sink) {
  SegmentAllocator alloc(grid, sink);
  for (std::size_t s = 0; s < sessions.size(); ++s) {
    const auto& idx = sessions[s].trips;
    for (std::size_t k = 0; k < idx.size(); ++k) {
      const TripEvent& t = trips[idx[k]];
      const std::int64_t accept = minutes_between(anchor, t.accept_ts);
      const std::int64_t pickup = minutes_between(anchor, *t.pickup_ts);
      const std::int64_t dropoff = minutes_between(anchor, *t.dropoff_ts);
      const geo::Point start =
          k == 0 ? t.origin : trips[idx[k - 1]].destination;
      alloc.run(s, accept, pickup, start, t.origin, SupplyStateKind::kEnroute);
      alloc.run(s, pickup, dropoff, t.origin, t.destination,
                SupplyStateKind::kTransporting);
      std::int64_t idle_end = dropoff + kIdleCutoffMinutes;
      if (k + 1 < idx.size()) {
        idle_end = minutes_between(anchor, trips[idx[k + 1]].accept_ts);
      }
      alloc.run(s, dropoff, idle_end, t.destination, t.destination,
                SupplyStateKind::kIdle);
    }
  }
}

SupplyField supply_accounting(const std::vector<TripEvent>& trips,
                              const geo::HexGrid& grid, Timestamp anchor) {
  const auto sessions = sessionize(trips);
  SupplyField field;
  walk_supply(trips, sessions, grid, anchor,
              [&](std::size_t, const geo::HexCell& c, std::int64_t hour,
                  SupplyStateKind st, double h) { field.add(c, hour, st, h); });
  return field;
}

std::string_view fit_status_name(FitStatus s) {
  switch (s) {
    case FitStatus::kFitted:
      return "fitted";
    case FitStatus::kTooFewObs:
      return "too_few_obs";
    case FitStatus::kCollinear:
      return "collinear";
  }
  return "";
}

ProductionParams fit_cobb_douglas(const MarketKey& market,
                                  const std::vector<MarketHourObs>& obs) {
  ProductionParams p;
  p.market = market;
  std::vector<const MarketHourObs*> use;
  use.reserve(obs.size());
  for (const auto& o : obs) {
    if (o.y > 0 && o.D > 0 && o.S > 0) {
      use.push_back(&o);
    } else {
      ++p.n_dropped;
    }
  }
  p.n_obs = static_cast<int>(use.size());
  if (use.size() < 10) {
    p.status = FitStatus::kTooFewObs;
    return p;
  }
  const Eigen::Index n = static_cast<Eigen::Index>(use.size());
  Eigen::MatrixXd X(n, 3);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    X(i, 0) = 1.0;
    X(i, 1) = std::log(use[i]->D);
    X(i, 2) = std::log(use[i]->S);
    y(i) = std::log(use[i]->y);
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  qr.setThreshold(1e-10);
  if (qr.rank() < 3) {
    p.status = FitStatus::kCollinear;
    return p;
  }
  const Eigen::VectorXd b = qr.solve(y);
  p.log_A = b(0);
  p.alpha = b(1);
  p.beta = b(2);
  const Eigen::VectorXd resid = y - X * b;
  const double ssr = resid.squaredNorm();
  const double sst = (y.array() - y.mean()).square().sum();
  p.r2 = sst > 0 ? 1.0 - ssr / sst : 1.0;
  p.status = FitStatus::kFitted;
  return p;
}

std::vector<ProductionParams> fit_all_markets(
    const std::vector<MarketKey>& keys, const std::vector<MarketHourObs>& obs) {
  std::vector<std::vector<MarketHourObs>> by_market(kNumMarkets);
  for (const auto& o : obs) by_market[market_index(o.market)].push_back(o);
  std::vector<ProductionParams> out;
  out.reserve(keys.size());
  for (const auto& k : keys) {
    out.push_back(fit_cobb_douglas(k, by_market[market_index(k)]));
  }
  return out;
}

void DemandField::add(const geo::HexCell& c, std::int64_t hour,
                      const DemandCounts& d) {
  auto& cell = cells_[hex_hour_key(c, hour)];
  cell.intents += d.intents;
  cell.requests += d.requests;
  cell.completes += d.completes;
}

const DemandCounts* DemandField::find(const geo::HexCell& c,
                                      std::int64_t hour) const {
  const auto it = cells_.find(hex_hour_key(c, hour));
  return it == cells_.end() ? nullptr : &it->second;
}

DemandField aggregate_demand(const std::vector<DemandRow>& rows,
                             const geo::HexGrid& source,
                             const geo::HexGrid& target) {
  DemandField field;
  std::unordered_map<geo::HexCell, geo::HexCell> parent;
  for (const auto& r : rows) {
    auto it = parent.find(r.hex);
    if (it == parent.end()) {
      it = parent.emplace(r.hex, target.cell_of(source.center(r.hex))).first;
    }
    field.add(it->second, r.hour_index, {r.intents, r.requests, r.completes});
  }
  return field;
}

std::vector<MarketHourObs> build_market_obs(const SupplyField& supply,
                                            const DemandField& demand,
                                            const AreaAssignment& areas,
                                            Timestamp anchor) {
  std::vector<std::uint64_t> keys;
  keys.reserve(supply.raw().size() + demand.raw().size());
  for (const auto& [k, v] : supply.raw()) keys.push_back(k);
  for (const auto& [k, v] : demand.raw()) {
    if (!supply.raw().count(k)) keys.push_back(k);
  }
  std::sort(keys.begin(), keys.end(), [](std::uint64_t a, std::uint64_t b) {
    const auto ha = hour_from_key(a);
    const auto hb = hour_from_key(b);
    if (ha != hb) return ha < hb;
    return hex_from_key(a) < hex_from_key(b);
  });
  std::vector<MarketHourObs> out;
  for (const auto k : keys) {
    const geo::HexCell hex = hex_from_key(k);
    if (!areas.contains(hex)) continue;
    const std::int64_t hour = hour_from_key(k);
    const auto market = market_of(areas, hex, hour, anchor);
    if (!market) continue;
    MarketHourObs o;
    o.market = *market;
    o.hex = hex;
    o.hour_index = hour;
    if (const auto* s = supply.find(hex, hour)) o.S = s->total();
    if (const auto* d = demand.find(hex, hour)) {
      o.y = static_cast<double>(d->completes);
      o.D = static_cast<double>(d->intents);
    }
    out.push_back(o);
  }
  return out;
}

}  // namespace ridepolicy::matchfn
