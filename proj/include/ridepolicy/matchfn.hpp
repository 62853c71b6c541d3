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

#ifndef RIDEPOLICY_MATCHFN_HPP_
#define RIDEPOLICY_MATCHFN_HPP_

#include <array>
#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ridepolicy/geo.hpp"
#include "ridepolicy/timeutil.hpp"
#include "ridepolicy/trip.hpp"

namespace ridepolicy::matchfn {

enum class Slot { kMorningPeak, kMidday, kEveningPeak, kOffPeak, kLateNight };
inline constexpr int kNumSlots = 5;
inline constexpr int kNumAreas = 15;
inline constexpr int kNumDays = 7;
inline constexpr int kNumMarkets = kNumAreas * kNumSlots * kNumDays;

std::string_view slot_name(Slot s);
Slot parse_slot(std::string_view s);
std::string_view day_name(int day);  // 0 = Mon
int parse_day(std::string_view s);

// 7-9 morning peak, 9-17 midday, 17-20 evening peak, 20-21 off peak,
// 21-24 late night; hours 0-7 have no slot.
std::optional<Slot> slot_of_hour(int hour_of_day);

struct MarketKey {
  int area = 1;  // 1..15
  Slot slot = Slot::kMorningPeak;
  int day = 0;   // 0 = Mon

  friend bool operator==(const MarketKey&, const MarketKey&) = default;
  friend auto operator<=>(const MarketKey&, const MarketKey&) = default;
};

int market_index(const MarketKey& k);  // 0..524
MarketKey market_from_index(int index);
std::string market_label(const MarketKey& k);

// Maps production-grid cells to the 15 areas.
class AreaAssignment {
 public:
  AreaAssignment() = default;
  explicit AreaAssignment(std::map<geo::HexCell, int> areas);

  // Five equal-count columns by x, each split into three equal-count groups
  // by y. Needs at least 15 cells.
  static AreaAssignment partition(const std::vector<geo::HexCell>& cells,
                                  const geo::HexGrid& grid);

  // Throws std::out_of_range for an unassigned hex.
  int area_of(const geo::HexCell& c) const;
  bool contains(const geo::HexCell& c) const { return areas_.count(c) > 0; }
  const std::map<geo::HexCell, int>& cells() const { return areas_; }

 private:
  std::map<geo::HexCell, int> areas_;
};

// Hex-hour to market. Hours outside every slot give nullopt.
std::optional<MarketKey> market_of(const AreaAssignment& areas,
                                   const geo::HexCell& hex,
                                   std::int64_t hour_index, Timestamp anchor);

// All 525 keys present in an assignment; throws if an area is empty.
std::vector<MarketKey> define_markets(const AreaAssignment& areas);

enum class SupplyStateKind { kIdle, kEnroute, kTransporting };

struct SupplyHours {
  double idle_h = 0.0;
  double enroute_h = 0.0;
  double transporting_h = 0.0;
  double total() const { return idle_h + enroute_h + transporting_h; }
  void add(SupplyStateKind s, double h);
};

struct SupplyState {
  geo::HexCell hex;
  std::int64_t hour_index = 0;
  SupplyHours hours;
};

std::uint64_t hex_hour_key(const geo::HexCell& c, std::int64_t hour_index);
geo::HexCell hex_from_key(std::uint64_t key);
std::int64_t hour_from_key(std::uint64_t key);

class SupplyField {
 public:
  void add(const geo::HexCell& c, std::int64_t hour, SupplyStateKind s,
           double h);
  double total(const geo::HexCell& c, std::int64_t hour) const;
  const SupplyHours* find(const geo::HexCell& c, std::int64_t hour) const;
  // Sorted by (hour, hex).
  std::vector<SupplyState> rows() const;
  const std::unordered_map<std::uint64_t, SupplyHours>& raw() const {
    return cells_;
  }

 private:
  std::unordered_map<std::uint64_t, SupplyHours> cells_;
};

// Callback receives (session ordinal, hex, hour index, state, hours).
using SupplySink = std::function<void(std::size_t, const geo::HexCell&,
                                      std::int64_t, SupplyStateKind, double)>;

// Walks every session (see sessionize) and allocates time by minute:
// en route along the straight segment from the driver's previous dropoff
// (or the pickup point for a session's first trip), transporting along
// origin -> destination, idle in the dropoff hex until the next accept, and
// 2 h of terminal idle after a session's last dropoff.
void walk_supply(const std::vector<TripEvent>& trips,
                 const std::vector<Session>& sessions, const geo::HexGrid& grid,
                 Timestamp anchor, const SupplySink& sink);

SupplyField supply_accounting(const std::vector<TripEvent>& trips,
                              const geo::HexGrid& grid, Timestamp anchor);

struct MarketHourObs {
  MarketKey market;
  geo::HexCell hex;
  std::int64_t hour_index = 0;
  double y = 0.0;
  double D = 0.0;
  double S = 0.0;
};

enum class FitStatus { kFitted, kTooFewObs, kCollinear };
std::string_view fit_status_name(FitStatus s);

struct ProductionParams {
  MarketKey market;
  double log_A = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double r2 = 0.0;
  int n_obs = 0;
  int n_dropped = 0;
  FitStatus status = FitStatus::kTooFewObs;

  bool fitted() const { return status == FitStatus::kFitted; }
  double returns_to_scale() const { return alpha + beta; }
};

// OLS of log y on (1, log D, log S); zero rows dropped.
ProductionParams fit_cobb_douglas(const MarketKey& market,
                                  const std::vector<MarketHourObs>& obs);

// Fits every key; markets with no observations come back kTooFewObs.
std::vector<ProductionParams> fit_all_markets(
    const std::vector<MarketKey>& keys, const std::vector<MarketHourObs>& obs);

struct DemandCounts {
  std::int64_t intents = 0;
  std::int64_t requests = 0;
  std::int64_t completes = 0;
};

class DemandField {
 public:
  void add(const geo::HexCell& c, std::int64_t hour, const DemandCounts& d);
  const DemandCounts* find(const geo::HexCell& c, std::int64_t hour) const;
  const std::unordered_map<std::uint64_t, DemandCounts>& raw() const {
    return cells_;
  }

 private:
  std::unordered_map<std::uint64_t, DemandCounts> cells_;
};

// Re-bins demand rows from their own grid onto `target` by cell centre.
DemandField aggregate_demand(const std::vector<DemandRow>& rows,
                             const geo::HexGrid& source,
                             const geo::HexGrid& target);

// One observation per production cell-hour inside a slot, for cells that
// have supply or demand. Cells outside the area assignment are skipped.
std::vector<MarketHourObs> build_market_obs(const SupplyField& supply,
                                            const DemandField& demand,
                                            const AreaAssignment& areas,
                                            Timestamp anchor);

}  // namespace ridepolicy::matchfn

#endif  // RIDEPOLICY_MATCHFN_HPP_
