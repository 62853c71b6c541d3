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

#ifndef RIDEPOLICY_REALLOC_HPP_
#define RIDEPOLICY_REALLOC_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <unordered_map>
#include <utility>
#include <vector>

#include "ridepolicy/geo.hpp"
#include "ridepolicy/matchfn.hpp"
#include "ridepolicy/timeutil.hpp"
#include "ridepolicy/trip.hpp"

namespace ridepolicy::realloc {

using matchfn::Slot;

// Slot of an hour of day; hours outside every slot (0-7) count as late night.
Slot slot_for_hour(int hour_of_day);

struct SessionStart {
  std::int64_t session_id = 0;
  std::int64_t driver_id = 0;
  geo::HexCell hex;
  std::int64_t start_hour = 0;  // hour index from the anchor
  // Supply hours by hour offset from start_hour; sums to `hours`.
  std::vector<double> profile;
  double hours = 0.0;
};

int day_of(std::int64_t hour_index, Timestamp anchor);
int hour_of(std::int64_t hour_index, Timestamp anchor);

struct ObservedSession {
  SessionStart start;
  std::map<geo::HexCell, double> hex_hours;  // observed supply by hex
};

// Sessions (see sessionize) whose first accept falls in [first_hour,
// last_hour), with supply walked on `grid`. Start hex = first pickup cell.
std::vector<ObservedSession> observe_sessions(const std::vector<TripEvent>& trips,
                                              const geo::HexGrid& grid, Timestamp anchor,
                                              std::int64_t first_hour, std::int64_t last_hour);

struct OutcomeDistribution {
  std::vector<std::pair<geo::HexCell, double>> shares;  // sorted by hex
  int n_sessions = 0;
  bool pooled = false;
  std::size_t support() const { return shares.size(); }
};

struct DistKey {
  geo::HexCell hex;
  int day = 0;
  Slot slot = Slot::kMorningPeak;
  friend auto operator<=>(const DistKey&, const DistKey&) = default;
};

class DistributionSet {
 public:
  // Key distribution when it has at least min_sessions sessions, else the
  // pooled distribution of the hex's area, else a point mass on the hex.
  OutcomeDistribution lookup(const geo::HexCell& hex, int day, Slot slot) const;

  std::map<DistKey, OutcomeDistribution> by_key;
  std::map<std::tuple<int, int, Slot>, OutcomeDistribution> pooled;  // (area, day, slot)
  matchfn::AreaAssignment areas;
  int min_sessions = 5;
};

DistributionSet build_outcome_distributions(const std::vector<ObservedSession>& sessions,
                                            const matchfn::AreaAssignment& areas,
                                            Timestamp anchor, int min_sessions = 5);

class ProductionModel {
 public:
  ProductionModel(matchfn::AreaAssignment areas, Timestamp anchor,
                  const std::vector<matchfn::ProductionParams>& params);

  // nullopt for hexes outside the area assignment.
  std::optional<int> market_index(const geo::HexCell& hex, std::int64_t hour) const;
  const matchfn::ProductionParams* params(int market) const;
  const matchfn::AreaAssignment& areas() const { return areas_; }
  Timestamp anchor() const { return anchor_; }

 private:
  matchfn::AreaAssignment areas_;
  Timestamp anchor_;
  std::array<std::optional<matchfn::ProductionParams>, matchfn::kNumMarkets> params_;
};

// Supply hours per hex_hour_key.
using SupplyMap = std::unordered_map<std::uint64_t, double>;

struct Prediction {
  double total = 0.0;
  // (hex_hour_key, predicted rides), sorted by key; cells with S > 0 only.
  std::vector<std::pair<std::uint64_t, double>> cells;
};

// y = min(D, exp(log_A) D^alpha S^beta) per hex-hour, D = intents. Cells
// outside the area assignment are skipped. Throws EstimationError listing
// every touched market without fitted parameters.
Prediction predict_rides(const SupplyMap& supply, const matchfn::DemandField& demand,
                         const ProductionModel& model);

SupplyMap observed_supply(const matchfn::SupplyField& field);

struct Move {
  geo::HexCell hex;
  std::int64_t start_hour = 0;
  friend bool operator==(const Move&, const Move&) = default;
};

struct ReallocationPlan {
  std::string heuristic;
  std::vector<Move> moves;  // one per session, same order as the instance
  // Greedy only: predicted total after each accepted move, baseline first.
  std::vector<double> objective;
  // Sum of each session's own gain against the baseline.
  double one_at_a_time_gain = 0.0;
};

struct Instance {
  std::vector<SessionStart> sessions;
  DistributionSet distributions;
  matchfn::DemandField demand;
};

ReallocationPlan baseline_plan(const Instance& inst);
int moved_sessions(const Instance& inst, const ReallocationPlan& plan);

// Modelled supply: every session's profile spread by the distribution of its
// planned (hex, slot).
SupplyMap plan_supply(const Instance& inst, const ReallocationPlan& plan,
                      Timestamp anchor);

ReallocationPlan heuristic_one_hop(const Instance& inst, const ProductionModel& model);
ReallocationPlan heuristic_two_hop(const Instance& inst, const ProductionModel& model);
ReallocationPlan heuristic_demand_weighted(const Instance& inst, const ProductionModel& model);
ReallocationPlan heuristic_greedy_spatial(const Instance& inst, const ProductionModel& model);
ReallocationPlan heuristic_greedy_temporal(const Instance& inst, const ProductionModel& model);

// Throws IntegrityError on a conservation or feasibility violation.
void check_plan(const Instance& inst, const ReallocationPlan& plan, Timestamp anchor);

struct Comparison {
  std::string heuristic;
  double predicted_total = 0.0;
  double delta_vs_baseline = 0.0;
  double one_at_a_time_gain = 0.0;
  int moved = 0;
};

Comparison evaluate_plan(const Instance& inst, const ReallocationPlan& plan,
                         const ProductionModel& model, double baseline_total);

void write_plan_csv(const std::filesystem::path& path, const Instance& inst,
                    const std::vector<ReallocationPlan>& plans);
void write_comparison_csv(const std::filesystem::path& path,
                          const std::vector<Comparison>& rows);

}  // namespace ridepolicy::realloc

#endif  // RIDEPOLICY_REALLOC_HPP_
