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

#include "ridepolicy/realloc.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <set>

#include "ridepolicy/errors.hpp"
#include "ridepolicy/io.hpp"

namespace ridepolicy::realloc {

using matchfn::hex_hour_key;

Slot slot_for_hour(int hour_of_day) {
  return matchfn::slot_of_hour(hour_of_day).value_or(Slot::kLateNight);
}

int day_of(std::int64_t hour_index, Timestamp anchor) {
  return day_of_week(anchor + std::chrono::minutes(hour_index * 60));
}

int hour_of(std::int64_t hour_index, Timestamp anchor) {
  return hour_of_day(anchor + std::chrono::minutes(hour_index * 60));
}

std::vector<ObservedSession> observe_sessions(const std::vector<TripEvent>& trips,
                                              const geo::HexGrid& grid, Timestamp anchor,
                                              std::int64_t first_hour, std::int64_t last_hour) {
  const auto all = sessionize(trips);
  std::vector<Session> picked;
  std::vector<ObservedSession> out;
  for (std::size_t s = 0; s < all.size(); ++s) {
    const TripEvent& first = trips[all[s].trips.front()];
    const auto h = hour_index(first.accept_ts, anchor);
    if (h < first_hour || h >= last_hour) continue;
    picked.push_back(all[s]);
    ObservedSession o;
    o.start.session_id = static_cast<std::int64_t>(s);
    o.start.driver_id = all[s].driver_id;
    o.start.hex = grid.cell_of(first.origin);
    o.start.start_hour = h;
    out.push_back(std::move(o));
  }
  matchfn::walk_supply(trips, picked, grid, anchor,
                       [&](std::size_t i, const geo::HexCell& c, std::int64_t hour,
                           matchfn::SupplyStateKind, double hours) {
                         auto& o = out[i];
                         const auto off = static_cast<std::size_t>(
                             std::max<std::int64_t>(0, hour - o.start.start_hour));
                         if (o.start.profile.size() <= off) o.start.profile.resize(off + 1, 0.0);
                         o.start.profile[off] += hours;
                         o.hex_hours[c] += hours;
                       });
  for (auto& o : out) {
    o.start.hours = 0.0;
    for (double h : o.start.profile) o.start.hours += h;
  }
  return out;
}

namespace {

struct Accum {
  std::map<geo::HexCell, double> sum;
  int n = 0;
  void add(const std::map<geo::HexCell, double>& hex_hours, double total) {
    for (const auto& [h, v] : hex_hours) sum[h] += v / total;
    ++n;
  }
  OutcomeDistribution finish(bool pooled) const {
    OutcomeDistribution d;
    d.n_sessions = n;
    d.pooled = pooled;
    double total = 0.0;
    for (const auto& [h, v] : sum) total += v;
    for (const auto& [h, v] : sum) d.shares.emplace_back(h, v / total);
    return d;
  }
};

}  // namespace

DistributionSet build_outcome_distributions(const std::vector<ObservedSession>& sessions,
                                            const matchfn::AreaAssignment& areas,
                                            Timestamp anchor, int min_sessions) {
  std::map<DistKey, Accum> keyed;
  std::map<std::tuple<int, int, Slot>, Accum> pooled;
  for (const auto& s : sessions) {
    if (s.start.hours <= 0) continue;
    const int day = day_of(s.start.start_hour, anchor);
    const Slot slot = slot_for_hour(hour_of(s.start.start_hour, anchor));
    keyed[{s.start.hex, day, slot}].add(s.hex_hours, s.start.hours);
    if (areas.contains(s.start.hex)) {
      pooled[{areas.area_of(s.start.hex), day, slot}].add(s.hex_hours, s.start.hours);
    }
  }
  DistributionSet set;
  set.areas = areas;
  set.min_sessions = min_sessions;
  for (const auto& [k, a] : keyed) set.by_key[k] = a.finish(false);
  for (const auto& [k, a] : pooled) set.pooled[k] = a.finish(true);
  return set;
}

OutcomeDistribution DistributionSet::lookup(const geo::HexCell& hex, int day, Slot slot) const {
  const auto it = by_key.find({hex, day, slot});
  if (it != by_key.end() && it->second.n_sessions >= min_sessions) return it->second;
  if (areas.contains(hex)) {
    const auto p = pooled.find({areas.area_of(hex), day, slot});
    if (p != pooled.end()) return p->second;
  }
  OutcomeDistribution point;
  point.shares = {{hex, 1.0}};
  return point;
}

ProductionModel::ProductionModel(matchfn::AreaAssignment areas, Timestamp anchor,
                                 const std::vector<matchfn::ProductionParams>& params)
    : areas_(std::move(areas)), anchor_(anchor) {
  for (const auto& p : params) {
    if (p.fitted()) params_[matchfn::market_index(p.market)] = p;
  }
}

std::optional<int> ProductionModel::market_index(const geo::HexCell& hex,
                                                 std::int64_t hour) const {
  if (!areas_.contains(hex)) return std::nullopt;
  const int h = hour_of(hour, anchor_);
  return matchfn::market_index({areas_.area_of(hex), slot_for_hour(h), day_of(hour, anchor_)});
}

const matchfn::ProductionParams* ProductionModel::params(int market) const {
  const auto& p = params_[market];
  return p ? &*p : nullptr;
}

namespace {

struct Coef {
  bool active = false;  // inside the areas with positive demand
  double c = 0.0;       // exp(log_A) D^alpha
  double beta = 0.0;
  double cap = 0.0;     // D
};

double produce(const Coef& k, double s) {
  if (!k.active || s <= 1e-12) return 0.0;
  return std::min(k.cap, k.c * std::pow(s, k.beta));
}

Coef coef_for(std::uint64_t key, const matchfn::DemandField& demand, const ProductionModel& model,
              std::set<int>* missing) {
  Coef k;
  const auto hex = matchfn::hex_from_key(key);
  const auto hour = matchfn::hour_from_key(key);
  const auto m = model.market_index(hex, hour);
  if (!m) return k;
  const auto* p = model.params(*m);
  if (!p) {
    if (missing) {
      missing->insert(*m);
      return k;
    }
    throw EstimationError("no production parameters for market " +
                          matchfn::market_label(matchfn::market_from_index(*m)));
  }
  const auto* d = demand.find(hex, hour);
  const double D = d ? static_cast<double>(d->intents) : 0.0;
  if (D <= 0) return k;
  k.active = true;
  k.c = std::exp(p->log_A) * std::pow(D, p->alpha);
  k.beta = p->beta;
  k.cap = D;
  return k;
}

}  // namespace

Prediction predict_rides(const SupplyMap& supply, const matchfn::DemandField& demand,
                         const ProductionModel& model) {
  std::vector<std::uint64_t> keys;
  keys.reserve(supply.size());
  for (const auto& [k, s] : supply) {
    if (s > 0) keys.push_back(k);
  }
  std::sort(keys.begin(), keys.end());
  std::set<int> missing;
  Prediction out;
  for (const auto k : keys) {
    if (!model.market_index(matchfn::hex_from_key(k), matchfn::hour_from_key(k))) continue;
    const Coef c = coef_for(k, demand, model, &missing);
    const double y = produce(c, supply.at(k));
    out.cells.emplace_back(k, y);
    out.total += y;
  }
  if (!missing.empty()) {
    std::string list;
    for (int m : missing) {
      list += (list.empty() ? "" : ", ") + matchfn::market_label(matchfn::market_from_index(m));
    }
    throw EstimationError("missing production parameters for markets: " + list);
  }
  return out;
}

SupplyMap observed_supply(const matchfn::SupplyField& field) {
  SupplyMap s;
  for (const auto& [k, h] : field.raw()) s[k] = h.total();
  return s;
}

namespace {

using Contribution = std::vector<std::pair<std::uint64_t, double>>;

Contribution contribution(const Instance& inst, std::size_t i, const Move& m, Timestamp anchor) {
  const auto& s = inst.sessions[i];
  const auto dist = inst.distributions.lookup(m.hex, day_of(m.start_hour, anchor),
                                              slot_for_hour(hour_of(m.start_hour, anchor)));
  Contribution c;
  c.reserve(s.profile.size() * dist.shares.size());
  for (std::size_t o = 0; o < s.profile.size(); ++o) {
    if (s.profile[o] <= 0) continue;
    for (const auto& [hex, share] : dist.shares) {
      c.emplace_back(hex_hour_key(hex, m.start_hour + static_cast<std::int64_t>(o)),
                     s.profile[o] * share);
    }
  }
  return c;
}

class Evaluator {
 public:
  Evaluator(const Instance& inst, const ProductionModel& model)
      : inst_(inst), model_(model), anchor_(model.anchor()) {
    current_ = baseline_plan(inst).moves;
    supply_ = plan_supply(inst, baseline_plan(inst), anchor_);
    total_ = predict_rides(supply_, inst.demand, model).total;
  }

  double total() const { return total_; }
  const Move& current(std::size_t i) const { return current_[i]; }

  Contribution contrib(std::size_t i, const Move& m) const {
    return contribution(inst_, i, m, anchor_);
  }

  // Change in predicted rides if session i moved from its current move to m.
  double gain(std::size_t i, const Move& m) {
    if (m == current_[i]) return 0.0;
    return delta(contrib(i, current_[i]), contrib(i, m));
  }

  void apply(std::size_t i, const Move& m, double g) {
    const auto out = contrib(i, current_[i]);
    const auto in = contrib(i, m);
    for (const auto& [k, h] : out) supply_[k] -= h;
    for (const auto& [k, h] : in) supply_[k] += h;
    current_[i] = m;
    total_ += g;
  }

 private:
  const Coef& coef(std::uint64_t key) {
    auto it = coef_.find(key);
    if (it == coef_.end()) it = coef_.emplace(key, coef_for(key, inst_.demand, model_, nullptr)).first;
    return it->second;
  }

  double delta(const Contribution& out, const Contribution& in) {
    change_.clear();
    for (const auto& [k, h] : out) change_[k] -= h;
    for (const auto& [k, h] : in) change_[k] += h;
    double d = 0.0;
    for (const auto& [k, dh] : change_) {
      const Coef& c = coef(k);
      if (!c.active) continue;
      const auto it = supply_.find(k);
      const double s = it == supply_.end() ? 0.0 : it->second;
      d += produce(c, s + dh) - produce(c, s);
    }
    return d;
  }

  const Instance& inst_;
  const ProductionModel& model_;
  Timestamp anchor_;
  std::vector<Move> current_;
  SupplyMap supply_;
  double total_ = 0.0;
  std::unordered_map<std::uint64_t, Coef> coef_;
  std::map<std::uint64_t, double> change_;
};

std::vector<Move> spatial_candidates(const SessionStart& s, int hops,
                                     const matchfn::AreaAssignment& areas) {
  std::vector<Move> out;
  for (const auto& h : geo::hex_ring(s.hex, hops)) {
    if (h != s.hex && !areas.contains(h)) continue;
    out.push_back({h, s.start_hour});
  }
  return out;
}

std::vector<Move> temporal_candidates(const SessionStart& s, Timestamp anchor) {
  std::vector<Move> out;
  const int h = hour_of(s.start_hour, anchor);
  if (h > 0) out.push_back({s.hex, s.start_hour - 1});
  out.push_back({s.hex, s.start_hour});
  if (h < 23) out.push_back({s.hex, s.start_hour + 1});
  return out;
}

// Best strictly improving candidate against the evaluator's current state;
// ties keep the current move, then the earliest candidate.
std::pair<double, Move> best_move(Evaluator& ev, std::size_t i, const std::vector<Move>& cands) {
  double best = 0.0;
  Move pick = ev.current(i);
  for (const auto& m : cands) {
    const double g = ev.gain(i, m);
    if (g > best) {
      best = g;
      pick = m;
    }
  }
  return {best, pick};
}

ReallocationPlan independent(const Instance& inst, const ProductionModel& model,
                             const std::string& name, int hops) {
  Evaluator ev(inst, model);
  ReallocationPlan plan = baseline_plan(inst);
  plan.heuristic = name;
  for (std::size_t i = 0; i < inst.sessions.size(); ++i) {
    const auto [g, m] = best_move(ev, i, spatial_candidates(inst.sessions[i], hops, model.areas()));
    plan.moves[i] = m;
    plan.one_at_a_time_gain += g;
  }
  return plan;
}

ReallocationPlan greedy(const Instance& inst, const ProductionModel& model,
                        const std::string& name, bool temporal) {
  Evaluator ev(inst, model);
  const Timestamp anchor = model.anchor();
  const auto n = inst.sessions.size();
  std::vector<std::vector<Move>> cands(n);
  for (std::size_t i = 0; i < n; ++i) {
    cands[i] = temporal ? temporal_candidates(inst.sessions[i], anchor)
                        : spatial_candidates(inst.sessions[i], 2, model.areas());
  }
  ReallocationPlan plan = baseline_plan(inst);
  plan.heuristic = name;
  plan.objective.push_back(ev.total());
  std::vector<bool> fixed(n, false);
  // Max-heap on (gain, lower index first). Stored gains may be stale: an
  // entry is re-evaluated when popped and accepted only if it still beats
  // the next stored gain.
  using Entry = std::pair<double, std::size_t>;
  auto cmp = [](const Entry& a, const Entry& b) {
    return a.first < b.first || (a.first == b.first && a.second > b.second);
  };
  std::priority_queue<Entry, std::vector<Entry>, decltype(cmp)> heap(cmp);
  auto refill = [&] {
    for (std::size_t i = 0; i < n; ++i) {
      if (fixed[i]) continue;
      const double g = best_move(ev, i, cands[i]).first;
      if (g > 0) heap.push({g, i});
    }
  };
  refill();
  while (!heap.empty()) {
    const auto [stale, i] = heap.top();
    heap.pop();
    if (fixed[i]) continue;
    const auto [g, m] = best_move(ev, i, cands[i]);
    if (g > 0 && (heap.empty() || g >= heap.top().first)) {
      ev.apply(i, m, g);
      plan.moves[i] = m;
      plan.one_at_a_time_gain += g;
      plan.objective.push_back(ev.total());
      fixed[i] = true;
    } else if (g > 0) {
      heap.push({g, i});
    }
    // Confirm the stopping rule against fresh gains.
    if (heap.empty()) refill();
  }
  return plan;
}

}  // namespace

ReallocationPlan baseline_plan(const Instance& inst) {
  ReallocationPlan p;
  p.heuristic = "baseline";
  for (const auto& s : inst.sessions) p.moves.push_back({s.hex, s.start_hour});
  return p;
}

int moved_sessions(const Instance& inst, const ReallocationPlan& plan) {
  int n = 0;
  for (std::size_t i = 0; i < plan.moves.size(); ++i) {
    const auto& s = inst.sessions[i];
    n += plan.moves[i] != Move{s.hex, s.start_hour};
  }
  return n;
}

SupplyMap plan_supply(const Instance& inst, const ReallocationPlan& plan, Timestamp anchor) {
  if (plan.moves.size() != inst.sessions.size()) {
    throw IntegrityError("plan does not cover every session");
  }
  SupplyMap s;
  for (std::size_t i = 0; i < plan.moves.size(); ++i) {
    for (const auto& [k, h] : contribution(inst, i, plan.moves[i], anchor)) s[k] += h;
  }
  return s;
}

ReallocationPlan heuristic_one_hop(const Instance& inst, const ProductionModel& model) {
  return independent(inst, model, "one_hop", 1);
}

ReallocationPlan heuristic_two_hop(const Instance& inst, const ProductionModel& model) {
  return independent(inst, model, "two_hop", 2);
}

ReallocationPlan heuristic_demand_weighted(const Instance& inst, const ProductionModel& model) {
  Evaluator ev(inst, model);
  ReallocationPlan plan = baseline_plan(inst);
  plan.heuristic = "demand_weighted";
  auto intents = [&](const geo::HexCell& h, std::int64_t hour) {
    const auto* d = inst.demand.find(h, hour);
    return d ? d->intents : 0;
  };
  for (std::size_t i = 0; i < inst.sessions.size(); ++i) {
    const auto& s = inst.sessions[i];
    Move pick{s.hex, s.start_hour};
    auto best = intents(s.hex, s.start_hour);
    for (const auto& m : spatial_candidates(s, 2, model.areas())) {
      const auto v = intents(m.hex, m.start_hour);
      if (v > best) {
        best = v;
        pick = m;
      }
    }
    plan.moves[i] = pick;
    plan.one_at_a_time_gain += ev.gain(i, pick);
  }
  return plan;
}

ReallocationPlan heuristic_greedy_spatial(const Instance& inst, const ProductionModel& model) {
  return greedy(inst, model, "greedy_spatial", false);
}

ReallocationPlan heuristic_greedy_temporal(const Instance& inst, const ProductionModel& model) {
  return greedy(inst, model, "greedy_temporal", true);
}

void check_plan(const Instance& inst, const ReallocationPlan& plan, Timestamp anchor) {
  if (plan.moves.size() != inst.sessions.size()) {
    throw IntegrityError(plan.heuristic + ": session count changed");
  }
  const bool temporal = plan.heuristic == "greedy_temporal";
  const int hops = plan.heuristic == "one_hop" ? 1 : 2;
  double before = 0.0;
  for (std::size_t i = 0; i < inst.sessions.size(); ++i) {
    const auto& s = inst.sessions[i];
    const auto& m = plan.moves[i];
    before += s.hours;
    if (temporal) {
      const auto d = m.start_hour - s.start_hour;
      if (m.hex != s.hex || d < -1 || d > 1 ||
          day_of(m.start_hour, anchor) != day_of(s.start_hour, anchor)) {
        throw IntegrityError(plan.heuristic + ": infeasible shift for session " +
                             std::to_string(s.session_id));
      }
    } else if (m.start_hour != s.start_hour || geo::hex_distance(m.hex, s.hex) > hops) {
      throw IntegrityError(plan.heuristic + ": infeasible move for session " +
                           std::to_string(s.session_id));
    }
  }
  double after = 0.0;
  for (const auto& [k, h] : plan_supply(inst, plan, anchor)) after += h;
  if (std::abs(after - before) > 1e-9 * std::max(1.0, before)) {
    throw IntegrityError(plan.heuristic + ": total hours not conserved");
  }
}

Comparison evaluate_plan(const Instance& inst, const ReallocationPlan& plan,
                         const ProductionModel& model, double baseline_total) {
  Comparison c;
  c.heuristic = plan.heuristic;
  c.predicted_total =
      predict_rides(plan_supply(inst, plan, model.anchor()), inst.demand, model).total;
  c.delta_vs_baseline = c.predicted_total - baseline_total;
  c.one_at_a_time_gain = plan.one_at_a_time_gain;
  c.moved = moved_sessions(inst, plan);
  return c;
}

void write_plan_csv(const std::filesystem::path& path, const Instance& inst,
                    const std::vector<ReallocationPlan>& plans) {
  io::CsvWriter w(path, {"session_id", "old_hex", "new_hex", "old_hour", "new_hour", "heuristic"});
  for (const auto& p : plans) {
    for (std::size_t i = 0; i < p.moves.size(); ++i) {
      const auto& s = inst.sessions[i];
      const auto& m = p.moves[i];
      w.row({std::to_string(s.session_id), geo::hex_label(s.hex), geo::hex_label(m.hex),
             std::to_string(s.start_hour), std::to_string(m.start_hour), p.heuristic});
    }
  }
  w.close();
}

void write_comparison_csv(const std::filesystem::path& path,
                          const std::vector<Comparison>& rows) {
  io::CsvWriter w(path, {"heuristic", "predicted_total", "delta_vs_baseline",
                         "one_at_a_time_gain", "moved_sessions"});
  for (const auto& r : rows) {
    w.row({r.heuristic, io::fmt_double(r.predicted_total), io::fmt_double(r.delta_vs_baseline),
           io::fmt_double(r.one_at_a_time_gain), std::to_string(r.moved)});
  }
  w.close();
}

}  // namespace ridepolicy::realloc
