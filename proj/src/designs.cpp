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

#include "ridepolicy/designs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ridepolicy/errors.hpp"

namespace ridepolicy::causal {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  return a / b - ((a % b != 0) && ((a < 0) != (b < 0)));
}

double transform_value(double v, OutcomeTransform t) {
  switch (t) {
    case OutcomeTransform::kLevel:
      return v;
    case OutcomeTransform::kLog:
      return v > 0 ? std::log(v) : kNaN;
    case OutcomeTransform::kLog1p:
      return v > -1 ? std::log1p(v) : kNaN;
  }
  return v;
}

bool in_pre_period(const TripEvent& t, Timestamp anchor, int first_week) {
  const int w = week_offset(t.accept_ts, anchor);
  return w >= first_week && w < 0;
}

}  // namespace

double pct_effect(double coefficient) { return 100.0 * std::expm1(coefficient); }

std::set<std::int64_t> model1_sample(const std::vector<TripEvent>& trips,
                                     const geo::ConvexPolygon& market, Timestamp anchor,
                                     int first_week, double buffer_km) {
  std::map<std::int64_t, std::vector<geo::Point>> pickups;
  std::set<std::int64_t> inside;
  for (const auto& t : trips) {
    if (t.cancelled || !in_pre_period(t, anchor, first_week)) continue;
    pickups[t.driver_id].push_back(t.origin);
    if (market.contains(t.origin) || market.contains(t.destination)) inside.insert(t.driver_id);
  }
  std::set<std::int64_t> out;
  for (auto& [driver, pts] : pickups) {
    if (!inside.count(driver)) continue;
    if (geo::hull_within_buffer(geo::convex_hull(std::move(pts)), market, buffer_km)) {
      out.insert(driver);
    }
  }
  return out;
}

BorderWeek border_sample(const std::vector<TripEvent>& trips,
                         const geo::ConvexPolygon& market, Timestamp anchor, int week,
                         double band_km) {
  BorderWeek bw;
  bw.week = week;
  std::set<std::int64_t> outer, entered;
  for (const auto& t : trips) {
    if (t.cancelled || !t.dropoff_ts || week_offset(*t.dropoff_ts, anchor) != week) continue;
    const double d = market.signed_distance(t.destination);
    if (d <= 0) {
      entered.insert(t.driver_id);
      if (d >= -band_km) bw.treated.insert(t.driver_id);
    } else if (d <= band_km) {
      outer.insert(t.driver_id);
    }
  }
  for (auto id : outer) {
    if (!entered.count(id)) bw.control.insert(id);
  }
  return bw;
}

std::vector<BorderWeek> border_samples(const std::vector<TripEvent>& trips,
                                       const geo::ConvexPolygon& market, Timestamp anchor,
                                       int first_post_week, int last_post_week,
                                       double band_km) {
  std::vector<BorderWeek> out;
  for (int w = first_post_week; w <= last_post_week; ++w) {
    out.push_back(border_sample(trips, market, anchor, w, band_km));
  }
  return out;
}

BorderUnits border_units(const std::vector<BorderWeek>& weeks,
                         const std::vector<panel::CohortAssignment>& cohorts) {
  std::map<int, const BorderWeek*> by_week;
  for (const auto& w : weeks) by_week[w.week] = &w;
  BorderUnits u;
  for (const auto& c : cohorts) {
    if (!c.cohort) continue;
    const auto it = by_week.find(*c.cohort);
    if (it != by_week.end() && it->second->treated.count(c.driver_id)) {
      u.treated.insert(c.driver_id);
    }
  }
  for (const auto& w : weeks) {
    for (auto id : w.control) {
      if (!u.treated.count(id)) u.control.insert(id);
    }
  }
  return u;
}

CaliperMatch caliper_match(const UnitPanel& p, const std::vector<std::size_t>& treated,
                           const std::vector<std::size_t>& controls, double caliper_sd) {
  CaliperMatch m;
  const auto k = p.x.cols();
  std::vector<std::size_t> all(treated);
  all.insert(all.end(), controls.begin(), controls.end());
  Eigen::VectorXd sd = Eigen::VectorXd::Ones(k);
  for (Eigen::Index j = 0; j < k; ++j) {
    double s = 0.0, ss = 0.0;
    for (auto i : all) s += p.x(static_cast<Eigen::Index>(i), j);
    const double mean = s / static_cast<double>(all.size());
    for (auto i : all) ss += std::pow(p.x(static_cast<Eigen::Index>(i), j) - mean, 2);
    const double v = std::sqrt(ss / std::max<double>(1.0, static_cast<double>(all.size()) - 1));
    if (v > 1e-12) sd(j) = v;
  }
  std::set<std::size_t> keep, used;
  for (auto t : treated) {
    const Eigen::RowVectorXd xt = p.x.row(static_cast<Eigen::Index>(t)).array() / sd.transpose().array();
    double best = std::numeric_limits<double>::infinity();
    std::optional<std::size_t> pick;
    for (auto c : controls) {
      const Eigen::RowVectorXd diff =
          p.x.row(static_cast<Eigen::Index>(c)).array() / sd.transpose().array() - xt.array();
      if (diff.cwiseAbs().maxCoeff() >= caliper_sd) continue;
      const double d = diff.squaredNorm();
      if (d < best) {
        best = d;
        pick = c;
      }
    }
    if (pick) {
      keep.insert(t);
      used.insert(*pick);
      ++m.n_treated_matched;
    } else {
      ++m.n_treated_unmatched;
    }
  }
  m.n_controls_used = static_cast<int>(used.size());
  keep.insert(used.begin(), used.end());
  m.keep.assign(keep.begin(), keep.end());
  return m;
}

std::map<std::int64_t, std::vector<double>> pre_period_means(
    const std::vector<panel::DriverWeekRecord>& rows,
    const std::vector<std::string>& covariates) {
  std::map<std::int64_t, std::vector<double>> sum;
  std::map<std::int64_t, int> n;
  for (const auto& r : rows) {
    if (r.week >= 0) continue;
    auto& s = sum[r.driver_id];
    s.resize(covariates.size(), 0.0);
    for (std::size_t k = 0; k < covariates.size(); ++k) {
      s[k] += panel::outcome_value(r, covariates[k]);
    }
    ++n[r.driver_id];
  }
  for (auto& [id, s] : sum) {
    for (auto& v : s) v /= n[id];
  }
  return sum;
}

CrossYearMatch match_across_years(const std::vector<panel::DriverWeekRecord>& current,
                                  const std::vector<panel::DriverWeekRecord>& prior,
                                  const std::vector<std::string>& covariates,
                                  double threshold_sd) {
  // Active = at least one trip in a pre week and in a post week.
  auto activity = [](const std::vector<panel::DriverWeekRecord>& rows) {
    std::map<std::int64_t, std::pair<bool, bool>> a;
    for (const auto& r : rows) {
      if (r.num_trip <= 0) continue;
      auto& x = a[r.driver_id];
      (r.week < 0 ? x.first : x.second) = true;
    }
    return a;
  };
  const auto act_cur = activity(current);
  const auto act_pri = activity(prior);
  std::set<std::int64_t> treated;
  for (const auto& r : current) {
    if (r.cohort) treated.insert(r.driver_id);
  }
  CrossYearMatch m;
  m.covariate_names = covariates;
  for (auto id : treated) {
    const auto a = act_cur.find(id);
    const auto b = act_pri.find(id);
    if (a == act_cur.end() || b == act_pri.end()) continue;
    if (a->second.first && a->second.second && b->second.first && b->second.second) {
      m.eligible.push_back(id);
    }
  }
  if (m.eligible.empty()) throw EstimationError("Model 3: no driver active in both years");
  const auto cur = pre_period_means(current, covariates);
  const auto pri = pre_period_means(prior, covariates);
  const auto n = static_cast<Eigen::Index>(m.eligible.size());
  const auto k = static_cast<Eigen::Index>(covariates.size());
  Eigen::MatrixXd xc(n, k), xp(n, k);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) {
      xc(i, j) = cur.at(m.eligible[i])[j];
      xp(i, j) = pri.at(m.eligible[i])[j];
    }
  }
  m.pooled_sd.resize(k);
  for (Eigen::Index j = 0; j < k; ++j) {
    Eigen::VectorXd both(2 * n);
    both << xc.col(j), xp.col(j);
    const double mean = both.mean();
    m.pooled_sd(j) = std::sqrt((both.array() - mean).square().sum() /
                               std::max<double>(1.0, static_cast<double>(2 * n - 1)));
  }
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < n; ++i) {
    bool ok = true;
    for (Eigen::Index j = 0; j < k && ok; ++j) {
      const double d = std::abs(xc(i, j) - xp(i, j));
      ok = m.pooled_sd(j) > 0 ? d / m.pooled_sd(j) < threshold_sd : d == 0.0;
    }
    if (ok) {
      keep.push_back(i);
      m.retained.push_back(m.eligible[i]);
    }
  }
  if (m.retained.empty()) throw EstimationError("Model 3: empty matched set");

  auto stacked = [&](const std::vector<Eigen::Index>& idx) {
    const auto r = static_cast<Eigen::Index>(idx.size());
    Eigen::MatrixXd X(2 * r, k);
    for (Eigen::Index i = 0; i < r; ++i) {
      X.row(i) = xc.row(idx[i]);
      X.row(r + i) = xp.row(idx[i]);
    }
    std::vector<int> label(static_cast<std::size_t>(2 * r), 0);
    std::fill(label.begin(), label.begin() + r, 1);
    return std::make_pair(X, label);
  };
  std::vector<Eigen::Index> all(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) all[i] = i;
  const auto [xa, la] = stacked(all);
  const auto [xr, lr] = stacked(keep);
  try {
    m.year_model = fit_propensity(xr, lr, covariates);
  } catch (const EstimationError&) {
    // Identical covariates in both years leave nothing to fit.
    m.year_model = PropensityModel{};
  }
  const auto pre = balance_diagnostics(xa, Eigen::VectorXd::Ones(xa.rows()), la, covariates);
  const auto post = balance_diagnostics(xr, Eigen::VectorXd::Ones(xr.rows()), lr, covariates);
  for (std::size_t j = 0; j < pre.size(); ++j) {
    BalanceRow b = pre[j];
    b.smd_post = post[j].smd_pre;
    b.constant = pre[j].constant && post[j].constant;
    m.balance.push_back(b);
  }
  std::string bad;
  for (const auto& b : m.balance) {
    if (std::abs(b.smd_post) >= 0.1) bad += (bad.empty() ? "" : ", ") + b.name;
  }
  if (!bad.empty()) m.warning = "post-match SMD >= 0.1 on: " + bad;
  return m;
}

std::vector<panel::DriverWeekRecord> relabel_cohorts(
    std::vector<panel::DriverWeekRecord> rows,
    const std::map<std::int64_t, std::optional<int>>& cohorts) {
  for (auto& r : rows) {
    const auto it = cohorts.find(r.driver_id);
    r.cohort = it == cohorts.end() ? std::nullopt : it->second;
    r.enter_treatment = r.cohort && r.week >= *r.cohort ? 1 : 0;
  }
  return rows;
}

UnitPanel stack_two_year(const UnitPanel& current, const UnitPanel& prior,
                         const std::vector<std::int64_t>& retained) {
  if (current.first_week != prior.first_week || current.n_weeks() != prior.n_weeks()) {
    throw IntegrityError("two-year panels cover different weeks");
  }
  std::map<std::int64_t, std::size_t> ci, pi;
  for (std::size_t i = 0; i < current.n_units(); ++i) ci[current.unit_ids[i]] = i;
  for (std::size_t i = 0; i < prior.n_units(); ++i) pi[prior.unit_ids[i]] = i;
  std::vector<std::size_t> kc, kp;
  for (auto id : retained) {
    const auto a = ci.find(id);
    const auto b = pi.find(id);
    if (a == ci.end() || b == pi.end()) {
      throw IntegrityError("driver " + std::to_string(id) + " missing from a year's panel");
    }
    kc.push_back(a->second);
    kp.push_back(b->second);
  }
  UnitPanel s = subset_units(current, kc);
  const UnitPanel p = subset_units(prior, kp);
  const auto r = static_cast<Eigen::Index>(retained.size());
  s.y.conservativeResize(2 * r, Eigen::NoChange);
  s.x.conservativeResize(2 * r, Eigen::NoChange);
  s.y.bottomRows(r) = p.y;
  s.x.bottomRows(r) = p.x;
  for (auto id : p.unit_ids) {
    s.unit_ids.push_back(-(id + 1));
    s.cohort.push_back(std::nullopt);
  }
  s.excluded += p.excluded;
  return s;
}

std::vector<TwoYearObs> model4_observations(
    const std::vector<panel::DriverWeekRecord>& current,
    const std::vector<panel::DriverWeekRecord>& prior,
    const std::set<std::int64_t>& drivers, const std::string& outcome,
    OutcomeTransform transform,
    const std::map<std::int64_t, std::vector<double>>& demand_current,
    const std::map<std::int64_t, std::vector<double>>& demand_prior, int first_week) {
  std::set<std::int64_t> cohort0;
  for (const auto& r : current) {
    if (r.cohort && *r.cohort == 0 && drivers.count(r.driver_id)) cohort0.insert(r.driver_id);
  }
  std::vector<TwoYearObs> out;
  auto add = [&](const std::vector<panel::DriverWeekRecord>& rows, int treated_y,
                 const std::map<std::int64_t, std::vector<double>>& demand) {
    for (const auto& r : rows) {
      if (!cohort0.count(r.driver_id)) continue;
      const double y = transform_value(panel::outcome_value(r, outcome), transform);
      if (!std::isfinite(y)) continue;
      double d = 0.0;
      const auto it = demand.find(r.driver_id);
      const auto w = static_cast<std::size_t>(r.week - first_week);
      if (it != demand.end() && w < it->second.size()) d = it->second[w];
      out.push_back({r.driver_id, r.week, treated_y, r.week >= 0 ? 1 : 0, y, std::log1p(d)});
    }
  };
  add(prior, 0, demand_prior);
  add(current, 1, demand_current);
  return out;
}

std::set<std::int64_t> all_pre_trips_inside(const std::vector<TripEvent>& trips,
                                            const geo::ConvexPolygon& market,
                                            Timestamp anchor, int first_week) {
  std::set<std::int64_t> seen, outside;
  for (const auto& t : trips) {
    if (t.cancelled || !in_pre_period(t, anchor, first_week)) continue;
    seen.insert(t.driver_id);
    if (!market.contains(t.origin) || !market.contains(t.destination)) {
      outside.insert(t.driver_id);
    }
  }
  std::set<std::int64_t> out;
  for (auto id : seen) {
    if (!outside.count(id)) out.insert(id);
  }
  return out;
}

std::map<geo::HexCell, std::vector<double>> zone_intent_series(
    const std::vector<DemandRow>& demand, const geo::HexGrid& demand_grid,
    const geo::HexGrid& zone_grid, int first_week, int last_week) {
  const auto nw = static_cast<std::size_t>(last_week - first_week + 1);
  std::map<geo::HexCell, geo::HexCell> zone_of;
  std::map<geo::HexCell, std::vector<double>> out;
  for (const auto& d : demand) {
    const int w = static_cast<int>(floor_div(d.hour_index, 168));
    if (w < first_week || w > last_week) continue;
    auto it = zone_of.find(d.hex);
    if (it == zone_of.end()) {
      it = zone_of.emplace(d.hex, zone_grid.cell_of(demand_grid.center(d.hex))).first;
    }
    auto& s = out[it->second];
    s.resize(nw, 0.0);
    s[static_cast<std::size_t>(w - first_week)] += static_cast<double>(d.intents);
  }
  return out;
}

std::map<std::int64_t, std::vector<double>> driver_demand_exposure(
    const std::vector<TripEvent>& trips, const std::vector<DemandRow>& demand,
    const geo::HexGrid& demand_grid, const geo::HexGrid& zone_grid, Timestamp anchor,
    int first_week, int last_week) {
  const auto series = zone_intent_series(demand, demand_grid, zone_grid, first_week, last_week);
  const auto shares = driver_zone_shares(trips, zone_grid, anchor, first_week);
  std::map<std::int64_t, std::vector<double>> out;
  for (const auto& [id, s] : shares.shares) {
    out[id] = exposure_weighted_demand(s, series, last_week - first_week + 1);
  }
  return out;
}

}  // namespace ridepolicy::causal
