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

#include "ridepolicy/twfe.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

#include "ridepolicy/errors.hpp"

namespace ridepolicy::causal {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<int> dense_ids(const std::vector<int>& ids, int* count) {
  std::unordered_map<int, int> map;
  std::vector<int> out(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    out[i] = map.emplace(ids[i], static_cast<int>(map.size())).first->second;
  }
  *count = static_cast<int>(map.size());
  return out;
}

void demean_once(Eigen::Ref<Eigen::VectorXd> v, const std::vector<int>& g, int ng,
                 std::vector<double>& sum, const std::vector<double>& cnt) {
  std::fill(sum.begin(), sum.begin() + ng, 0.0);
  for (Eigen::Index i = 0; i < v.size(); ++i) sum[g[i]] += v(i);
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) -= sum[g[i]] / cnt[g[i]];
}

// Alternating projections until the largest update is negligible.
void demean(Eigen::Ref<Eigen::VectorXd> v, const std::vector<int>& g1, int n1,
            const std::vector<double>& c1, const std::vector<int>& g2, int n2,
            const std::vector<double>& c2) {
  std::vector<double> sum(static_cast<std::size_t>(std::max(n1, n2)));
  const double scale = std::max(1.0, v.cwiseAbs().maxCoeff());
  for (int it = 0; it < 10000; ++it) {
    Eigen::VectorXd before = v;
    demean_once(v, g1, n1, sum, c1);
    demean_once(v, g2, n2, sum, c2);
    if ((v - before).cwiseAbs().maxCoeff() < 1e-14 * scale) return;
  }
}

}  // namespace

FeOlsResult fe_ols(const Eigen::VectorXd& y, const Eigen::MatrixXd& X,
                   const std::vector<std::string>& names, const std::vector<int>& fe1,
                   const std::vector<int>& fe2, const std::vector<int>& cluster,
                   bool allow_absorbed) {
  const Eigen::Index n = y.size();
  if (X.rows() != n || static_cast<Eigen::Index>(fe1.size()) != n ||
      static_cast<Eigen::Index>(fe2.size()) != n ||
      static_cast<Eigen::Index>(cluster.size()) != n) {
    throw std::invalid_argument("fe_ols: size mismatch");
  }
  if (n == 0) throw EstimationError("fe_ols: no observations");
  int n1 = 0, n2 = 0, ng = 0;
  const auto g1 = dense_ids(fe1, &n1);
  const auto g2 = dense_ids(fe2, &n2);
  const auto gc = dense_ids(cluster, &ng);
  std::vector<double> c1(n1, 0.0), c2(n2, 0.0);
  for (Eigen::Index i = 0; i < n; ++i) {
    c1[g1[i]] += 1;
    c2[g2[i]] += 1;
  }
  Eigen::VectorXd yd = y;
  demean(yd, g1, n1, c1, g2, n2, c2);
  Eigen::MatrixXd Xd = X;
  for (Eigen::Index j = 0; j < X.cols(); ++j) demean(Xd.col(j), g1, n1, c1, g2, n2, c2);

  FeOlsResult r;
  r.names = names;
  r.n_obs = static_cast<int>(n);
  r.n_clusters = ng;
  r.coef = Eigen::VectorXd::Constant(X.cols(), kNaN);
  r.se = Eigen::VectorXd::Constant(X.cols(), kNaN);
  r.identified.assign(static_cast<std::size_t>(X.cols()), false);
  auto name_of = [&](Eigen::Index j) {
    return j < static_cast<Eigen::Index>(names.size()) ? names[j] : "x" + std::to_string(j);
  };

  std::vector<Eigen::Index> keep;
  std::string absorbed;
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    if (Xd.col(j).norm() <= 1e-9 * (1.0 + X.col(j).norm())) {
      absorbed += (absorbed.empty() ? "" : ", ") + name_of(j);
    } else {
      keep.push_back(j);
    }
  }
  if (!absorbed.empty() && !allow_absorbed) {
    throw EstimationError("rank deficiency: absorbed by fixed effects: " + absorbed);
  }
  const auto k = static_cast<Eigen::Index>(keep.size());
  Eigen::MatrixXd Z(n, k);
  for (Eigen::Index j = 0; j < k; ++j) Z.col(j) = Xd.col(keep[j]);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(k);
  if (k > 0) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Z);
    qr.setThreshold(1e-10);
    if (qr.rank() < k) {
      std::string cols;
      for (Eigen::Index j = qr.rank(); j < k; ++j) {
        const auto c = keep[qr.colsPermutation().indices()(j)];
        cols += (cols.empty() ? "" : ", ") + name_of(c);
      }
      throw EstimationError("rank deficiency: collinear columns: " + cols);
    }
    b = qr.solve(yd);
  }
  r.residuals = yd - Z * b;
  const double tss = yd.squaredNorm();
  r.r2_within = tss > 0 ? 1.0 - r.residuals.squaredNorm() / tss : 0.0;
  if (k > 0) {
    const Eigen::MatrixXd bread = (Z.transpose() * Z).inverse();
    Eigen::MatrixXd score = Eigen::MatrixXd::Zero(ng, k);
    for (Eigen::Index i = 0; i < n; ++i) score.row(gc[i]) += r.residuals(i) * Z.row(i);
    const Eigen::MatrixXd meat = score.transpose() * score;
    double factor = 1.0;
    if (ng > 1 && n > k) {
      factor = static_cast<double>(ng) / (ng - 1) * static_cast<double>(n - 1) /
               static_cast<double>(n - k);
    }
    const Eigen::MatrixXd V = factor * bread * meat * bread;
    for (Eigen::Index j = 0; j < k; ++j) {
      r.coef(keep[j]) = b(j);
      r.se(keep[j]) = std::sqrt(std::max(0.0, V(j, j)));
      r.identified[keep[j]] = true;
    }
  }
  return r;
}

FeOlsResult twfe_staggered(const UnitPanel& p) {
  std::vector<double> yv, dv;
  std::vector<int> unit, week;
  for (std::size_t i = 0; i < p.n_units(); ++i) {
    for (int j = 0; j < p.n_weeks(); ++j) {
      const double v = p.y(static_cast<Eigen::Index>(i), j);
      if (!std::isfinite(v)) continue;
      const int t = p.first_week + j;
      yv.push_back(v);
      dv.push_back(p.cohort[i] && t >= *p.cohort[i] ? 1.0 : 0.0);
      unit.push_back(static_cast<int>(i));
      week.push_back(t);
    }
  }
  const Eigen::VectorXd y = Eigen::Map<Eigen::VectorXd>(yv.data(), static_cast<Eigen::Index>(yv.size()));
  const Eigen::MatrixXd X = Eigen::Map<Eigen::VectorXd>(dv.data(), static_cast<Eigen::Index>(dv.size()));
  return fe_ols(y, X, {"enter_treatment"}, unit, week, unit);
}

std::string bacon_category_name(BaconCategory c) {
  switch (c) {
    case BaconCategory::kEarlierVsLater:
      return "Earlier vs Later Treated";
    case BaconCategory::kLaterVsEarlier:
      return "Later vs Earlier Treated";
    case BaconCategory::kTreatedVsUntreated:
      return "Treated vs Untreated";
  }
  return "";
}

BaconResult bacon_decompose(const UnitPanel& p) {
  const int T = p.n_weeks();
  const auto N = static_cast<double>(p.n_units());
  if (!p.y.allFinite()) {
    throw EstimationError("Bacon decomposition needs a balanced panel without missing cells");
  }
  // Timing groups: onset index within the panel; T means never treated.
  std::map<int, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < p.n_units(); ++i) {
    int onset = T;
    if (p.cohort[i]) onset = std::clamp(*p.cohort[i] - p.first_week, 0, T);
    groups[onset].push_back(i);
  }
  struct Group {
    int onset;
    double share;
    double dbar;
    std::vector<double> mean;  // by week
  };
  std::vector<Group> treated;
  std::optional<Group> untreated;
  for (const auto& [onset, units] : groups) {
    Group g{onset, static_cast<double>(units.size()) / N,
            static_cast<double>(T - onset) / T, std::vector<double>(T, 0.0)};
    for (int t = 0; t < T; ++t) {
      double s = 0.0;
      for (auto i : units) s += p.y(static_cast<Eigen::Index>(i), t);
      g.mean[t] = s / static_cast<double>(units.size());
    }
    if (onset == T) {
      untreated = g;
    } else {
      treated.push_back(g);
    }
  }
  if (treated.empty()) throw EstimationError("Bacon: no treated units");

  // Variance of the two-way demeaned treatment dummy.
  double vd = 0.0;
  {
    std::vector<double> col(T, 0.0);
    double all = 0.0;
    for (const auto& g : treated) {
      for (int t = g.onset; t < T; ++t) col[t] += g.share;
      all += g.share * g.dbar;
    }
    for (const auto& g : treated) {
      for (int t = 0; t < T; ++t) {
        const double d = (t >= g.onset ? 1.0 : 0.0) - g.dbar - col[t] + all;
        vd += g.share * d * d;
      }
    }
    if (untreated) {
      for (int t = 0; t < T; ++t) {
        const double d = -col[t] + all;
        vd += untreated->share * d * d;
      }
    }
    vd /= T;
  }
  if (vd <= 0) throw EstimationError("Bacon: treatment has no within variation");

  auto window = [&](const Group& g, int lo, int hi) {
    double s = 0.0;
    for (int t = lo; t < hi; ++t) s += g.mean[t];
    return s / (hi - lo);
  };

  BaconResult res;
  for (const auto& k : treated) {
    if (untreated && k.onset > 0) {
      const double nku = k.share / (k.share + untreated->share);
      const double w = std::pow(k.share + untreated->share, 2) * nku * (1 - nku) * k.dbar *
                       (1 - k.dbar) / vd;
      const double est = (window(k, k.onset, T) - window(k, 0, k.onset)) -
                         (window(*untreated, k.onset, T) - window(*untreated, 0, k.onset));
      res.components.push_back(
          {BaconCategory::kTreatedVsUntreated, k.onset + p.first_week, std::nullopt, est, w});
    }
  }
  for (std::size_t a = 0; a < treated.size(); ++a) {
    for (std::size_t b = a + 1; b < treated.size(); ++b) {
      const Group& k = treated[a];  // earlier onset
      const Group& l = treated[b];
      const double nkl = k.share / (k.share + l.share);
      const double base = nkl * (1 - nkl);
      if (k.onset > 0) {
        const double w = std::pow((k.share + l.share) * (1 - l.dbar), 2) * base *
                         ((k.dbar - l.dbar) / (1 - l.dbar)) * ((1 - k.dbar) / (1 - l.dbar)) / vd;
        const double est = (window(k, k.onset, l.onset) - window(k, 0, k.onset)) -
                           (window(l, k.onset, l.onset) - window(l, 0, k.onset));
        res.components.push_back({BaconCategory::kEarlierVsLater, k.onset + p.first_week,
                                  l.onset + p.first_week, est, w});
      }
      {
        const double w = std::pow((k.share + l.share) * k.dbar, 2) * base *
                         (l.dbar / k.dbar) * ((k.dbar - l.dbar) / k.dbar) / vd;
        const double est = (window(l, l.onset, T) - window(l, k.onset, l.onset)) -
                           (window(k, l.onset, T) - window(k, k.onset, l.onset));
        res.components.push_back({BaconCategory::kLaterVsEarlier, l.onset + p.first_week,
                                  k.onset + p.first_week, est, w});
      }
    }
  }
  for (const auto cat : {BaconCategory::kEarlierVsLater, BaconCategory::kLaterVsEarlier,
                         BaconCategory::kTreatedVsUntreated}) {
    BaconSummary s{cat};
    double num = 0.0;
    for (const auto& c : res.components) {
      if (c.category != cat) continue;
      s.weight += c.weight;
      num += c.weight * c.estimate;
      ++s.n_components;
    }
    s.estimate = s.weight > 0 ? num / s.weight : 0.0;
    res.summary.push_back(s);
  }
  for (const auto& c : res.components) res.weighted_sum += c.weight * c.estimate;
  res.twfe_coef = twfe_staggered(p).coef(0);
  return res;
}

TwfeResult twfe_did(const std::vector<TwoYearObs>& obs, bool include_demand) {
  const auto n = static_cast<Eigen::Index>(obs.size());
  const Eigen::Index k = include_demand ? 4 : 3;
  Eigen::VectorXd y(n);
  Eigen::MatrixXd X(n, k);
  std::vector<int> unit(obs.size()), week(obs.size());
  std::unordered_map<std::int64_t, int> ids;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& o = obs[i];
    y(i) = o.y;
    X(i, 0) = o.treated_y;
    X(i, 1) = o.post_t;
    X(i, 2) = o.treated_y * o.post_t;
    if (include_demand) X(i, 3) = o.demand;
    unit[i] = ids.emplace(o.unit, static_cast<int>(ids.size())).first->second;
    week[i] = o.week;
  }
  std::vector<std::string> names = {"treated_y", "post_t", "treated_y_x_post_t"};
  if (include_demand) names.push_back("demand_exposure");
  const auto fit = fe_ols(y, X, names, unit, week, unit, true);
  if (!fit.identified[0] || !fit.identified[2]) {
    throw EstimationError("Model 4: treated_y or the interaction is not identified");
  }
  TwfeResult r;
  r.beta1 = fit.coef(0);
  r.se1 = fit.se(0);
  r.beta2_identified = fit.identified[1];
  r.beta2 = fit.coef(1);
  r.se2 = fit.se(1);
  r.beta3 = fit.coef(2);
  r.se3 = fit.se(2);
  if (include_demand) {
    r.beta_demand = fit.coef(3);
    r.se_demand = fit.se(3);
  } else {
    r.beta_demand = r.se_demand = kNaN;
  }
  r.n_obs = fit.n_obs;
  r.n_units = fit.n_clusters;
  r.residual_sd = std::sqrt(fit.residuals.squaredNorm() / std::max(1, fit.n_obs - 1));
  return r;
}

ZoneShares driver_zone_shares(const std::vector<TripEvent>& trips,
                              const geo::HexGrid& zone_grid, Timestamp anchor,
                              int first_week) {
  ZoneShares out;
  std::map<std::int64_t, std::map<geo::HexCell, double>> pre, any;
  for (const auto& t : trips) {
    if (t.cancelled) continue;
    const auto z = zone_grid.cell_of(t.origin);
    any[t.driver_id][z] += 1.0;
    const int w = week_offset(t.accept_ts, anchor);
    if (w >= first_week && w < 0) pre[t.driver_id][z] += 1.0;
  }
  for (auto& [driver, zones] : any) {
    auto it = pre.find(driver);
    std::map<geo::HexCell, double> s;
    if (it != pre.end()) {
      s = it->second;
    } else {
      for (const auto& [z, c] : zones) s[z] = 1.0;
      out.flagged.insert(driver);
    }
    double total = 0.0;
    for (const auto& [z, c] : s) total += c;
    for (auto& [z, c] : s) c /= total;
    out.shares[driver] = std::move(s);
  }
  return out;
}

std::vector<double> exposure_weighted_demand(
    const std::map<geo::HexCell, double>& shares,
    const std::map<geo::HexCell, std::vector<double>>& zone_series, int n_weeks) {
  std::vector<double> d(static_cast<std::size_t>(n_weeks), 0.0);
  for (const auto& [z, s] : shares) {
    const auto it = zone_series.find(z);
    if (it == zone_series.end()) continue;
    for (int t = 0; t < n_weeks && t < static_cast<int>(it->second.size()); ++t) {
      d[t] += s * it->second[t];
    }
  }
  return d;
}

SpilloverResult demand_spillover_did(const std::vector<panel::ZoneWeekDemand>& rows,
                                     const std::string& outcome, bool triple) {
  const auto n = static_cast<Eigen::Index>(rows.size());
  const Eigen::Index k = triple ? 4 : 2;
  Eigen::VectorXd y(n);
  Eigen::MatrixXd X(n, k);
  std::vector<int> zone(rows.size()), week(rows.size());
  std::map<geo::HexCell, int> ids;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = rows[i];
    double v = 0.0;
    if (outcome == "intents") {
      v = static_cast<double>(r.intents);
    } else if (outcome == "requests") {
      v = static_cast<double>(r.requests);
    } else if (outcome == "completes") {
      v = static_cast<double>(r.completes);
    } else {
      throw std::invalid_argument("unknown demand outcome: " + outcome);
    }
    y(i) = std::log1p(v);
    const double treat_after = (r.in_major_market && r.week >= 0) ? 1.0 : 0.0;
    const double high_after = (r.high_demand && r.week >= 0) ? 1.0 : 0.0;
    X(i, 0) = treat_after;
    if (triple) {
      X(i, 1) = high_after;
      X(i, 2) = treat_after * high_after;
    }
    X(i, k - 1) = r.price_indicator;
    zone[i] = ids.emplace(r.zone, static_cast<int>(ids.size())).first->second;
    week[i] = r.week;
  }
  std::vector<std::string> names = {"treat_x_after"};
  if (triple) {
    names.push_back("high_x_after");
    names.push_back("treat_x_high_x_after");
  }
  names.push_back("price_indicator");
  SpilloverResult res;
  res.outcome = outcome;
  res.triple = triple;
  res.fit = fe_ols(y, X, names, zone, week, zone);
  const Eigen::Index j = triple ? 2 : 0;
  res.interaction = res.fit.coef(j);
  res.interaction_se = res.fit.se(j);
  return res;
}

}  // namespace ridepolicy::causal
