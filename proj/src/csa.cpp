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

#include "ridepolicy/csa.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "ridepolicy/errors.hpp"
#include "ridepolicy/propensity.hpp"

namespace ridepolicy::causal {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace

const std::vector<std::string>& default_covariates() {
  static const std::vector<std::string> names = {"num_hour", "num_mile", "num_trip",
                                                 "num_session", "earnings"};
  return names;
}

UnitPanel make_unit_panel(const std::vector<panel::DriverWeekRecord>& rows,
                          const std::string& outcome, OutcomeTransform transform,
                          const std::vector<std::string>& covariates) {
  UnitPanel p;
  if (rows.empty()) throw EstimationError("empty driver-week panel");
  int wmin = rows.front().week, wmax = rows.front().week;
  std::map<std::int64_t, std::size_t> unit;
  for (const auto& r : rows) {
    wmin = std::min(wmin, r.week);
    wmax = std::max(wmax, r.week);
    if (unit.emplace(r.driver_id, unit.size()).second) {
      p.unit_ids.push_back(r.driver_id);
      p.cohort.push_back(r.cohort);
    }
  }
  p.first_week = wmin;
  const int nw = wmax - wmin + 1;
  const auto n = static_cast<Eigen::Index>(p.unit_ids.size());
  if (static_cast<std::size_t>(n) * nw != rows.size()) {
    throw IntegrityError("driver-week panel is not balanced");
  }
  p.y = Eigen::MatrixXd::Constant(n, nw, kNaN);
  p.x = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(covariates.size()));
  p.covariate_names = covariates;
  std::vector<int> pre_weeks(static_cast<std::size_t>(n), 0);
  for (const auto& r : rows) {
    const auto i = static_cast<Eigen::Index>(unit.at(r.driver_id));
    double v = panel::outcome_value(r, outcome);
    if (std::isfinite(v)) {
      switch (transform) {
        case OutcomeTransform::kLevel:
          break;
        case OutcomeTransform::kLog:
          v = v > 0 ? std::log(v) : kNaN;
          break;
        case OutcomeTransform::kLog1p:
          v = v > -1 ? std::log1p(v) : kNaN;
          break;
      }
    }
    if (!std::isfinite(v)) ++p.excluded;
    p.y(i, r.week - wmin) = v;
    if (r.week < 0) {
      ++pre_weeks[i];
      for (std::size_t k = 0; k < covariates.size(); ++k) {
        p.x(i, static_cast<Eigen::Index>(k)) += panel::outcome_value(r, covariates[k]);
      }
    }
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (pre_weeks[i] > 0) p.x.row(i) /= pre_weeks[i];
  }
  return p;
}

UnitPanel subset_units(const UnitPanel& p, const std::vector<std::size_t>& keep) {
  UnitPanel s;
  s.first_week = p.first_week;
  s.covariate_names = p.covariate_names;
  s.y.resize(static_cast<Eigen::Index>(keep.size()), p.y.cols());
  s.x.resize(static_cast<Eigen::Index>(keep.size()), p.x.cols());
  for (std::size_t k = 0; k < keep.size(); ++k) {
    const auto i = keep[k];
    s.unit_ids.push_back(p.unit_ids[i]);
    s.cohort.push_back(p.cohort[i]);
    s.y.row(static_cast<Eigen::Index>(k)) = p.y.row(static_cast<Eigen::Index>(i));
    s.x.row(static_cast<Eigen::Index>(k)) = p.x.row(static_cast<Eigen::Index>(i));
  }
  for (Eigen::Index i = 0; i < s.y.rows(); ++i) {
    for (Eigen::Index j = 0; j < s.y.cols(); ++j) {
      if (!std::isfinite(s.y(i, j))) ++s.excluded;
    }
  }
  return s;
}

std::map<int, double> cohort_sizes(const UnitPanel& p) {
  std::map<int, double> out;
  for (const auto& g : p.cohort) {
    if (g) out[*g] += 1.0;
  }
  return out;
}

namespace {

// Standardised covariates with constant columns removed.
struct Design {
  Eigen::MatrixXd z;
  std::vector<std::string> names;
};

Design standardise(const UnitPanel& p) {
  Design d;
  const auto n = p.x.rows();
  std::vector<Eigen::Index> keep;
  for (Eigen::Index j = 0; j < p.x.cols(); ++j) {
    const double mean = p.x.col(j).mean();
    const double var = (p.x.col(j).array() - mean).square().sum() /
                       static_cast<double>(std::max<Eigen::Index>(1, n - 1));
    if (var > 1e-24) keep.push_back(j);
  }
  d.z.resize(n, static_cast<Eigen::Index>(keep.size()));
  for (std::size_t k = 0; k < keep.size(); ++k) {
    const auto col = p.x.col(keep[k]);
    const double mean = col.mean();
    const double sd = std::sqrt((col.array() - mean).square().sum() /
                                static_cast<double>(std::max<Eigen::Index>(1, n - 1)));
    d.z.col(static_cast<Eigen::Index>(k)) = (col.array() - mean) / sd;
    d.names.push_back(p.covariate_names[keep[k]]);
  }
  return d;
}

struct Cell {
  int g = 0, t = 0, base = 0;
  std::vector<std::size_t> units;  // treated first
  std::size_t n_treated = 0;
  Eigen::VectorXd dy;
  Eigen::MatrixXd z;
  Eigen::VectorXd label;
  bool fallback = false;
  Eigen::VectorXd coef;  // point-estimate fit, warm start for replicates
};

bool is_control(const std::optional<int>& G, int g, int t, const CsaOptions& opt) {
  if (!G) return true;
  if (opt.never_treated_only) return false;
  return *G != g && *G > t + opt.anticipation;
}

std::optional<Cell> make_cell(const UnitPanel& p, const Design& d, int g, int t,
                              const CsaOptions& opt) {
  Cell c;
  c.g = g;
  c.t = t;
  c.base = t >= g - opt.anticipation ? g - 1 - opt.anticipation : t - 1;
  if (c.base < p.first_week || t > p.last_week() || t < p.first_week) return std::nullopt;
  const int jt = t - p.first_week, jb = c.base - p.first_week;
  std::vector<std::size_t> ctrl;
  for (std::size_t i = 0; i < p.n_units(); ++i) {
    const double a = p.y(static_cast<Eigen::Index>(i), jt);
    const double b = p.y(static_cast<Eigen::Index>(i), jb);
    if (!std::isfinite(a) || !std::isfinite(b)) continue;
    if (p.cohort[i] && *p.cohort[i] == g) {
      c.units.push_back(i);
    } else if (is_control(p.cohort[i], g, t, opt)) {
      ctrl.push_back(i);
    }
  }
  c.n_treated = c.units.size();
  if (c.n_treated == 0 || ctrl.empty()) return std::nullopt;
  c.units.insert(c.units.end(), ctrl.begin(), ctrl.end());
  const auto n = static_cast<Eigen::Index>(c.units.size());
  c.dy.resize(n);
  c.label.resize(n);
  c.z.resize(n, d.z.cols());
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto i = static_cast<Eigen::Index>(c.units[k]);
    c.dy(k) = p.y(i, jt) - p.y(i, jb);
    c.label(k) = static_cast<std::size_t>(k) < c.n_treated ? 1.0 : 0.0;
    c.z.row(k) = d.z.row(i);
  }
  return c;
}

// NaN when the replicate leaves the cell without treated or control mass.
// With `fit_out` set (point estimate) the logit coefficients are returned
// and a failed fit falls back to unweighted controls.
double cell_estimate(const Cell& c, const std::vector<double>& m, const CsaOptions& opt,
                     const std::vector<std::string>& names, Eigen::VectorXd* fit_out,
                     bool* fallback_out) {
  const auto n = static_cast<Eigen::Index>(c.units.size());
  Eigen::VectorXd w(n);
  double wt = 0.0, wc = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    w(k) = m[c.units[k]];
    (static_cast<std::size_t>(k) < c.n_treated ? wt : wc) += w(k);
  }
  if (wt <= 0 || wc <= 0) return kNaN;
  Eigen::VectorXd cw = w;
  if (opt.ipw && c.z.cols() > 0 && !c.fallback) {
    try {
      const LogitFit fit =
          fit_logit(c.z, c.label, w, names, {}, c.coef.size() ? &c.coef : nullptr);
      if (fit_out) *fit_out = fit.coef;
      const Eigen::VectorXd ps =
          logit_predict(fit, c.z).cwiseMax(opt.clip_lo).cwiseMin(opt.clip_hi);
      for (Eigen::Index k = static_cast<Eigen::Index>(c.n_treated); k < n; ++k) {
        cw(k) = w(k) * ps(k) / (1.0 - ps(k));
      }
    } catch (const EstimationError&) {
      if (!fallback_out) return kNaN;
      *fallback_out = true;
    }
  }
  double st = 0.0, sc = 0.0, swc = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    if (static_cast<std::size_t>(k) < c.n_treated) {
      st += w(k) * c.dy(k);
    } else {
      sc += cw(k) * c.dy(k);
      swc += cw(k);
    }
  }
  return st / wt - sc / swc;
}

std::map<int, double> weighted_cohort_sizes(const UnitPanel& p, const std::vector<double>& m) {
  std::map<int, double> out;
  for (std::size_t i = 0; i < p.n_units(); ++i) {
    if (p.cohort[i]) out[*p.cohort[i]] += m[i];
  }
  return out;
}

}  // namespace

GroupTimeATT att_gt(const UnitPanel& p, int g, int t, const CsaOptions& opt) {
  const Design d = standardise(p);
  auto cell = make_cell(p, d, g, t, opt);
  if (!cell) {
    throw EstimationError("ATT(" + std::to_string(g) + "," + std::to_string(t) +
                          "): empty treated or control group, or base period outside panel");
  }
  GroupTimeATT r;
  r.g = g;
  r.t = t;
  r.base_period = cell->base;
  r.n_treated = static_cast<int>(cell->n_treated);
  r.n_control = static_cast<int>(cell->units.size() - cell->n_treated);
  r.estimate = cell_estimate(*cell, std::vector<double>(p.n_units(), 1.0), opt, d.names,
                             &cell->coef, &r.ipw_fallback);
  r.std_error = kNaN;
  return r;
}

AggregateEffect aggregate_overall(const std::vector<GroupTimeATT>& cells,
                                  const std::map<int, double>& sizes) {
  AggregateEffect a;
  a.kind = AggregateKind::kOverall;
  double num = 0.0, k = 0.0;
  for (const auto& c : cells) {
    if (c.t < c.g || !std::isfinite(c.estimate)) continue;
    const auto it = sizes.find(c.g);
    if (it == sizes.end() || it->second <= 0) continue;
    num += it->second * c.estimate;
    k += it->second;
    a.weights[c.g] += it->second;
  }
  if (k <= 0) throw EstimationError("aggregate: no post-treatment cells");
  for (auto& [g, w] : a.weights) w /= k;
  a.normalizer = k;
  a.value = num / k;
  a.std_error = a.ci_lo = a.ci_hi = kNaN;
  return a;
}

std::vector<AggregateEffect> aggregate_dynamic(const std::vector<GroupTimeATT>& cells,
                                               const std::map<int, double>& sizes,
                                               int e_min, int e_max) {
  std::map<int, AggregateEffect> by_e;
  for (const auto& c : cells) {
    const int e = c.t - c.g;
    if (e < e_min || e > e_max || !std::isfinite(c.estimate)) continue;
    const auto it = sizes.find(c.g);
    if (it == sizes.end() || it->second <= 0) continue;
    auto& a = by_e[e];
    a.kind = AggregateKind::kDynamic;
    a.e = e;
    a.value += it->second * c.estimate;
    a.normalizer += it->second;
    a.weights[c.g] += it->second;
  }
  std::vector<AggregateEffect> out;
  for (auto& [e, a] : by_e) {
    a.value /= a.normalizer;
    for (auto& [g, w] : a.weights) w /= a.normalizer;
    a.std_error = a.ci_lo = a.ci_hi = kNaN;
    out.push_back(a);
  }
  return out;
}

CsaResult estimate_csa(const UnitPanel& p, const CsaOptions& opt) {
  const Design d = standardise(p);
  std::set<int> groups;
  for (const auto& g : p.cohort) {
    if (g) groups.insert(*g);
  }
  if (groups.empty()) throw EstimationError("CSA: no treated cohorts");
  CsaResult res;
  std::vector<Cell> cells;
  for (int g : groups) {
    for (int t = p.first_week + 1; t <= p.last_week(); ++t) {
      auto c = make_cell(p, d, g, t, opt);
      if (c) {
        cells.push_back(std::move(*c));
      } else {
        ++res.omitted_cells;
      }
    }
  }
  if (cells.empty()) throw EstimationError("CSA: no identified cells");

  const int e_min = p.first_week - 1;
  const int e_max = p.last_week();
  std::vector<GroupTimeATT> atts;
  for (auto& c : cells) {
    GroupTimeATT r;
    r.g = c.g;
    r.t = c.t;
    r.base_period = c.base;
    r.n_treated = static_cast<int>(c.n_treated);
    r.n_control = static_cast<int>(c.units.size() - c.n_treated);
    atts.push_back(r);
  }

  // Statistic vector: cells, psi, theta(e) for the e present at the point.
  std::vector<int> es;
  bool first = true;
  auto statistic = [&](const std::vector<double>& m) {
    const bool point = first;
    first = false;
    std::vector<GroupTimeATT> cur = atts;
    for (std::size_t k = 0; k < cells.size(); ++k) {
      Cell& c = cells[k];
      cur[k].estimate = point ? cell_estimate(c, m, opt, d.names, &c.coef, &c.fallback)
                              : cell_estimate(c, m, opt, d.names, nullptr, nullptr);
    }
    const auto sizes = weighted_cohort_sizes(p, m);
    std::vector<double> v;
    v.reserve(cells.size() + 1 + es.size());
    for (const auto& c : cur) v.push_back(c.estimate);
    v.push_back(aggregate_overall(cur, sizes).value);
    const auto dyn = aggregate_dynamic(cur, sizes, e_min, e_max);
    if (point) {
      es.clear();
      for (const auto& a : dyn) es.push_back(a.e);
    }
    for (int e : es) {
      double val = kNaN;
      for (const auto& a : dyn) {
        if (a.e == e) val = a.value;
      }
      v.push_back(val);
    }
    return v;
  };

  BootstrapOptions bopt = opt.boot;
  if (!opt.bootstrap) bopt.reps = 0;
  // The point estimate fills the warm starts and fallback flags first.
  const BootstrapResult br = cluster_bootstrap(statistic, p.n_units(), bopt);
  res.boot_reps = br.reps;
  res.boot_dropped = br.dropped;
  for (std::size_t k = 0; k < cells.size(); ++k) {
    atts[k].estimate = br.estimate[k];
    atts[k].std_error = br.std_error[k];
    atts[k].ipw_fallback = cells[k].fallback;
  }
  res.cells = atts;
  res.cohort_sizes = cohort_sizes(p);
  res.overall = aggregate_overall(atts, res.cohort_sizes);
  res.overall.std_error = br.std_error[cells.size()];
  res.overall.ci_lo = br.ci_lo[cells.size()];
  res.overall.ci_hi = br.ci_hi[cells.size()];
  res.dynamic = aggregate_dynamic(atts, res.cohort_sizes, e_min, e_max);
  for (std::size_t j = 0; j < es.size(); ++j) {
    for (auto& a : res.dynamic) {
      if (a.e == es[j]) {
        a.std_error = br.std_error[cells.size() + 1 + j];
        a.ci_lo = br.ci_lo[cells.size() + 1 + j];
        a.ci_hi = br.ci_hi[cells.size() + 1 + j];
      }
    }
  }
  return res;
}

}  // namespace ridepolicy::causal
