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

#ifndef RIDEPOLICY_CSA_HPP_
#define RIDEPOLICY_CSA_HPP_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ridepolicy/bootstrap.hpp"
#include "ridepolicy/panel.hpp"

namespace ridepolicy::causal {

// Units x weeks outcome matrix; NaN marks an excluded unit-week.
struct UnitPanel {
  int first_week = 0;
  std::vector<std::int64_t> unit_ids;
  std::vector<std::optional<int>> cohort;
  Eigen::MatrixXd y;
  Eigen::MatrixXd x;  // pre-treatment covariates, one row per unit
  std::vector<std::string> covariate_names;
  int excluded = 0;   // unit-weeks set to NaN by the outcome transform

  std::size_t n_units() const { return unit_ids.size(); }
  int n_weeks() const { return static_cast<int>(y.cols()); }
  int last_week() const { return first_week + n_weeks() - 1; }
};

enum class OutcomeTransform { kLevel, kLog, kLog1p };

// Pre-period covariates used for IPW and matching.
const std::vector<std::string>& default_covariates();

// Builds the unit panel from a balanced driver-week table. kLog drops
// non-positive values (counted in `excluded`); NaN values (e.g. a missing
// rating) are always excluded. Covariates are pre-period (week < 0) means.
UnitPanel make_unit_panel(const std::vector<panel::DriverWeekRecord>& rows,
                          const std::string& outcome, OutcomeTransform transform,
                          const std::vector<std::string>& covariates =
                              default_covariates());

// Keeps the listed units (in the given order).
UnitPanel subset_units(const UnitPanel& p, const std::vector<std::size_t>& keep);

struct CsaOptions {
  int anticipation = 0;
  bool never_treated_only = false;
  bool ipw = true;
  double clip_lo = 0.01;
  double clip_hi = 0.99;
  bool bootstrap = true;
  BootstrapOptions boot;
};

struct GroupTimeATT {
  int g = 0;
  int t = 0;
  double estimate = 0.0;
  double std_error = 0.0;
  int n_treated = 0;
  int n_control = 0;
  int base_period = 0;
  bool ipw_fallback = false;  // propensity fit failed; unweighted controls
};

enum class AggregateKind { kOverall, kDynamic };

struct AggregateEffect {
  AggregateKind kind = AggregateKind::kOverall;
  int e = 0;  // exposure length for kDynamic
  double value = 0.0;
  double std_error = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  std::map<int, double> weights;  // normalised omega_g
  double normalizer = 0.0;        // k
};

// ATT(g,t) with base g-1-anticipation for t >= g - anticipation, else t-1.
// Controls: never treated plus cohorts G > t + anticipation (G != g) unless
// never_treated_only. Throws EstimationError if either group is empty.
GroupTimeATT att_gt(const UnitPanel& p, int g, int t, const CsaOptions& opt = {});

// psi over cells with t >= g, each weighted by its cohort size.
AggregateEffect aggregate_overall(const std::vector<GroupTimeATT>& cells,
                                  const std::map<int, double>& cohort_sizes);

// theta(e) for every e with at least one cell; e outside [e_min, e_max] is
// omitted.
std::vector<AggregateEffect> aggregate_dynamic(const std::vector<GroupTimeATT>& cells,
                                               const std::map<int, double>& cohort_sizes,
                                               int e_min, int e_max);

std::map<int, double> cohort_sizes(const UnitPanel& p);

struct CsaResult {
  std::vector<GroupTimeATT> cells;
  AggregateEffect overall;
  std::vector<AggregateEffect> dynamic;
  std::map<int, double> cohort_sizes;
  int omitted_cells = 0;
  int boot_reps = 0;
  int boot_dropped = 0;
};

// Every identified (g,t) cell, psi and theta(e) for e in [-n_pre, n_post],
// with driver-clustered bootstrap standard errors.
CsaResult estimate_csa(const UnitPanel& p, const CsaOptions& opt = {});

}  // namespace ridepolicy::causal

#endif  // RIDEPOLICY_CSA_HPP_
