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

#ifndef RIDEPOLICY_PROPENSITY_HPP_
#define RIDEPOLICY_PROPENSITY_HPP_

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace ridepolicy::causal {

struct LogitOptions {
  double grad_tol = 1e-8;  // on the weight-normalised score
  int max_iter = 100;
  bool check_separation = true;
};

struct LogitFit {
  Eigen::VectorXd coef;  // intercept first
  int iterations = 0;
  double grad_norm = 0.0;
  bool converged = false;
};

// Weighted logistic regression by IRLS on (1, X). Labels may be fractional
// in [0,1]. Units with zero weight are ignored. Throws EstimationError on
// complete separation by a single column (named via `names`) or when every
// label is the same.
LogitFit fit_logit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                   const Eigen::VectorXd& w,
                   const std::vector<std::string>& names = {},
                   const LogitOptions& opt = {},
                   const Eigen::VectorXd* start = nullptr);

Eigen::VectorXd logit_predict(const LogitFit& fit, const Eigen::MatrixXd& X);

struct PropensityModel {
  std::vector<std::string> names;
  Eigen::VectorXd mean;  // standardisation applied before the fit
  Eigen::VectorXd sd;
  LogitFit fit;
  Eigen::VectorXd scores;  // clipped to [clip_lo, clip_hi]
  double clip_lo = 0.01;
  double clip_hi = 0.99;
};

// Standardises the covariates, fits the logit and returns clipped scores.
// Constant covariates are dropped from the fit.
PropensityModel fit_propensity(const Eigen::MatrixXd& X,
                               const std::vector<int>& treated,
                               const std::vector<std::string>& names,
                               double clip_lo = 0.01, double clip_hi = 0.99);

// ATT weights: 1 for treated, p/(1-p) for controls.
Eigen::VectorXd att_weights(const Eigen::VectorXd& scores,
                            const std::vector<int>& treated);

struct BalanceRow {
  std::string name;
  double smd_pre = 0.0;
  double smd_post = 0.0;
  bool constant = false;
};

// SMD = (mean_T - mean_C) / sqrt((var_T + var_C) / 2), unweighted variances;
// post uses the weighted means. Constant covariates are flagged with SMD 0.
std::vector<BalanceRow> balance_diagnostics(const Eigen::MatrixXd& X,
                                            const Eigen::VectorXd& weights,
                                            const std::vector<int>& treated,
                                            const std::vector<std::string>& names);

double max_abs_smd(const std::vector<BalanceRow>& rows, bool post);

// Area under the ROC curve (ties count one half).
double auc(const Eigen::VectorXd& scores, const std::vector<int>& labels);

}  // namespace ridepolicy::causal

#endif  // RIDEPOLICY_PROPENSITY_HPP_
