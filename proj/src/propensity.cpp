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

#include "ridepolicy/propensity.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ridepolicy/errors.hpp"

namespace ridepolicy::causal {

namespace {

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

std::string column_name(const std::vector<std::string>& names, Eigen::Index j) {
  if (j < static_cast<Eigen::Index>(names.size())) return names[j];
  return "x" + std::to_string(j);
}

}  // namespace

LogitFit fit_logit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                   const Eigen::VectorXd& w, const std::vector<std::string>& names,
                   const LogitOptions& opt, const Eigen::VectorXd* start) {
  const Eigen::Index n = X.rows(), p = X.cols() + 1;
  if (y.size() != n || w.size() != n) throw std::invalid_argument("logit: size mismatch");
  double wsum = 0.0, ysum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    wsum += w(i);
    ysum += w(i) * y(i);
  }
  if (wsum <= 0) throw EstimationError("logit: no units with positive weight");
  if (ysum <= 0 || ysum >= wsum) throw EstimationError("logit: outcome has no variation");

  if (opt.check_separation) {
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
      double min1 = INFINITY, max1 = -INFINITY, min0 = INFINITY, max0 = -INFINITY;
      bool binary = true;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (w(i) <= 0) continue;
        if (y(i) != 0.0 && y(i) != 1.0) binary = false;
        const double v = X(i, j);
        if (y(i) >= 0.5) {
          min1 = std::min(min1, v);
          max1 = std::max(max1, v);
        } else {
          min0 = std::min(min0, v);
          max0 = std::max(max0, v);
        }
      }
      if (binary && (max0 < min1 || max1 < min0)) {
        throw EstimationError("perfect separation on covariate " + column_name(names, j));
      }
    }
  }

  LogitFit fit;
  fit.coef = Eigen::VectorXd::Zero(p);
  if (start && start->size() == p) {
    fit.coef = *start;
  } else {
    const double m = ysum / wsum;
    fit.coef(0) = std::log(m / (1.0 - m));
  }
  Eigen::MatrixXd Xa(n, p);
  Xa.col(0).setOnes();
  Xa.rightCols(p - 1) = X;
  Eigen::VectorXd mu(n), v(n);
  Eigen::MatrixXd H(p, p);
  Eigen::VectorXd g(p);
  for (int it = 0; it <= opt.max_iter; ++it) {
    const Eigen::VectorXd eta = Xa * fit.coef;
    for (Eigen::Index i = 0; i < n; ++i) {
      mu(i) = sigmoid(eta(i));
      v(i) = w(i) * mu(i) * (1.0 - mu(i));
    }
    g.noalias() = Xa.transpose() * (w.array() * (y - mu).array()).matrix();
    fit.grad_norm = g.norm() / wsum;
    fit.iterations = it;
    if (fit.grad_norm < opt.grad_tol) {
      fit.converged = true;
      break;
    }
    if (it == opt.max_iter) break;
    H.noalias() = Xa.transpose() * v.asDiagonal() * Xa;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(H);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
      throw EstimationError("logit: singular information matrix");
    }
    Eigen::VectorXd step = ldlt.solve(g);
    if (!step.allFinite()) throw EstimationError("logit: singular information matrix");
    // Cap wild steps so quasi-separated designs do not overflow.
    const double sn = step.lpNorm<Eigen::Infinity>();
    if (sn > 10.0) step *= 10.0 / sn;
    fit.coef += step;
  }
  if (!fit.coef.allFinite()) throw EstimationError("logit: diverged");
  return fit;
}

Eigen::VectorXd logit_predict(const LogitFit& fit, const Eigen::MatrixXd& X) {
  Eigen::VectorXd eta = X * fit.coef.tail(fit.coef.size() - 1);
  eta.array() += fit.coef(0);
  return eta.unaryExpr([](double z) { return sigmoid(z); });
}

PropensityModel fit_propensity(const Eigen::MatrixXd& X, const std::vector<int>& treated,
                               const std::vector<std::string>& names, double clip_lo,
                               double clip_hi) {
  const Eigen::Index n = X.rows();
  if (static_cast<Eigen::Index>(treated.size()) != n) {
    throw std::invalid_argument("propensity: label size mismatch");
  }
  const auto nt = std::count(treated.begin(), treated.end(), 1);
  if (nt == 0 || nt == n) {
    throw EstimationError("propensity: need at least one treated and one control unit");
  }
  PropensityModel m;
  m.clip_lo = clip_lo;
  m.clip_hi = clip_hi;
  std::vector<Eigen::Index> keep;
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    const double mean = X.col(j).mean();
    const double sd = std::sqrt((X.col(j).array() - mean).square().sum() /
                                std::max<Eigen::Index>(1, n - 1));
    if (sd > 1e-12) {
      keep.push_back(j);
      m.names.push_back(j < static_cast<Eigen::Index>(names.size()) ? names[j]
                                                                     : "x" + std::to_string(j));
    }
  }
  m.mean.resize(static_cast<Eigen::Index>(keep.size()));
  m.sd.resize(static_cast<Eigen::Index>(keep.size()));
  Eigen::MatrixXd Z(n, static_cast<Eigen::Index>(keep.size()));
  for (std::size_t k = 0; k < keep.size(); ++k) {
    const auto col = X.col(keep[k]);
    const double mean = col.mean();
    const double sd = std::sqrt((col.array() - mean).square().sum() /
                                std::max<Eigen::Index>(1, n - 1));
    m.mean(k) = mean;
    m.sd(k) = sd;
    Z.col(k) = (col.array() - mean) / sd;
  }
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) y(i) = treated[i] ? 1.0 : 0.0;
  m.fit = fit_logit(Z, y, Eigen::VectorXd::Ones(n), m.names);
  m.scores = logit_predict(m.fit, Z).cwiseMax(clip_lo).cwiseMin(clip_hi);
  return m;
}

Eigen::VectorXd att_weights(const Eigen::VectorXd& scores, const std::vector<int>& treated) {
  Eigen::VectorXd w(scores.size());
  for (Eigen::Index i = 0; i < scores.size(); ++i) {
    w(i) = treated[i] ? 1.0 : scores(i) / (1.0 - scores(i));
  }
  return w;
}

std::vector<BalanceRow> balance_diagnostics(const Eigen::MatrixXd& X,
                                            const Eigen::VectorXd& weights,
                                            const std::vector<int>& treated,
                                            const std::vector<std::string>& names) {
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    if (!(weights(i) > 0)) throw std::invalid_argument("balance: weights must be positive");
  }
  std::vector<BalanceRow> out;
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    double n[2] = {0, 0}, s[2] = {0, 0}, ss[2] = {0, 0}, ws[2] = {0, 0}, wx[2] = {0, 0};
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      const int g = treated[i] ? 1 : 0;
      const double v = X(i, j);
      n[g] += 1;
      s[g] += v;
      ws[g] += weights(i);
      wx[g] += weights(i) * v;
    }
    const double m1 = s[1] / n[1], m0 = s[0] / n[0];
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      const int g = treated[i] ? 1 : 0;
      const double d = X(i, j) - (g ? m1 : m0);
      ss[g] += d * d;
    }
    const double v1 = n[1] > 1 ? ss[1] / (n[1] - 1) : 0.0;
    const double v0 = n[0] > 1 ? ss[0] / (n[0] - 1) : 0.0;
    const double pooled = std::sqrt(0.5 * (v1 + v0));
    BalanceRow r;
    r.name = j < static_cast<Eigen::Index>(names.size()) ? names[j] : "x" + std::to_string(j);
    if (pooled <= 1e-12) {
      r.constant = true;
    } else {
      r.smd_pre = (m1 - m0) / pooled;
      r.smd_post = (wx[1] / ws[1] - wx[0] / ws[0]) / pooled;
    }
    out.push_back(r);
  }
  return out;
}

double max_abs_smd(const std::vector<BalanceRow>& rows, bool post) {
  double m = 0.0;
  for (const auto& r : rows) m = std::max(m, std::abs(post ? r.smd_post : r.smd_pre));
  return m;
}

double auc(const Eigen::VectorXd& scores, const std::vector<int>& labels) {
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(scores.size()));
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(),
            [&](Eigen::Index a, Eigen::Index b) { return scores(a) < scores(b); });
  // Mann-Whitney with mid-ranks.
  double rank_sum = 0.0, n1 = 0.0;
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i;
    while (j < idx.size() && scores(idx[j]) == scores(idx[i])) ++j;
    const double mid = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (labels[idx[k]]) {
        rank_sum += mid;
        n1 += 1;
      }
    }
    i = j;
  }
  const double n0 = static_cast<double>(idx.size()) - n1;
  if (n1 == 0 || n0 == 0) return 0.5;
  return (rank_sum - n1 * (n1 + 1) / 2.0) / (n1 * n0);
}

}  // namespace ridepolicy::causal
