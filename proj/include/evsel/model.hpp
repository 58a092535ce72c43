#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "evsel/common.hpp"

namespace evsel {

struct Dataset {
  VectorXd y;
  MatrixXd X;
  std::vector<int> group;  // empty unless a mixed model is intended
  std::vector<std::string> names;

  bool has_groups() const { return !group.empty(); }
  Eigen::Index n() const { return y.size(); }
  Eigen::Index p() const { return X.cols(); }

  void validate() const {
    if (y.size() < 2) throw config_error("Dataset: need n >= 2");
    if (X.rows() != y.size()) throw config_error("Dataset: X rows must match y length");
    if (!all_finite(X) || !all_finite(y)) throw config_error("Dataset: non-finite entries");
    if (!group.empty() && static_cast<Eigen::Index>(group.size()) != y.size())
      throw config_error("Dataset: group labels must match y length");
    if (!names.empty() && static_cast<Eigen::Index>(names.size()) != X.cols())
      throw config_error("Dataset: names must match X columns");
  }
};

// Candidate model from the zero-constant class: coordinates in S are
// estimated, all remaining coordinates are pinned to 0.
struct CandidateModel {
  std::vector<int> S;  // sorted subset of {0, ..., p-1}
  int p = 0;

  static CandidateModel full(int p) {
    CandidateModel m;
    m.p = p;
    m.S.resize(p);
    std::iota(m.S.begin(), m.S.end(), 0);
    return m;
  }
  static CandidateModel drop_one(int p, int j) {
    CandidateModel m;
    m.p = p;
    m.S.reserve(p - 1);
    for (int k = 0; k < p; ++k)
      if (k != j) m.S.push_back(k);
    return m;
  }
  static CandidateModel from_kept(int p, std::vector<int> kept) {
    CandidateModel m;
    m.p = p;
    std::sort(kept.begin(), kept.end());
    kept.erase(std::unique(kept.begin(), kept.end()), kept.end());
    m.S = std::move(kept);
    m.validate();
    return m;
  }

  void validate() const {
    for (std::size_t i = 0; i < S.size(); ++i) {
      if (S[i] < 0 || S[i] >= p) throw config_error("CandidateModel: index out of range");
      if (i > 0 && S[i] <= S[i - 1]) throw config_error("CandidateModel: S must be sorted unique");
    }
  }
};

inline VectorXd plugin_estimate(const Eigen::Ref<const VectorXd>& fit_vector,
                                const CandidateModel& model) {
  if (fit_vector.size() != model.p)
    throw config_error("plugin_estimate: vector length does not match model dimension");
  VectorXd out = VectorXd::Zero(model.p);
  for (int j : model.S) out[j] = fit_vector[j];
  return out;
}

enum class ModelFamily { LinearOLS, LinearMixedREML };

// Full-model fit plus the cached gradient/Hessian pieces the one-step
// bootstrap re-uses across all resampling draws.
struct ModelFit {
  ModelFamily family = ModelFamily::LinearOLS;
  VectorXd theta_hat;
  double a_n = 0.0;
  MatrixXd V_n;  // plug-in estimate of V in a_n (theta_hat - theta_0) ~ E(0, V, g)
  double sigma2 = 0.0;
  MatrixXd delta;  // LMM random-effect covariance (q x q)
  bool ridge_applied = false;
  bool intercept = false;  // when true, column 0 of the internal design is the intercept
  std::vector<std::string> names;

  // one-step caches
  MatrixXd X;                                  // internal design (n x p)
  VectorXd resid;                              // y - X theta_hat
  MatrixXd grad_units;                         // k x p; unit = observation (OLS) or group (LMM)
  MatrixXd hessian;                            // sum of per-unit Psi'' at theta_hat
  Eigen::LDLT<MatrixXd> hessian_solver;
  std::vector<std::pair<int, int>> group_spans;  // LMM: [begin, end) row ranges
  std::vector<MatrixXd> vinv_blocks;             // LMM: per-group V-hat^{-1}

  Eigen::Index n() const { return X.rows(); }
  Eigen::Index p() const { return X.cols(); }
  Eigen::Index n_units() const { return grad_units.rows(); }

  // Indices eligible for drop-one selection (intercept excluded by default).
  std::vector<int> default_candidates(bool include_intercept = false) const {
    std::vector<int> c;
    for (int j = intercept && !include_intercept ? 1 : 0; j < p(); ++j) c.push_back(j);
    return c;
  }
};

inline ModelFit fit_ols(const Dataset& data, bool intercept = false, bool allow_ridge = true) {
  data.validate();
  const Eigen::Index n = data.n();
  MatrixXd X;
  std::vector<std::string> names;
  if (intercept) {
    X.resize(n, data.p() + 1);
    X.col(0).setOnes();
    X.rightCols(data.p()) = data.X;
    names.push_back("(intercept)");
  } else {
    X = data.X;
  }
  for (Eigen::Index j = 0; j < data.p(); ++j)
    names.push_back(data.names.empty() ? "x" + std::to_string(j + 1) : data.names[j]);

  const Eigen::Index p = X.cols();
  if (n <= p) throw config_error("fit_ols: requires n > p (screen first)");

  MatrixXd xtx = X.transpose() * X;
  Eigen::LDLT<MatrixXd> solver(xtx);
  bool ridge = false;
  auto singular = [&]() {
    if (solver.info() != Eigen::Success) return true;
    const auto d = solver.vectorD();
    return !(d.array() > d.maxCoeff() * 1e-12).all();
  };
  if (singular()) {
    if (!allow_ridge) throw numeric_error("fit_ols: X'X is rank deficient");
    xtx += (1e-8 * xtx.trace() / static_cast<double>(p)) * MatrixXd::Identity(p, p);
    solver.compute(xtx);
    if (solver.info() != Eigen::Success || singular())
      throw numeric_error("fit_ols: X'X not factorizable after ridge");
    ridge = true;
  }

  ModelFit fit;
  fit.family = ModelFamily::LinearOLS;
  fit.intercept = intercept;
  fit.names = std::move(names);
  fit.X = std::move(X);
  fit.theta_hat = solver.solve(fit.X.transpose() * data.y);
  fit.resid = data.y - fit.X * fit.theta_hat;
  fit.sigma2 = fit.resid.squaredNorm() / static_cast<double>(n - p);
  fit.a_n = std::sqrt(static_cast<double>(n));
  fit.V_n = fit.sigma2 * (xtx / static_cast<double>(n)).inverse();
  fit.ridge_applied = ridge;
  fit.hessian = xtx;
  fit.hessian_solver = solver;
  fit.grad_units = fit.X.array().colwise() * fit.resid.array();  // rows x_i r_i
  return fit;
}

namespace detail {

// Derivative-free simplex minimizer for the REML criterion (low dimension,
// criterion cheap to evaluate).
inline VectorXd nelder_mead(const std::function<double(const VectorXd&)>& f, VectorXd x0,
                            double step, double ftol_rel, int max_iter, int* iters_used = nullptr) {
  const int d = static_cast<int>(x0.size());
  std::vector<VectorXd> pts(d + 1, x0);
  std::vector<double> val(d + 1);
  for (int i = 0; i < d; ++i) pts[i + 1][i] += step;
  for (int i = 0; i <= d; ++i) val[i] = f(pts[i]);

  auto order = [&]() {
    std::vector<int> idx(d + 1);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](int a, int b) { return val[a] < val[b]; });
    std::vector<VectorXd> p2(d + 1);
    std::vector<double> v2(d + 1);
    for (int i = 0; i <= d; ++i) {
      p2[i] = pts[idx[i]];
      v2[i] = val[idx[i]];
    }
    pts = std::move(p2);
    val = std::move(v2);
  };

  int it = 0;
  for (; it < max_iter; ++it) {
    order();
    const double spread = std::abs(val[d] - val[0]);
    if (spread <= ftol_rel * (std::abs(val[0]) + 1e-12)) break;

    VectorXd centroid = VectorXd::Zero(d);
    for (int i = 0; i < d; ++i) centroid += pts[i];
    centroid /= static_cast<double>(d);

    VectorXd xr = centroid + (centroid - pts[d]);
    double fr = f(xr);
    if (fr < val[0]) {
      VectorXd xe = centroid + 2.0 * (centroid - pts[d]);
      double fe = f(xe);
      if (fe < fr) {
        pts[d] = xe;
        val[d] = fe;
      } else {
        pts[d] = xr;
        val[d] = fr;
      }
    } else if (fr < val[d - 1]) {
      pts[d] = xr;
      val[d] = fr;
    } else {
      VectorXd xc = centroid + 0.5 * (pts[d] - centroid);
      double fc = f(xc);
      if (fc < val[d]) {
        pts[d] = xc;
        val[d] = fc;
      } else {
        for (int i = 1; i <= d; ++i) {
          pts[i] = pts[0] + 0.5 * (pts[i] - pts[0]);
          val[i] = f(pts[i]);
        }
      }
    }
  }
  order();
  if (iters_used) *iters_used = it;
  return pts[0];
}

}  // namespace detail

struct LmmOptions {
  // Columns of X carrying a random slope, in addition to the per-group
  // random intercept (always present). Empty = random intercept only.
  std::vector<int> random_slope_cols;
  double ftol_rel = 1e-8;
  int max_iter = 2000;
};

namespace detail {

struct GroupIndex {
  std::vector<std::pair<int, int>> spans;  // [begin, end) after ordering
  std::vector<int> order;                  // row permutation: sorted-by-group
};

inline GroupIndex index_groups(const std::vector<int>& group) {
  GroupIndex gi;
  const int n = static_cast<int>(group.size());
  gi.order.resize(n);
  std::iota(gi.order.begin(), gi.order.end(), 0);
  std::stable_sort(gi.order.begin(), gi.order.end(),
                   [&](int a, int b) { return group[a] < group[b]; });
  int begin = 0;
  for (int i = 1; i <= n; ++i) {
    if (i == n || group[gi.order[i]] != group[gi.order[begin]]) {
      gi.spans.emplace_back(begin, i);
      begin = i;
    }
  }
  return gi;
}

}  // namespace detail

// REML fit of y = X beta + Z u + eps with independent groups, u ~ N(0, Delta)
// per group, eps ~ N(0, sigma^2 I). The variance ratio matrix Gamma =
// Delta / sigma^2 is optimized through its Cholesky factor (log-diagonal),
// with sigma^2 profiled out in closed form.
inline ModelFit fit_lmm(const Dataset& data, const LmmOptions& opts = {}) {
  data.validate();
  if (!data.has_groups()) throw config_error("fit_lmm: dataset has no group labels");

  const auto gi = detail::index_groups(data.group);
  const int m = static_cast<int>(gi.spans.size());
  const Eigen::Index n = data.n();
  const Eigen::Index p = data.p();
  if (n <= p) throw config_error("fit_lmm: requires n > p");
  for (int c : opts.random_slope_cols)
    if (c < 0 || c >= p) throw config_error("fit_lmm: random slope column out of range");

  // Reorder rows by group so each group is a contiguous block.
  MatrixXd X(n, p);
  VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    X.row(i) = data.X.row(gi.order[i]);
    y[i] = data.y[gi.order[i]];
  }
  const int q = 1 + static_cast<int>(opts.random_slope_cols.size());
  std::vector<MatrixXd> Z(m);
  for (int g = 0; g < m; ++g) {
    const auto [b, e] = gi.spans[g];
    MatrixXd Zg(e - b, q);
    Zg.col(0).setOnes();
    for (int k = 0; k < q - 1; ++k) Zg.col(k + 1) = X.block(b, opts.random_slope_cols[k], e - b, 1);
    Z[g] = std::move(Zg);
  }

  // theta = lower-triangular Cholesky parameters of Gamma, diagonal on log scale.
  const int npar = q * (q + 1) / 2;
  auto unpack = [&](const VectorXd& th) {
    MatrixXd L = MatrixXd::Zero(q, q);
    int idx = 0;
    for (int i = 0; i < q; ++i)
      for (int j = 0; j <= i; ++j, ++idx) L(i, j) = (i == j) ? std::exp(th[idx]) : th[idx];
    return L;
  };

  struct Profiled {
    VectorXd beta;
    double sigma2 = 0.0;
    double crit = 0.0;
    std::vector<MatrixXd> vinv;  // per-group (I + Z Gamma Z')^{-1}
  };
  auto profile = [&](const MatrixXd& gamma) {
    Profiled out;
    out.vinv.resize(m);
    MatrixXd xtvx = MatrixXd::Zero(p, p);
    VectorXd xtvy = VectorXd::Zero(p);
    double logdet = 0.0;
    for (int g = 0; g < m; ++g) {
      const auto [b, e] = gi.spans[g];
      const int ng = e - b;
      MatrixXd Vg = MatrixXd::Identity(ng, ng) + Z[g] * gamma * Z[g].transpose();
      Eigen::LLT<MatrixXd> llt(Vg);
      if (llt.info() != Eigen::Success) throw numeric_error("fit_lmm: group covariance not PD");
      logdet += 2.0 * llt.matrixLLT().diagonal().array().log().sum();
      out.vinv[g] = llt.solve(MatrixXd::Identity(ng, ng));
      xtvx.noalias() += X.middleRows(b, ng).transpose() * out.vinv[g] * X.middleRows(b, ng);
      xtvy.noalias() += X.middleRows(b, ng).transpose() * out.vinv[g] * y.segment(b, ng);
    }
    Eigen::LDLT<MatrixXd> xs(xtvx);
    out.beta = xs.solve(xtvy);
    double quad = 0.0;
    for (int g = 0; g < m; ++g) {
      const auto [b, e] = gi.spans[g];
      VectorXd rg = y.segment(b, e - b) - X.middleRows(b, e - b) * out.beta;
      quad += rg.dot(out.vinv[g] * rg);
    }
    out.sigma2 = quad / static_cast<double>(n - p);
    const double ld_x = std::log(xs.vectorD().array().abs().prod());
    out.crit = static_cast<double>(n - p) * std::log(std::max(out.sigma2, 1e-300)) + logdet + ld_x;
    return out;
  };

  auto criterion = [&](const VectorXd& th) {
    MatrixXd L = unpack(th);
    for (int i = 0; i < q; ++i)
      if (!std::isfinite(L(i, i)) || L(i, i) > 1e8) return 1e30;
    if (!L.allFinite()) return 1e30;
    return profile(L * L.transpose()).crit;
  };

  VectorXd th0 = VectorXd::Zero(npar);
  {
    int idx = 0;
    for (int i = 0; i < q; ++i)
      for (int j = 0; j <= i; ++j, ++idx)
        if (i == j) th0[idx] = std::log(0.5);
  }
  int iters = 0;
  VectorXd th = detail::nelder_mead(criterion, th0, 0.7, opts.ftol_rel, opts.max_iter, &iters);
  if (iters >= opts.max_iter)
    throw numeric_error("fit_lmm: variance-component optimizer did not converge");

  MatrixXd L = unpack(th);
  Profiled best = profile(L * L.transpose());

  ModelFit fit;
  fit.family = ModelFamily::LinearMixedREML;
  fit.names = data.names.empty() ? std::vector<std::string>() : data.names;
  if (fit.names.empty())
    for (Eigen::Index j = 0; j < p; ++j) fit.names.push_back("x" + std::to_string(j + 1));
  fit.X = std::move(X);
  fit.theta_hat = best.beta;
  fit.resid = y - fit.X * best.beta;
  fit.sigma2 = best.sigma2;
  fit.delta = best.sigma2 * (L * L.transpose());
  fit.a_n = std::sqrt(static_cast<double>(n));
  fit.group_spans = gi.spans;

  // V-hat^{-1} = (sigma^2 (I + Z Gamma Z'))^{-1}; gradient unit = group.
  fit.vinv_blocks.resize(m);
  MatrixXd xtvx = MatrixXd::Zero(p, p);
  fit.grad_units.resize(m, p);
  for (int g = 0; g < m; ++g) {
    const auto [b, e] = gi.spans[g];
    const int ng = e - b;
    fit.vinv_blocks[g] = best.vinv[g] / best.sigma2;
    xtvx.noalias() +=
        fit.X.middleRows(b, ng).transpose() * fit.vinv_blocks[g] * fit.X.middleRows(b, ng);
    fit.grad_units.row(g) =
        (fit.X.middleRows(b, ng).transpose() * (fit.vinv_blocks[g] * fit.resid.segment(b, ng)))
            .transpose();
  }
  fit.hessian = xtvx;
  fit.hessian_solver.compute(xtvx);
  fit.V_n = static_cast<double>(n) * xtvx.inverse();
  return fit;
}

// Post-selection refit used for prediction: coefficients on the given
// support, zeros elsewhere. Mixed fits keep the random intercept and retain
// random slopes only for columns that stay in the model.
inline VectorXd refit_on_support(const Dataset& data, ModelFamily family,
                                 const std::vector<int>& support,
                                 const LmmOptions& lmm_opts = {}) {
  const int p = static_cast<int>(data.p());
  VectorXd beta = VectorXd::Zero(p);
  if (support.empty()) return beta;

  Dataset sub;
  sub.y = data.y;
  sub.group = data.group;
  sub.X.resize(data.X.rows(), static_cast<Eigen::Index>(support.size()));
  for (std::size_t k = 0; k < support.size(); ++k)
    sub.X.col(static_cast<Eigen::Index>(k)) = data.X.col(support[k]);

  VectorXd coef;
  if (family == ModelFamily::LinearMixedREML) {
    LmmOptions opts = lmm_opts;
    opts.random_slope_cols.clear();
    for (int c : lmm_opts.random_slope_cols) {
      auto it = std::find(support.begin(), support.end(), c);
      if (it != support.end())
        opts.random_slope_cols.push_back(static_cast<int>(it - support.begin()));
    }
    coef = fit_lmm(sub, opts).theta_hat;
  } else {
    coef = fit_ols(sub).theta_hat;
  }
  for (std::size_t k = 0; k < support.size(); ++k)
    beta[support[k]] = coef[static_cast<Eigen::Index>(k)];
  return beta;
}

}  // namespace evsel
