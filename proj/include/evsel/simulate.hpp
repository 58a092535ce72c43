#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "evsel/common.hpp"
#include "evsel/model.hpp"
#include "evsel/rng.hpp"

namespace evsel {

enum class Scenario { LinearLowDim, LinearHighDim, MixedIntercept };

struct LmmDesign {
  int m = 60;
  int n_i = 10;
  MatrixXd delta;                         // random-effect covariance (q x q)
  std::vector<int> slope_cols = {0, 1, 2};  // X columns with a random slope
};

inline MatrixXd default_mixed_delta() {
  MatrixXd d = MatrixXd::Zero(4, 4);
  d(0, 0) = 9.0;
  d(1, 0) = d(0, 1) = 4.8;
  d(1, 1) = 4.0;
  d(2, 0) = d(0, 2) = 0.6;
  d(2, 1) = d(1, 2) = 1.0;
  d(2, 2) = 1.0;
  return d;
}

struct SimConfig {
  Scenario scenario = Scenario::LinearLowDim;
  int n = 1000;
  int p = 60;
  double rho = 0.5;
  VectorXd beta0;
  double noise_sd = 1.0;
  LmmDesign lmm;
  int replicates = 100;
  std::uint64_t seed = 1;

  static SimConfig linear_low(double rho = 0.5) {
    SimConfig c;
    c.scenario = Scenario::LinearLowDim;
    c.n = 1000;
    c.p = 60;
    c.rho = rho;
    c.beta0 = VectorXd::Zero(60);
    c.beta0.head(5).setOnes();
    return c;
  }
  static SimConfig linear_high(double rho = 0.5) {
    SimConfig c;
    c.scenario = Scenario::LinearHighDim;
    c.n = 60;
    c.p = 1000;
    c.rho = rho;
    c.beta0 = VectorXd::Zero(1000);
    c.beta0.head(5).setOnes();
    return c;
  }
  static SimConfig mixed(int setting = 2) {
    SimConfig c;
    c.scenario = Scenario::MixedIntercept;
    c.lmm.m = setting == 1 ? 30 : 60;
    c.lmm.n_i = setting == 1 ? 5 : 10;
    c.lmm.delta = default_mixed_delta();
    c.n = c.lmm.m * c.lmm.n_i;
    c.p = 9;
    c.rho = 0.0;
    c.beta0 = VectorXd::Zero(9);
    c.beta0[1] = 1.0;
    c.beta0[2] = 1.0;
    return c;
  }

  std::vector<int> true_support() const {
    std::vector<int> s;
    for (Eigen::Index j = 0; j < beta0.size(); ++j)
      if (beta0[j] != 0.0) s.push_back(static_cast<int>(j));
    return s;
  }
};

namespace detail {

// Rows of X from N_p(0, Sigma) with (Sigma)_ij = rho^|i-j|; the stationary
// AR(1) recursion is the closed-form Cholesky applied column by column.
inline MatrixXd ar1_design(int n, int p, double rho, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  MatrixXd x(n, p);
  const double c = std::sqrt(1.0 - rho * rho);
  for (int i = 0; i < n; ++i) {
    x(i, 0) = gauss(rng);
    for (int j = 1; j < p; ++j) x(i, j) = rho * x(i, j - 1) + c * gauss(rng);
  }
  return x;
}

inline MatrixXd psd_sqrt(const MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(m);
  VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * ev.asDiagonal();
}

}  // namespace detail

// One replicate's training set; deterministic per (config.seed, replicate, which).
inline Dataset generate_one(const SimConfig& cfg, int replicate, std::uint64_t which_stream) {
  auto rng = substream(cfg.seed, static_cast<std::uint64_t>(replicate), which_stream);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Dataset d;
  if (cfg.scenario == Scenario::MixedIntercept) {
    const int m = cfg.lmm.m, ni = cfg.lmm.n_i, p = cfg.p;
    const int n = m * ni;
    d.X.resize(n, p);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < p; ++j) d.X(i, j) = gauss(rng);
    d.y = d.X * cfg.beta0;
    for (int i = 0; i < n; ++i) d.y[i] += cfg.noise_sd * gauss(rng);
    d.group.resize(n);
    const MatrixXd L = detail::psd_sqrt(cfg.lmm.delta);
    const int q = static_cast<int>(cfg.lmm.delta.rows());
    for (int g = 0; g < m; ++g) {
      VectorXd z(q);
      for (int k = 0; k < q; ++k) z[k] = gauss(rng);
      const VectorXd u = L * z;
      for (int i = g * ni; i < (g + 1) * ni; ++i) {
        d.group[i] = g;
        double zu = u[0];  // random intercept
        for (std::size_t k = 0; k < cfg.lmm.slope_cols.size(); ++k)
          zu += u[static_cast<int>(k) + 1] * d.X(i, cfg.lmm.slope_cols[k]);
        d.y[i] += zu;
      }
    }
  } else {
    d.X = detail::ar1_design(cfg.n, cfg.p, cfg.rho, rng);
    d.y = d.X * cfg.beta0;
    for (int i = 0; i < cfg.n; ++i) d.y[i] += cfg.noise_sd * gauss(rng);
  }
  for (int j = 0; j < cfg.p; ++j) d.names.push_back("x" + std::to_string(j + 1));
  return d;
}

struct SimReplicate {
  Dataset train;
  Dataset test;
};

inline SimReplicate generate(const SimConfig& cfg, int replicate) {
  return {generate_one(cfg, replicate, stream::kSimTrain),
          generate_one(cfg, replicate, stream::kSimTest)};
}

struct MetricSet {
  double sparsity = 0.0;
  double pe = 0.0;  // squared relative prediction error on the test design
  double fpr_pct = 0.0;
  double fnr_pct = 0.0;
  double correct_model_pct = 0.0;  // 100 when selected == supp(beta0)
};

inline MetricSet evaluate(const std::vector<int>& selected,
                          const Eigen::Ref<const VectorXd>& beta_hat_refit, const SimConfig& truth,
                          const Dataset& test) {
  if (beta_hat_refit.size() != truth.beta0.size() || test.p() != truth.beta0.size())
    throw config_error("evaluate: dimension mismatch");
  const double denom = (test.X * truth.beta0).squaredNorm();
  if (denom == 0.0) throw config_error("evaluate: X_test beta0 is identically zero");

  MetricSet m;
  m.sparsity = static_cast<double>((beta_hat_refit.array() != 0.0).count());
  m.pe = (test.X * (beta_hat_refit - truth.beta0)).squaredNorm() / denom;

  const auto supp = truth.true_support();
  std::vector<int> sel = selected;
  std::sort(sel.begin(), sel.end());
  std::vector<int> fp, fn;
  std::set_difference(sel.begin(), sel.end(), supp.begin(), supp.end(), std::back_inserter(fp));
  std::set_difference(supp.begin(), supp.end(), sel.begin(), sel.end(), std::back_inserter(fn));
  const int p = static_cast<int>(truth.beta0.size());
  const int s0 = static_cast<int>(supp.size());
  m.fpr_pct = p > s0 ? 100.0 * static_cast<double>(fp.size()) / static_cast<double>(p - s0) : 0.0;
  m.fnr_pct = s0 > 0 ? 100.0 * static_cast<double>(fn.size()) / static_cast<double>(s0) : 0.0;
  m.correct_model_pct = (fp.empty() && fn.empty()) ? 100.0 : 0.0;
  return m;
}

}  // namespace evsel
