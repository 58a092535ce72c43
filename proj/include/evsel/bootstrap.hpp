#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "evsel/common.hpp"
#include "evsel/model.hpp"
#include "evsel/rng.hpp"

namespace evsel {

enum class WeightKind { GammaBayesian, MoonMultinomial };

// Exchangeable nonnegative resampling weights with mean 1.
//   GammaBayesian(tau_n): i.i.d. Gamma, variance tau_n^2.
//   MoonMultinomial(m):   (k/m) * Multinomial(m, uniform over k cells).
struct WeightScheme {
  WeightKind kind = WeightKind::GammaBayesian;
  double tau_n = 0.0;
  int m = 0;

  static WeightScheme gamma(double tau_n) { return {WeightKind::GammaBayesian, tau_n, 0}; }
  static WeightScheme moon(int m) { return {WeightKind::MoonMultinomial, 0.0, m}; }

  void validate() const {
    if (kind == WeightKind::GammaBayesian && !(tau_n > 0.0))
      throw config_error("WeightScheme: GammaBayesian requires tau_n > 0");
    if (kind == WeightKind::MoonMultinomial && m < 1)
      throw config_error("WeightScheme: MoonMultinomial requires m >= 1");
  }

  // Standard deviation of one weight, given the number of cells k.
  double effective_tau(Eigen::Index k) const {
    if (kind == WeightKind::GammaBayesian) return tau_n;
    const double kd = static_cast<double>(k);
    return std::sqrt(kd / static_cast<double>(m) * (1.0 - 1.0 / kd));
  }
};

inline VectorXd draw_weights(const WeightScheme& scheme, Eigen::Index n, std::mt19937_64& rng) {
  scheme.validate();
  if (n < 1) throw config_error("draw_weights: n must be >= 1");
  VectorXd w(n);
  if (scheme.kind == WeightKind::GammaBayesian) {
    const double shape = 1.0 / (scheme.tau_n * scheme.tau_n);
    std::gamma_distribution<double> gamma(shape, scheme.tau_n * scheme.tau_n);
    for (Eigen::Index i = 0; i < n; ++i) w[i] = gamma(rng);
  } else {
    w.setZero();
    std::uniform_int_distribution<Eigen::Index> cell(0, n - 1);
    for (int draw = 0; draw < scheme.m; ++draw) w[cell(rng)] += 1.0;
    w *= static_cast<double>(n) / static_cast<double>(scheme.m);
  }
  return w;
}

inline VectorXd draw_weights(const WeightScheme& scheme, Eigen::Index n, std::uint64_t seed) {
  auto rng = std::mt19937_64(splitmix64(seed));
  return draw_weights(scheme, n, rng);
}

enum class HessianMode { Frozen, Reweighted };

struct BootstrapEnsemble {
  MatrixXd draws;  // R x p, row r = theta-hat_{r*}
  VectorXd theta_hat;
  double tau_n = 0.0;  // effective weight standard deviation used
  std::uint64_t seed = 0;
  WeightScheme scheme;
  std::vector<std::string> names;

  Eigen::Index R() const { return draws.rows(); }
  Eigen::Index p() const { return draws.cols(); }

  void validate() const {
    if (draws.rows() < 2) throw config_error("BootstrapEnsemble: need R >= 2");
    if (!all_finite(draws)) throw numeric_error("BootstrapEnsemble: non-finite draw");
  }

  void write_csv(std::ostream& os) const {
    for (std::size_t j = 0; j < names.size(); ++j) os << (j ? "," : "") << names[j];
    os << "\n";
    for (Eigen::Index r = 0; r < draws.rows(); ++r) {
      for (Eigen::Index j = 0; j < draws.cols(); ++j) {
        if (j) os << ",";
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.17g", draws(r, j));
        os << buf;
      }
      os << "\n";
    }
  }
};

namespace detail {

// Per-draw weights for the ensemble. OLS weights the estimating-equation
// terms directly through the scheme. The mixed-model recipe uses one weight
// per group, Gamma(1,1) shifted by +1 (shift is a no-op: group gradients sum
// to zero at the REML estimate), with the spread knob applied as an explicit
// prefactor instead of through the weight variance.
struct EnsembleWeights {
  VectorXd w;
  double kappa = 1.0;
};

inline EnsembleWeights ensemble_weights(const ModelFit& fit, const WeightScheme& scheme,
                                        std::mt19937_64& rng) {
  EnsembleWeights ew;
  const Eigen::Index k = fit.n_units();
  if (fit.family == ModelFamily::LinearMixedREML && scheme.kind == WeightKind::GammaBayesian) {
    std::gamma_distribution<double> gamma11(1.0, 1.0);
    ew.w.resize(k);
    for (Eigen::Index i = 0; i < k; ++i) ew.w[i] = gamma11(rng) + 1.0;
    ew.kappa = scheme.tau_n;
  } else {
    ew.w = draw_weights(scheme, k, rng);
    ew.kappa = 1.0;
  }
  return ew;
}

}  // namespace detail

// One-step resampled coefficient vector. Frozen mode reuses the Hessian
// evaluated once at theta-hat, so the map is linear in the weights; the
// perturbation is kappa * H^{-1} * sum_i w_i Psi'_i(theta-hat). Reweighted
// mode (OLS) recomputes the weighted Hessian, which makes the step identical
// to the exact weighted re-solve.
inline VectorXd one_step_row(const ModelFit& fit, const Eigen::Ref<const VectorXd>& weights,
                             double kappa = 1.0, HessianMode mode = HessianMode::Frozen) {
  if (weights.size() != fit.n_units())
    throw config_error("one_step_row: weight length does not match gradient units");
  if (mode == HessianMode::Frozen) {
    VectorXd grad = fit.grad_units.transpose() * weights;
    return fit.theta_hat + kappa * fit.hessian_solver.solve(grad);
  }
  if (fit.family != ModelFamily::LinearOLS)
    throw config_error("one_step_row: reweighted Hessian applies to OLS fits only");
  MatrixXd hw = fit.X.transpose() * weights.asDiagonal() * fit.X;
  Eigen::LDLT<MatrixXd> solver(hw);
  const auto d = solver.vectorD();
  if (solver.info() != Eigen::Success || !(d.array() > d.maxCoeff() * 1e-12).all())
    throw numeric_error("one_step_row: weighted Hessian is singular");
  VectorXd grad = fit.X.transpose() * (weights.array() * fit.resid.array()).matrix();
  return fit.theta_hat + kappa * solver.solve(grad);
}

// Generates the R x p ensemble with per-draw substreams derived from
// (seed, r): parallel and serial execution produce identical draws.
inline BootstrapEnsemble one_step_ensemble(const ModelFit& fit, const WeightScheme& scheme, int R,
                                           std::uint64_t seed,
                                           HessianMode mode = HessianMode::Frozen) {
  scheme.validate();
  if (R < 2) throw config_error("one_step_ensemble: R must be >= 2");
  if (fit.grad_units.size() == 0) throw config_error("one_step_ensemble: fit caches missing");

  BootstrapEnsemble ens;
  ens.theta_hat = fit.theta_hat;
  ens.scheme = scheme;
  ens.seed = seed;
  ens.names = fit.names;
  ens.tau_n = fit.family == ModelFamily::LinearMixedREML && scheme.kind == WeightKind::GammaBayesian
                  ? scheme.tau_n
                  : scheme.effective_tau(fit.n_units());
  ens.draws.resize(R, fit.p());

  bool failed = false;
#pragma omp parallel for schedule(static)
  for (int r = 0; r < R; ++r) {
    try {
      auto rng = substream(seed, static_cast<std::uint64_t>(r));
      auto ew = detail::ensemble_weights(fit, scheme, rng);
      VectorXd row;
      try {
        row = one_step_row(fit, ew.w, ew.kappa, mode);
      } catch (const numeric_error&) {
        // flagged singular draw: redraw once, then give up
        auto rng2 = substream(seed, static_cast<std::uint64_t>(r), stream::kWeightRedraw);
        auto ew2 = detail::ensemble_weights(fit, scheme, rng2);
        row = one_step_row(fit, ew2.w, ew2.kappa, mode);
      }
      ens.draws.row(r) = row.transpose();
    } catch (...) {
#pragma omp critical
      failed = true;
    }
  }
  if (failed)
    throw numeric_error("one_step_ensemble: weighted Hessian singular after redraw");
  ens.validate();
  return ens;
}

}  // namespace evsel
