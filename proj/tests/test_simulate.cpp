#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>

#include "evsel/model.hpp"
#include "evsel/simulate.hpp"

using namespace evsel;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

double column_corr(const MatrixXd& x, int a, int b) {
  VectorXd ca = x.col(a).array() - x.col(a).mean();
  VectorXd cb = x.col(b).array() - x.col(b).mean();
  return ca.dot(cb) / (ca.norm() * cb.norm());
}

}  // namespace

TEST_CASE("independent columns decorrelate at the CLT rate", "[simulate]") {
  SimConfig cfg = SimConfig::linear_low(0.0);
  cfg.p = 10;
  cfg.beta0 = VectorXd::Zero(10);
  cfg.beta0.head(2).setOnes();
  cfg.seed = 5;
  Dataset d = generate_one(cfg, 0, stream::kSimTrain);
  const double bound = 3.0 / std::sqrt(double(cfg.n));
  for (int j = 0; j + 1 < 10; ++j) REQUIRE(std::abs(column_corr(d.X, j, j + 1)) < bound);
}

TEST_CASE("the AR design hits its nominal adjacent correlation", "[simulate]") {
  SimConfig cfg = SimConfig::linear_low(0.9);
  cfg.seed = 6;
  Dataset d = generate_one(cfg, 0, stream::kSimTrain);
  for (int j : {0, 20, 40}) {
    REQUIRE(column_corr(d.X, j, j + 1) == Catch::Approx(0.9).margin(0.05));
  }
  // lag-2 correlation near rho^2
  REQUIRE(column_corr(d.X, 10, 12) == Catch::Approx(0.81).margin(0.06));
}

TEST_CASE("mixed groups carry the configured covariance structure", "[simulate]") {
  SimConfig cfg = SimConfig::mixed(2);
  cfg.lmm.m = 500;
  cfg.lmm.n_i = 5;
  cfg.n = 2500;
  cfg.seed = 7;
  Dataset d = generate_one(cfg, 0, stream::kSimTrain);

  // residual second moments against sigma^2 I + Z Delta Z' group by group
  double emp_sq = 0.0, emp_sum_sq = 0.0, exp_sq = 0.0, exp_sum_sq = 0.0;
  const auto& delta = cfg.lmm.delta;
  for (int g = 0; g < cfg.lmm.m; ++g) {
    const int b = g * cfg.lmm.n_i, ni = cfg.lmm.n_i;
    MatrixXd z(ni, 4);
    z.col(0).setOnes();
    for (int k = 0; k < 3; ++k) z.col(k + 1) = d.X.block(b, cfg.lmm.slope_cols[k], ni, 1);
    VectorXd r = d.y.segment(b, ni) - d.X.middleRows(b, ni) * cfg.beta0;
    MatrixXd v = z * delta * z.transpose() + MatrixXd::Identity(ni, ni);
    emp_sq += r.squaredNorm();
    exp_sq += v.trace();
    emp_sum_sq += r.sum() * r.sum();
    exp_sum_sq += v.sum();
  }
  REQUIRE(emp_sq == Catch::Approx(exp_sq).epsilon(0.15));
  REQUIRE(emp_sum_sq == Catch::Approx(exp_sum_sq).epsilon(0.15));
}

TEST_CASE("generation is bit-identical per (config, seed, replicate)", "[simulate]") {
  SimConfig cfg = SimConfig::linear_high(0.7);
  cfg.seed = 8;
  SimReplicate a = generate(cfg, 3);
  SimReplicate b = generate(cfg, 3);
  REQUIRE(a.train.X == b.train.X);
  REQUIRE(a.train.y == b.train.y);
  REQUIRE(a.test.X == b.test.X);
  SimReplicate c = generate(cfg, 4);
  REQUIRE(a.train.y != c.train.y);
  REQUIRE(a.train.y != a.test.y);  // test set is an independent draw
}

TEST_CASE("rate metrics match hand-enumerated cases", "[simulate]") {
  SimConfig cfg;
  cfg.p = 5;
  cfg.n = 50;
  cfg.beta0 = VectorXd::Zero(5);
  cfg.beta0[0] = 1.0;
  cfg.beta0[1] = 1.0;
  cfg.seed = 9;
  Dataset test = generate_one(cfg, 0, stream::kSimTest);

  SECTION("a perfect selection scores clean") {
    MetricSet m = evaluate({0, 1}, cfg.beta0, cfg, test);
    REQUIRE(m.fpr_pct == 0.0);
    REQUIRE(m.fnr_pct == 0.0);
    REQUIRE(m.correct_model_pct == 100.0);
    REQUIRE(m.pe == 0.0);
    REQUIRE(m.sparsity == 2.0);
  }
  SECTION("one false positive and one miss") {
    VectorXd bh = VectorXd::Zero(5);
    bh[0] = 0.9;
    bh[3] = 0.1;
    MetricSet m = evaluate({0, 3}, bh, cfg, test);
    REQUIRE(m.fpr_pct == Catch::Approx(100.0 / 3.0));
    REQUIRE(m.fnr_pct == Catch::Approx(50.0));
    REQUIRE(m.correct_model_pct == 0.0);
    REQUIRE(m.pe > 0.0);
  }
  SECTION("the empty selection misses everything") {
    MetricSet m = evaluate({}, VectorXd::Zero(5), cfg, test);
    REQUIRE(m.fnr_pct == 100.0);
    REQUIRE(m.sparsity == 0.0);
  }
  SECTION("a zero truth signal is rejected") {
    SimConfig zero = cfg;
    zero.beta0.setZero();
    REQUIRE_THROWS_AS(evaluate({}, VectorXd::Zero(5), zero, test), config_error);
  }
}

TEST_CASE("refit on support zeroes the complement and matches a direct fit", "[simulate]") {
  SimConfig cfg = SimConfig::linear_low(0.5);
  cfg.n = 200;
  cfg.p = 8;
  cfg.beta0 = VectorXd::Zero(8);
  cfg.beta0.head(3).setOnes();
  cfg.seed = 10;
  Dataset d = generate_one(cfg, 0, stream::kSimTrain);

  VectorXd refit = refit_on_support(d, ModelFamily::LinearOLS, {1, 4});
  REQUIRE(refit[0] == 0.0);
  REQUIRE(refit[7] == 0.0);

  Dataset sub;
  sub.y = d.y;
  sub.X.resize(200, 2);
  sub.X.col(0) = d.X.col(1);
  sub.X.col(1) = d.X.col(4);
  VectorXd direct = fit_ols(sub).theta_hat;
  REQUIRE(refit[1] == Catch::Approx(direct[0]).margin(1e-12));
  REQUIRE(refit[4] == Catch::Approx(direct[1]).margin(1e-12));

  REQUIRE(refit_on_support(d, ModelFamily::LinearOLS, {}).isZero(0.0));
}
