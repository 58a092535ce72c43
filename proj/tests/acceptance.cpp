// Acceptance suite: one line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "evsel/bootstrap.hpp"
#include "evsel/depth.hpp"
#include "evsel/evalues.hpp"
#include "evsel/model.hpp"
#include "evsel/rng.hpp"
#include "evsel/simulate.hpp"
#include "evsel/tables.hpp"

using namespace evsel;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

int g_failures = 0;

void report(int criterion, bool pass, const std::string& detail) {
  std::printf("[%s] criterion %d: %s\n", pass ? "PASS" : "FAIL", criterion, detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list args;
  va_start(args, f);
  std::vsnprintf(buf, sizeof(buf), f, args);
  va_end(args);
  return buf;
}

MatrixXd random_gaussian(int r, int c, std::uint64_t seed, double scale = 1.0) {
  auto rng = std::mt19937_64(seed);
  std::normal_distribution<double> g(0.0, scale);
  MatrixXd m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = g(rng);
  return m;
}

// ---------------------------------------------------------------- criterion 1
void criterion1() {
  const auto start = std::chrono::steady_clock::now();
  LinearStudyConfig cfg;
  cfg.setting = 1;
  cfg.rho = 0.5;
  cfg.tau_labels = {"log", "0.1"};
  cfg.replicates = 30;
  cfg.seed = 20250801;
  auto rows = run_linear_study(cfg);
  const double minutes =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() / 60.0;

  const auto& log_row = rows[0];
  const auto& n01_row = rows[1];
  const bool sparsity_ok = log_row.sparsity >= 4.7 && log_row.sparsity <= 5.6;
  const bool pe_ok = log_row.pe <= 1.5e-3;
  const bool ordering_ok = n01_row.sparsity >= 2.0 * log_row.sparsity;
  const bool time_ok = minutes <= 30.0;
  report(1, sparsity_ok && pe_ok && ordering_ok && time_ok,
         fmt("table 1 setting 1 (rho=0.5, 30 reps): sparsity(log n)=%.2f in [4.7,5.6] (ref 5.01), "
             "PE=%.2e <= 1.5e-3 (ref 4.5e-4), sparsity(n^0.1)=%.2f >= 2x (ref 16.16), "
             "runtime=%.1f min <= 30",
             log_row.sparsity, log_row.pe, n01_row.sparsity, minutes));
}

// ---------------------------------------------------------------- criterion 2
void criterion2() {
  LinearStudyConfig cfg;
  cfg.setting = 2;
  cfg.rho = 0.5;
  cfg.tau_labels = {"log"};
  cfg.replicates = 30;
  cfg.seed = 20250802;
  auto rows = run_linear_study(cfg);
  const bool sparsity_ok = rows[0].sparsity >= 4.0 && rows[0].sparsity <= 10.0;
  const bool pe_ok = rows[0].pe <= 0.10;
  report(2, sparsity_ok && pe_ok,
         fmt("table 1 setting 2 (n=60, p=1000, SIS to 59, 30 reps): sparsity=%.2f in [4,10] "
             "(ref 6.63), PE=%.3f <= 0.10 (ref 4.5e-2)",
             rows[0].sparsity, rows[0].pe));
}

// ---------------------------------------------------------------- criterion 3
void criterion3() {
  MixedStudyConfig cfg;
  cfg.setting = 2;
  cfg.taus = {7.0};
  cfg.replicates = 50;
  cfg.seed = 20250803;
  auto rows = run_mixed_study(cfg);
  const auto& r = rows[0];
  const bool ok =
      r.fpr_pct <= 2.0 && r.fnr_pct == 0.0 && r.model_size >= 2.0 && r.model_size <= 2.2;
  report(3, ok,
         fmt("table 2 setting 2 (tau=7, 50 reps): FPR%%=%.2f <= 2 (ref 0.3), FNR%%=%.2f == 0 "
             "(ref 0.0), size=%.3f in [2.0,2.2] (ref 2.01)",
             r.fpr_pct, r.fnr_pct, r.model_size));
}

// ---------------------------------------------------------------- criterion 4
void criterion4() {
  MixedStudyConfig cfg;
  cfg.setting = 2;
  cfg.taus = {8.0};
  cfg.replicates = 50;
  cfg.seed = 20250804;
  auto rows = run_mixed_study(cfg);
  const bool ok = rows[0].correct_pct >= 90.0;
  report(4, ok,
         fmt("table 3 setting 2 (tau=8, 50 reps): correct-model%%=%.1f >= 90 (ref 99)",
             rows[0].correct_pct));
}

// ---------------------------------------------------------------- criterion 5
void criterion5() {
  std::string detail;
  bool ok = true;

  {  // affine invariance: mahalanobis exact, sampled exact under orthogonal maps
    MatrixXd pts = random_gaussian(60, 4, 1001);
    MatrixXd raw = random_gaussian(4, 4, 1002);
    Eigen::HouseholderQR<MatrixXd> qr(raw);
    MatrixXd q = qr.householderQ();
    VectorXd b = VectorXd::LinSpaced(4, -1.0, 2.0);
    MatrixXd tpts = (pts * q.transpose()).rowwise() + b.transpose();
    MatrixXd a = random_gaussian(4, 4, 1003) + 3.0 * MatrixXd::Identity(4, 4);
    MatrixXd apts = (pts * a.transpose()).rowwise() + b.transpose();
    double worst_orth = 0.0, worst_mah = 0.0, worst_gen = 0.0;
    auto rng = std::mt19937_64(1004);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int k = 0; k < 8; ++k) {
      VectorXd x(4);
      for (int i = 0; i < 4; ++i) x[i] = g(rng);
      worst_mah =
          std::max(worst_mah,
                   std::abs(depth(x, PointCloud(pts), DepthKind::mahalanobis(), 7) -
                            depth(a * x + b, PointCloud(apts), DepthKind::mahalanobis(), 7)));
      for (auto kind : {DepthKind::halfspace(1000), DepthKind::projection(1000)}) {
        worst_orth = std::max(worst_orth, std::abs(depth(x, PointCloud(pts), kind, 7) -
                                                   depth(q * x + b, PointCloud(tpts), kind, 7)));
      }
      for (auto kind : {DepthKind::halfspace(5000), DepthKind::projection(5000)}) {
        worst_gen = std::max(worst_gen, std::abs(depth(x, PointCloud(pts), kind, 7) -
                                                 depth(a * x + b, PointCloud(apts), kind, 7)));
      }
    }
    ok = ok && worst_mah < 1e-10 && worst_orth < 1e-10 && worst_gen < 0.05;
    detail += fmt("affine(mah %.1e, orth %.1e, general %.3f) ", worst_mah, worst_orth, worst_gen);
  }

  {  // vanishing at infinity
    MatrixXd pts = random_gaussian(300, 3, 1005);
    const double radius = pts.rowwise().norm().maxCoeff();
    VectorXd far = VectorXd::Zero(3);
    far[1] = 1e6 * radius;
    double worst = 0.0;
    for (auto kind :
         {DepthKind::mahalanobis(), DepthKind::halfspace(2000), DepthKind::projection(2000)})
      worst = std::max(worst, depth(far, PointCloud(pts), kind, 3));
    ok = ok && worst < 1e-3;
    detail += fmt("vanish(%.1e) ", worst);
  }

  {  // ray monotonicity: mahalanobis exact, halfspace within 0.02 on a spherical gaussian
    MatrixXd pts = random_gaussian(10000, 3, 1006);
    PointCloud cloud(pts);
    DepthEvaluator mah(cloud, DepthKind::mahalanobis(), 1);
    DepthEvaluator half(cloud, DepthKind::halfspace(2000), 1);
    VectorXd mu = pts.colwise().mean();
    auto rng = std::mt19937_64(1007);
    std::normal_distribution<double> g(0.0, 1.0);
    double worst_mah = 0.0, worst_half = 0.0;
    for (int k = 0; k < 5; ++k) {
      VectorXd dir(3);
      for (int i = 0; i < 3; ++i) dir[i] = g(rng);
      dir *= 2.0 / dir.norm();
      double prev_m = mah.depth(mu), prev_h = half.depth(mu);
      for (double t : {0.25, 0.5, 0.75, 1.0}) {
        const double dm = mah.depth(mu + t * dir), dh = half.depth(mu + t * dir);
        worst_mah = std::max(worst_mah, dm - prev_m);
        worst_half = std::max(worst_half, dh - prev_h);
        prev_m = dm;
        prev_h = dh;
      }
    }
    ok = ok && worst_mah <= 1e-12 && worst_half <= 0.02;
    detail += fmt("monotone(mah %.1e, half %.3f) ", worst_mah, worst_half);
  }

  {  // determinism
    MatrixXd pts = random_gaussian(100, 4, 1008);
    VectorXd x = VectorXd::Constant(4, 0.2);
    bool det = true;
    for (auto kind : {DepthKind::halfspace(1000), DepthKind::projection(1000)})
      det = det && depth(x, PointCloud(pts), kind, 42) == depth(x, PointCloud(pts), kind, 42);
    ok = ok && det;
    detail += fmt("determinism(%s) ", det ? "bit-identical" : "MISMATCH");
  }

  {  // sampled halfspace vs exact 2-D oracle on 100 random 12-point clouds
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      MatrixXd pts2 = random_gaussian(12, 2, 2000 + trial);
      MatrixXd pts3 = MatrixXd::Zero(12, 3);
      pts3.leftCols(2) = pts2;
      auto rng = std::mt19937_64(3000 + trial);
      std::normal_distribution<double> g(0.0, 1.0);
      VectorXd x2(2);
      x2 << g(rng), g(rng);
      VectorXd x3 = VectorXd::Zero(3);
      x3.head(2) = x2;
      const double exact = exact_halfspace_2d(x2, PointCloud(pts2));
      const double sampled = depth(x3, PointCloud(pts3), DepthKind::halfspace(5000), trial);
      worst = std::max(worst, std::abs(sampled - exact));
    }
    ok = ok && worst <= 0.05;
    detail += fmt("sampled-vs-exact(%.3f <= 0.05)", worst);
  }

  report(5, ok, "depth axiom suite: " + detail);
}

// ---------------------------------------------------------------- criterion 6
void criterion6() {
  std::string detail;
  bool ok = true;

  Dataset d;
  {
    auto rng = std::mt19937_64(1101);
    std::normal_distribution<double> g(0.0, 1.0);
    d.X = random_gaussian(300, 8, 1102);
    VectorXd beta = VectorXd::LinSpaced(8, 1.0, -0.4);
    d.y = d.X * beta;
    for (int i = 0; i < 300; ++i) d.y[i] += g(rng);
  }
  ModelFit fit = fit_ols(d);

  {  // covariance vs the exact linear-map oracle at R = 2000
    const double tau = std::log(300.0);
    BootstrapEnsemble ens = one_step_ensemble(fit, WeightScheme::gamma(tau), 2000, 61u);
    MatrixXd s = fit.grad_units.transpose() * fit.grad_units;
    MatrixXd hinv = fit.hessian.inverse();
    MatrixXd oracle = tau * tau * hinv * s * hinv;
    VectorXd mean = ens.draws.colwise().mean();
    MatrixXd centered = ens.draws.rowwise() - mean.transpose();
    MatrixXd emp = centered.transpose() * centered / (ens.R() - 1.0);
    double worst_diag = 0.0;
    for (int j = 0; j < 8; ++j)
      worst_diag = std::max(worst_diag, std::abs(emp(j, j) - oracle(j, j)) / oracle(j, j));
    const double frob = (emp - oracle).norm() / oracle.norm();
    ok = ok && worst_diag <= 0.25 && frob <= 0.25;
    detail += fmt("cov-oracle(diag %.3f, frob %.3f <= 0.25) ", worst_diag, frob);
  }

  {  // tau scale law under shared weight draws
    VectorXd w = draw_weights(WeightScheme::gamma(2.0), 300, 62u);
    VectorXd w2 = VectorXd::Ones(300) + 2.0 * (w - VectorXd::Ones(300));
    VectorXd r1 = one_step_row(fit, w) - fit.theta_hat;
    VectorXd r2 = one_step_row(fit, w2) - fit.theta_hat;
    const double err = (r2 - 2.0 * r1).cwiseAbs().maxCoeff() / r1.cwiseAbs().maxCoeff();
    ok = ok && err < 1e-10;
    detail += fmt("scale-law(%.1e < 1e-10) ", err);
  }

  {  // one-step with reweighted Hessian == exact weighted re-solve, n=50, p=3
    Dataset small;
    auto rng = std::mt19937_64(1103);
    std::normal_distribution<double> g(0.0, 1.0);
    small.X = random_gaussian(50, 3, 1104);
    VectorXd beta(3);
    beta << 1.0, -0.5, 0.25;
    small.y = small.X * beta;
    for (int i = 0; i < 50; ++i) small.y[i] += g(rng);
    ModelFit sfit = fit_ols(small);
    double mean_err = 0.0;
    const int trials = 100;
    for (int t = 0; t < trials; ++t) {
      VectorXd w = draw_weights(WeightScheme::gamma(std::log(50.0)), 50, 7000u + t);
      VectorXd one = one_step_row(sfit, w, 1.0, HessianMode::Reweighted);
      VectorXd sw = w.cwiseSqrt();
      MatrixXd xs = sfit.X.array().colwise() * sw.array();
      VectorXd ys = small.y.array() * sw.array();
      VectorXd resolve = xs.colPivHouseholderQr().solve(ys);
      mean_err += ((one - resolve).cwiseAbs().sum() / 3.0) / resolve.cwiseAbs().maxCoeff();
    }
    mean_err /= trials;
    ok = ok && mean_err <= 1e-6;
    detail += fmt("resolve-identity(%.1e <= 1e-6)", mean_err);
  }

  report(6, ok, "bootstrap contracts: " + detail);
}

// ---------------------------------------------------------------- criterion 7
double bic_of(const Dataset& d, const std::vector<int>& support) {
  const int n = static_cast<int>(d.n());
  double rss;
  if (support.empty()) {
    rss = d.y.squaredNorm();
  } else {
    MatrixXd xs(d.n(), static_cast<Eigen::Index>(support.size()));
    for (std::size_t k = 0; k < support.size(); ++k)
      xs.col(static_cast<Eigen::Index>(k)) = d.X.col(support[k]);
    VectorXd coef = xs.colPivHouseholderQr().solve(d.y);
    rss = (d.y - xs * coef).squaredNorm();
  }
  return n * std::log(rss / n) + static_cast<double>(support.size()) * std::log(double(n));
}

void criterion7() {
  const int p = 8, n = 500, reps = 100;
  VectorXd beta(p);
  beta << 1.5, -1.0, 1.0, 0, 0, 0, 0, 0;
  int agree = 0;
  for (int rep = 0; rep < reps; ++rep) {
    auto rng = std::mt19937_64(5000 + rep);
    std::normal_distribution<double> g(0.0, 1.0);
    Dataset d;
    d.X = random_gaussian(n, p, 6000 + rep);
    d.y = d.X * beta;
    for (int i = 0; i < n; ++i) d.y[i] += g(rng);
    ModelFit fit = fit_ols(d);
    SelectConfig cfg;
    cfg.scheme = WeightScheme::gamma(std::log(double(n)));
    cfg.R = 1000;
    cfg.R1 = 1000;
    cfg.kind = DepthKind::halfspace(2000);
    cfg.seed = 7000 + rep;
    const auto selected = select(fit, cfg).selected;

    // exhaustive best-subset oracle under BIC
    std::vector<int> best;
    double best_bic = bic_of(d, {});
    for (unsigned mask = 1; mask < (1u << p); ++mask) {
      std::vector<int> s;
      for (int j = 0; j < p; ++j)
        if (mask & (1u << j)) s.push_back(j);
      const double b = bic_of(d, s);
      if (b < best_bic) {
        best_bic = b;
        best = s;
      }
    }
    agree += selected == best;
  }
  report(7, agree >= 90,
         fmt("small-p oracle equivalence: selection == exhaustive BIC subset in %d/100 (>= 90)",
             agree));
}

// ---------------------------------------------------------------- criterion 8
void criterion8() {
  const int reps = 100;
  int nested_ok = 0;
  bool rule_ok = true;
  for (int rep = 0; rep < reps; ++rep) {
    auto rng = std::mt19937_64(8000 + rep);
    std::normal_distribution<double> g(0.0, 1.0);
    const int n = 2000, p = 6;
    Dataset d;
    d.X = random_gaussian(n, p, 8100 + rep);
    VectorXd beta(p);
    beta << 5, 5, 0, 0, 0, 0;
    d.y = d.X * beta;
    for (int i = 0; i < n; ++i) d.y[i] += g(rng);
    ModelFit fit = fit_ols(d);

    const WeightScheme scheme = WeightScheme::gamma(std::log(double(n)));
    BootstrapEnsemble T = one_step_ensemble(fit, scheme, 1000, mix_seed(rep, 1));
    BootstrapEnsemble T1 = one_step_ensemble(fit, scheme, 1000, mix_seed(rep, 2));
    const auto kind = DepthKind::halfspace(2000);
    const double e_full = evalue(CandidateModel::full(p), T, T1, kind, rep);
    const double e_drop1 = evalue(CandidateModel::from_kept(p, {0, 1, 3, 4, 5}), T, T1, kind, rep);
    const double e_drop2 = evalue(CandidateModel::from_kept(p, {0, 1, 4, 5}), T, T1, kind, rep);
    nested_ok += (e_drop1 > e_full) && (e_drop2 > e_drop1);

    // strict-threshold rule: the selected set is recomputable from the report
    SelectConfig cfg;
    cfg.scheme = scheme;
    cfg.R = 500;
    cfg.R1 = 500;
    cfg.kind = kind;
    cfg.seed = 8200 + rep;
    EvalueReport repo = select(fit, cfg);
    std::vector<int> expect;
    for (int j : repo.candidates)
      if (repo.e_dropped[j] < repo.e_full) expect.push_back(j);
    rule_ok = rule_ok && expect == repo.selected;
  }
  report(8, nested_ok >= 95 && rule_ok,
         fmt("theorem-3 ordering: e(-1 null) > e(full) and e(-2 nulls) > e(-1 null) in %d/100 "
             "(>= 95); strict rule recomputable: %s",
             nested_ok, rule_ok ? "yes" : "NO"));
}

}  // namespace

int main() {
  std::printf("evsel acceptance suite\n");
  criterion5();
  criterion6();
  criterion7();
  criterion8();
  criterion3();
  criterion4();
  criterion2();
  criterion1();
  if (g_failures == 0) {
    std::printf("all criteria passed\n");
    return 0;
  }
  std::printf("%d criterion(s) failed\n", g_failures);
  return 1;
}
