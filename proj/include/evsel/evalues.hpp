#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "evsel/bootstrap.hpp"
#include "evsel/common.hpp"
#include "evsel/depth.hpp"
#include "evsel/model.hpp"
#include "evsel/rng.hpp"

namespace evsel {

struct EvalueReport {
  double e_full = 0.0;
  VectorXd e_dropped;          // length p; NaN where j was not a candidate
  std::vector<int> selected;   // = { j : e_dropped[j] < e_full }, strict
  std::vector<int> candidates;
  double tau_n = 0.0;
  int R = 0, R1 = 0;
  DepthKind depth_kind;
  std::uint64_t seed = 0;
  std::vector<std::string> names;
  int depth_ties = 0;  // diagnostic: candidates with e_dropped exactly equal to e_full
  bool ridge_warning = false;

  void validate() const {
    if (!(e_full >= 0.0)) throw numeric_error("EvalueReport: negative full-model e-value");
    std::vector<int> expect;
    for (int j : candidates) {
      const double e = e_dropped[j];
      if (std::isnan(e)) throw numeric_error("EvalueReport: candidate without e-value");
      if (!(e >= 0.0)) throw numeric_error("EvalueReport: negative e-value");
      if (e < e_full) expect.push_back(j);
    }
    if (expect != selected) throw numeric_error("EvalueReport: selected set inconsistent");
  }
};

struct SelectConfig {
  WeightScheme scheme = WeightScheme::gamma(1.0);
  int R = 1000;
  int R1 = 1000;
  DepthKind kind = DepthKind::halfspace();
  std::uint64_t seed = 0;
  bool include_intercept = false;  // intercept joins the drop-one candidates
};

namespace detail {

// Mean depth of the plugged-in T1 rows against the cloud evaluator.
// Per-row depths go into a fixed slot and are reduced sequentially, so the
// result does not depend on thread scheduling.
inline double mean_depth_plugin(const DepthEvaluator& ev, const MatrixXd& t1,
                                const CandidateModel& model) {
  const Eigen::Index R1 = t1.rows();
  std::vector<double> depths(static_cast<std::size_t>(R1));
#pragma omp parallel for schedule(static)
  for (Eigen::Index r = 0; r < R1; ++r) {
    depths[static_cast<std::size_t>(r)] = ev.depth(plugin_estimate(t1.row(r), model));
  }
  KahanSum sum;
  for (double d : depths) sum.add(d);
  return sum.value() / static_cast<double>(R1);
}

struct ProjectedScorer {
  const DepthEvaluator& ev;
  MatrixXd base;  // R1 x D projections of the unmodified T1 rows

  ProjectedScorer(const DepthEvaluator& e, const MatrixXd& t1) : ev(e) {
    base.noalias() = t1 * ev.directions();
  }

  double mean_depth_full() const {
    const Eigen::Index R1 = base.rows();
    std::vector<double> depths(static_cast<std::size_t>(R1));
#pragma omp parallel for schedule(static)
    for (Eigen::Index r = 0; r < R1; ++r)
      depths[static_cast<std::size_t>(r)] = ev.depth_from_projections(base.row(r));
    KahanSum sum;
    for (double d : depths) sum.add(d);
    return sum.value() / static_cast<double>(R1);
  }

  // Drop-one query: q = base_row - t1(r, j) * direction_row_j.
  double mean_depth_dropped(const MatrixXd& t1, int j) const {
    const Eigen::Index R1 = base.rows();
    const Eigen::RowVectorXd dir_j = ev.directions().row(j);
    std::vector<double> depths(static_cast<std::size_t>(R1));
#pragma omp parallel for schedule(static)
    for (Eigen::Index r = 0; r < R1; ++r) {
      Eigen::RowVectorXd q = base.row(r) - t1(r, j) * dir_j;
      depths[static_cast<std::size_t>(r)] = ev.depth_from_projections(q);
    }
    KahanSum sum;
    for (double d : depths) sum.add(d);
    return sum.value() / static_cast<double>(R1);
  }
};

}  // namespace detail

// Bootstrap e-value of one candidate model: mean depth of the plugged-in
// rows of ensemble_t1 with respect to ensemble_t as the empirical cloud.
// The direction set is a pure function of (ensemble_t, kind, seed), so every
// model scored with the same arguments shares it.
inline double evalue(const CandidateModel& model, const BootstrapEnsemble& ensemble_t,
                     const BootstrapEnsemble& ensemble_t1, DepthKind kind, std::uint64_t seed) {
  if (ensemble_t.draws.rows() < 2 || ensemble_t1.draws.rows() < 1)
    throw config_error("evalue: empty ensemble");
  if (ensemble_t.p() != ensemble_t1.p() || model.p != static_cast<int>(ensemble_t.p()))
    throw config_error("evalue: dimension mismatch between model and ensembles");
  model.validate();
  DepthEvaluator ev(PointCloud(ensemble_t.draws), kind, seed);
  return detail::mean_depth_plugin(ev, ensemble_t1.draws, model);
}

// Algorithm: draw independent ensembles T (size R) and T1 (size R1); score
// the full model, then every drop-one model by zeroing one coordinate of the
// T1 rows; keep the covariates whose removal lowers the score.
inline EvalueReport select(const ModelFit& fit, const SelectConfig& cfg) {
  cfg.scheme.validate();
  cfg.kind.validate();
  const int p = static_cast<int>(fit.p());

  BootstrapEnsemble T =
      one_step_ensemble(fit, cfg.scheme, cfg.R, mix_seed(cfg.seed, stream::kEnsembleT));
  BootstrapEnsemble T1 =
      one_step_ensemble(fit, cfg.scheme, cfg.R1, mix_seed(cfg.seed, stream::kEnsembleT1));

  DepthEvaluator ev(PointCloud(T.draws), cfg.kind, cfg.seed);

  EvalueReport rep;
  rep.candidates = fit.default_candidates(cfg.include_intercept);
  rep.e_dropped = VectorXd::Constant(p, std::numeric_limits<double>::quiet_NaN());
  rep.tau_n = T.tau_n;
  rep.R = cfg.R;
  rep.R1 = cfg.R1;
  rep.depth_kind = cfg.kind;
  rep.seed = cfg.seed;
  rep.names = fit.names;
  rep.ridge_warning = ev.ridge_applied();

  if (ev.uses_directions()) {
    detail::ProjectedScorer scorer(ev, T1.draws);
    rep.e_full = scorer.mean_depth_full();
    for (int j : rep.candidates) rep.e_dropped[j] = scorer.mean_depth_dropped(T1.draws, j);
  } else {
    rep.e_full = detail::mean_depth_plugin(ev, T1.draws, CandidateModel::full(p));
    for (int j : rep.candidates)
      rep.e_dropped[j] = detail::mean_depth_plugin(ev, T1.draws, CandidateModel::drop_one(p, j));
  }

  for (int j : rep.candidates) {
    if (rep.e_dropped[j] < rep.e_full) rep.selected.push_back(j);
    if (rep.e_dropped[j] == rep.e_full) ++rep.depth_ties;
  }
  rep.validate();
  return rep;
}

}  // namespace evsel
