#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "evsel/evalues.hpp"
#include "evsel/model.hpp"

namespace evsel {

struct SweepOptions {
  ModelFamily family = ModelFamily::LinearOLS;
  bool intercept = false;
  LmmOptions lmm;
  SelectConfig base;            // scheme.tau_n is overridden per grid entry
  double train_fraction = 0.75;
};

struct TauSweepEntry {
  double tau = 0.0;
  EvalueReport report;
  double validation_pe = 0.0;  // mean squared fixed-effect prediction error
  bool empty_selected = false;
};

struct TauSweepResult {
  std::vector<TauSweepEntry> entries;
  int chosen = 0;  // index into entries; PE argmin, ties toward smaller tau

  const TauSweepEntry& best() const { return entries[static_cast<std::size_t>(chosen)]; }
};

namespace detail {

// Ordered split; mixed-model groups are kept intact by moving the boundary
// to the end of the straddling group.
inline Eigen::Index split_point(const Dataset& data, double train_fraction) {
  Eigen::Index cut = static_cast<Eigen::Index>(
      std::ceil(train_fraction * static_cast<double>(data.n())));
  cut = std::max<Eigen::Index>(cut, 2);
  if (data.has_groups()) {
    while (cut < data.n() && data.group[cut] == data.group[cut - 1]) ++cut;
  }
  if (cut >= data.n()) throw config_error("tau_sweep: validation split is empty");
  return cut;
}

inline Dataset slice_rows(const Dataset& data, Eigen::Index begin, Eigen::Index end) {
  Dataset out;
  out.X = data.X.middleRows(begin, end - begin);
  out.y = data.y.segment(begin, end - begin);
  out.names = data.names;
  if (data.has_groups())
    out.group.assign(data.group.begin() + begin, data.group.begin() + end);
  return out;
}

}  // namespace detail

// Runs selection on the training split for every tau, refits on the selected
// support, and scores fixed-effect predictions on the held-out split.
inline TauSweepResult tau_sweep(const Dataset& data, const std::vector<double>& taus,
                                const SweepOptions& opts) {
  data.validate();
  if (taus.empty()) throw config_error("tau_sweep: need at least one tau");
  const Eigen::Index cut = detail::split_point(data, opts.train_fraction);
  Dataset train = detail::slice_rows(data, 0, cut);
  Dataset valid = detail::slice_rows(data, cut, data.n());

  ModelFit fit = opts.family == ModelFamily::LinearMixedREML ? fit_lmm(train, opts.lmm)
                                                             : fit_ols(train, opts.intercept);

  TauSweepResult result;
  for (double tau : taus) {
    TauSweepEntry entry;
    entry.tau = tau;
    SelectConfig cfg = opts.base;
    cfg.scheme = opts.base.scheme;
    cfg.scheme.tau_n = tau;
    entry.report = select(fit, cfg);

    // selected indices refer to the fit design; drop the intercept column
    // before refitting on the raw covariate layout
    std::vector<int> support;
    for (int j : entry.report.selected) support.push_back(opts.intercept ? j - 1 : j);
    entry.empty_selected = support.empty();

    VectorXd pred;
    if (opts.intercept && opts.family == ModelFamily::LinearOLS) {
      Dataset sub;
      sub.y = train.y;
      sub.X.resize(train.n(), static_cast<Eigen::Index>(support.size()));
      for (std::size_t k = 0; k < support.size(); ++k)
        sub.X.col(static_cast<Eigen::Index>(k)) = train.X.col(support[k]);
      double alpha = train.y.mean();
      VectorXd coef = VectorXd::Zero(static_cast<Eigen::Index>(support.size()));
      if (!support.empty()) {
        ModelFit rf = fit_ols(sub, /*intercept=*/true);
        alpha = rf.theta_hat[0];
        coef = rf.theta_hat.tail(rf.theta_hat.size() - 1);
      }
      pred = VectorXd::Constant(valid.n(), alpha);
      for (std::size_t k = 0; k < support.size(); ++k)
        pred += coef[static_cast<Eigen::Index>(k)] * valid.X.col(support[k]);
    } else {
      VectorXd beta = refit_on_support(train, opts.family, support, opts.lmm);
      pred = valid.X * beta;
    }
    entry.validation_pe = (valid.y - pred).squaredNorm() / static_cast<double>(valid.n());
    result.entries.push_back(std::move(entry));
  }

  std::vector<std::size_t> order(result.entries.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return result.entries[a].tau < result.entries[b].tau;
  });
  int best = static_cast<int>(order[0]);
  for (std::size_t k : order) {
    if (result.entries[k].validation_pe <
        result.entries[static_cast<std::size_t>(best)].validation_pe)
      best = static_cast<int>(k);
  }
  result.chosen = best;
  return result;
}

}  // namespace evsel
