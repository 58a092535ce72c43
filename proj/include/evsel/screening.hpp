#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "evsel/common.hpp"
#include "evsel/model.hpp"

namespace evsel {

struct ScreenResult {
  std::vector<int> kept;      // top-|kept| indices by |score|, ascending index order
  VectorXd scores;            // |corr(y, X_j)| per column
  int target_size = 0;
  std::vector<int> zero_variance;  // flagged constant columns

  Dataset restrict(const Dataset& data) const {
    Dataset out;
    out.y = data.y;
    out.group = data.group;
    out.X.resize(data.X.rows(), static_cast<Eigen::Index>(kept.size()));
    for (std::size_t k = 0; k < kept.size(); ++k) {
      out.X.col(static_cast<Eigen::Index>(k)) = data.X.col(kept[k]);
      if (!data.names.empty()) out.names.push_back(data.names[kept[k]]);
    }
    return out;
  }
};

// Sure independence screening: rank covariates by absolute Pearson
// correlation with the response and keep the top target_size.
inline ScreenResult sis_screen(const Dataset& data, int target_size) {
  data.validate();
  if (target_size < 1) throw config_error("sis_screen: target_size must be >= 1");
  const Eigen::Index n = data.n();
  const Eigen::Index p = data.p();

  ScreenResult res;
  res.target_size = target_size;
  res.scores.resize(p);

  const VectorXd yc = data.y.array() - data.y.mean();
  const double ysd = yc.norm();
  for (Eigen::Index j = 0; j < p; ++j) {
    VectorXd xc = data.X.col(j).array() - data.X.col(j).mean();
    const double xsd = xc.norm();
    if (xsd == 0.0 || ysd == 0.0) {
      res.scores[j] = 0.0;
      if (xsd == 0.0) res.zero_variance.push_back(static_cast<int>(j));
      continue;
    }
    res.scores[j] = std::abs(yc.dot(xc) / (xsd * ysd));
  }

  std::vector<int> order(static_cast<std::size_t>(p));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if (res.scores[a] != res.scores[b]) return res.scores[a] > res.scores[b];
    return a < b;  // ties broken toward the lower index
  });
  const int keep = std::min<int>(target_size, static_cast<int>(p));
  res.kept.assign(order.begin(), order.begin() + keep);
  std::sort(res.kept.begin(), res.kept.end());
  return res;
}

}  // namespace evsel
