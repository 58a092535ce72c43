#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "evsel/common.hpp"
#include "evsel/rng.hpp"

namespace evsel {

// Empirical distribution on R^p: one sample per row.
struct PointCloud {
  MatrixXd points;  // R x p

  PointCloud() = default;
  explicit PointCloud(MatrixXd pts) : points(std::move(pts)) { validate(); }

  Eigen::Index rows() const { return points.rows(); }
  Eigen::Index dim() const { return points.cols(); }

  void validate() const {
    if (points.rows() < 2) throw config_error("PointCloud: need at least 2 rows");
    if (points.cols() < 1) throw config_error("PointCloud: need at least 1 column");
    if (!all_finite(points)) throw config_error("PointCloud: non-finite entries");
  }
};

enum class DepthFamily { Mahalanobis, Halfspace, Projection };

struct DepthKind {
  DepthFamily family = DepthFamily::Halfspace;
  int n_directions = 2000;
  bool allow_ridge = true;  // Mahalanobis: regularize a singular covariance

  static DepthKind mahalanobis() { return {DepthFamily::Mahalanobis, 0, true}; }
  static DepthKind halfspace(int ndir = 2000) { return {DepthFamily::Halfspace, ndir, true}; }
  static DepthKind projection(int ndir = 2000) { return {DepthFamily::Projection, ndir, true}; }

  void validate() const {
    if (family != DepthFamily::Mahalanobis && n_directions < 1)
      throw config_error("DepthKind: n_directions must be >= 1");
  }
};

inline const char* depth_family_name(DepthFamily f) {
  switch (f) {
    case DepthFamily::Mahalanobis: return "mahalanobis";
    case DepthFamily::Halfspace: return "halfspace";
    case DepthFamily::Projection: return "projection";
  }
  return "?";
}

namespace detail {

// Exact Tukey depth on the line.
inline double exact_halfspace_1d(double x, const Eigen::Ref<const VectorXd>& ys) {
  Eigen::Index le = 0, ge = 0;
  for (Eigen::Index i = 0; i < ys.size(); ++i) {
    if (ys[i] <= x) ++le;
    if (ys[i] >= x) ++ge;
  }
  return static_cast<double>(std::min(le, ge)) / static_cast<double>(ys.size());
}

// Counts angles within [lo, hi] on the circle; angles sorted in [0, 2pi).
inline std::ptrdiff_t count_in_arc(const std::vector<double>& sorted, double lo, double hi) {
  constexpr double two_pi = 2.0 * M_PI;
  auto wrap = [&](double a) {
    a = std::fmod(a, two_pi);
    if (a < 0) a += two_pi;
    return a;
  };
  lo = wrap(lo);
  hi = wrap(hi);
  auto lb = [&](double v) { return std::lower_bound(sorted.begin(), sorted.end(), v); };
  auto ub = [&](double v) { return std::upper_bound(sorted.begin(), sorted.end(), v); };
  if (lo <= hi) return ub(hi) - lb(lo);
  return (sorted.end() - lb(lo)) + (ub(hi) - sorted.begin());
}

}  // namespace detail

// Exact 2-D Tukey depth: minimum over closed halfplanes through x of the
// contained cloud fraction. The minimizing normal always lies strictly
// between two critical angles (each alpha_i +- pi/2), so evaluating the
// count at every arc midpoint is exact.
inline double exact_halfspace_2d(const Eigen::Ref<const VectorXd>& x, const PointCloud& cloud) {
  if (cloud.dim() != 2 || x.size() != 2)
    throw config_error("exact_halfspace_2d: dimension must be 2");
  const Eigen::Index R = cloud.rows();
  std::vector<double> angles;
  angles.reserve(static_cast<std::size_t>(R));
  Eigen::Index coincident = 0;
  for (Eigen::Index i = 0; i < R; ++i) {
    const double dx = cloud.points(i, 0) - x[0];
    const double dy = cloud.points(i, 1) - x[1];
    if (dx == 0.0 && dy == 0.0) {
      ++coincident;
      continue;
    }
    double a = std::atan2(dy, dx);
    if (a < 0) a += 2.0 * M_PI;
    angles.push_back(a);
  }
  if (angles.empty()) return 1.0;  // every cloud point sits at x
  std::sort(angles.begin(), angles.end());

  constexpr double half_pi = 0.5 * M_PI;
  constexpr double two_pi = 2.0 * M_PI;
  std::vector<double> critical;
  critical.reserve(2 * angles.size());
  for (double a : angles) {
    double c1 = std::fmod(a + half_pi, two_pi);
    double c2 = std::fmod(a - half_pi + two_pi, two_pi);
    critical.push_back(c1);
    critical.push_back(c2);
  }
  std::sort(critical.begin(), critical.end());
  critical.erase(std::unique(critical.begin(), critical.end()), critical.end());

  std::ptrdiff_t best = static_cast<std::ptrdiff_t>(angles.size());
  const std::size_t C = critical.size();
  for (std::size_t k = 0; k < C; ++k) {
    const double next = (k + 1 < C) ? critical[k + 1] : critical[0] + two_pi;
    const double mid = 0.5 * (critical[k] + next);
    best = std::min(best, detail::count_in_arc(angles, mid - half_pi, mid + half_pi));
  }
  return static_cast<double>(best + coincident) / static_cast<double>(R);
}

// Precomputed depth queries against one cloud. Halfspace/Projection share a
// single direction set drawn at construction; reusing one evaluator across
// many queries is what makes depth comparisons across models meaningful.
//
// Directions are drawn as normalize(Q * z) with Q the eigenvector frame of
// the cloud covariance and z seeded Gaussians. Each sampled direction u is
// evaluated together with -u (a two-sided count), so the effective direction
// multiset is {+-u_d}, and sampled depths are exactly invariant under
// orthogonal transforms plus shifts applied to (x, cloud) with a shared seed.
class DepthEvaluator {
 public:
  DepthEvaluator(const PointCloud& cloud, DepthKind kind, std::uint64_t seed)
      : cloud_(cloud), kind_(kind) {
    kind_.validate();
    cloud_.validate();
    const Eigen::Index p = cloud_.dim();
    mean_ = cloud_.points.colwise().mean();
    MatrixXd centered = cloud_.points.rowwise() - mean_.transpose();
    cov_ = centered.transpose() * centered / static_cast<double>(cloud_.rows() - 1);

    switch (kind_.family) {
      case DepthFamily::Mahalanobis:
        init_mahalanobis();
        break;
      case DepthFamily::Halfspace:
        if (p <= 2) {
          exact_2d_ = true;
        } else {
          init_directions(seed);
          init_halfspace();
        }
        break;
      case DepthFamily::Projection:
        init_directions(seed);
        init_projection();
        break;
    }
  }

  const PointCloud& cloud() const { return cloud_; }
  const DepthKind& kind() const { return kind_; }
  bool ridge_applied() const { return ridge_applied_; }
  bool uses_directions() const { return dirs_.size() > 0; }
  const MatrixXd& directions() const { return dirs_; }  // p x n_directions
  Eigen::Index n_dirs() const { return dirs_.cols(); }

  double depth(const Eigen::Ref<const VectorXd>& x) const {
    if (x.size() != cloud_.dim())
      throw config_error("depth: query dimension does not match cloud");
    switch (kind_.family) {
      case DepthFamily::Mahalanobis: {
        VectorXd d = x - mean_;
        const double q = d.dot(cov_solver_.solve(d));
        return 1.0 / (1.0 + std::max(q, 0.0));
      }
      case DepthFamily::Halfspace:
        if (exact_2d_) {
          if (cloud_.dim() == 1) return detail::exact_halfspace_1d(x[0], cloud_.points.col(0));
          return exact_halfspace_2d(x, cloud_);
        }
        [[fallthrough]];
      case DepthFamily::Projection: {
        Eigen::RowVectorXd q = x.transpose() * dirs_;
        return depth_from_projections(q);
      }
    }
    throw numeric_error("depth: unreachable");
  }

  // q = x^T * directions(); callers may maintain q incrementally.
  double depth_from_projections(const Eigen::Ref<const Eigen::RowVectorXd>& q) const {
    if (kind_.family == DepthFamily::Halfspace) return halfspace_from_projections(q);
    return projection_from_projections(q);
  }

 private:
  void init_mahalanobis() {
    const Eigen::Index p = cloud_.dim();
    cov_solver_.compute(cov_);
    const bool ok = cov_solver_.info() == Eigen::Success &&
                    (cov_solver_.vectorD().array() > 0).all();
    if (!ok) {
      if (!kind_.allow_ridge)
        throw numeric_error("Mahalanobis depth: singular cloud covariance and ridge disabled");
      double tr = cov_.trace();
      double ridge = 1e-8 * (tr > 0 ? tr / static_cast<double>(p) : 1.0);
      cov_solver_.compute(cov_ + ridge * MatrixXd::Identity(p, p));
      if (cov_solver_.info() != Eigen::Success)
        throw numeric_error("Mahalanobis depth: covariance not factorizable after ridge");
      ridge_applied_ = true;
    }
  }

  void init_directions(std::uint64_t seed) {
    const Eigen::Index p = cloud_.dim();
    const int nd = kind_.n_directions;
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(cov_);
    MatrixXd frame = es.eigenvectors();
    // Orient each eigenvector by the cloud's third moment along it. The
    // orientation transforms equivariantly under orthogonal maps of the
    // cloud, which fixes the solver's arbitrary sign choice.
    MatrixXd centered = cloud_.points.rowwise() - mean_.transpose();
    for (Eigen::Index k = 0; k < p; ++k) {
      const double skew = (centered * frame.col(k)).array().cube().sum();
      if (skew < 0.0) frame.col(k) *= -1.0;
    }
    auto rng = substream(seed, stream::kDirections);
    std::normal_distribution<double> gauss(0.0, 1.0);
    MatrixXd raw(p, nd);
    for (int d = 0; d < nd; ++d)
      for (Eigen::Index i = 0; i < p; ++i) raw(i, d) = gauss(rng);
    MatrixXd anchored = frame * raw;
    dirs_.resize(p, nd);
    for (int d = 0; d < nd; ++d) {
      double norm = anchored.col(d).norm();
      if (norm == 0.0) anchored(0, d) = norm = 1.0;
      dirs_.col(d) = anchored.col(d) / norm;
    }
  }

  void init_halfspace() {
    const Eigen::Index D = dirs_.cols();
    const Eigen::Index R = cloud_.rows();
    MatrixXd proj = cloud_.points * dirs_;  // R x D
    sorted_proj_.assign(static_cast<std::size_t>(D), std::vector<double>());
    for (Eigen::Index d = 0; d < D; ++d) {
      auto& col = sorted_proj_[static_cast<std::size_t>(d)];
      col.assign(proj.col(d).data(), proj.col(d).data() + R);
      std::sort(col.begin(), col.end());
    }
  }

  void init_projection() {
    const Eigen::Index D = dirs_.cols();
    const Eigen::Index R = cloud_.rows();
    MatrixXd proj = cloud_.points * dirs_;  // R x D
    med_.resize(D);
    mad_.resize(D);
    dir_ok_.assign(static_cast<std::size_t>(D), true);
    std::vector<double> buf(static_cast<std::size_t>(R));
    Eigen::Index n_ok = 0;
    for (Eigen::Index d = 0; d < D; ++d) {
      buf.assign(proj.col(d).data(), proj.col(d).data() + R);
      const double med = median_inplace(buf);
      double spread = 0.0;
      for (auto& v : buf) {
        v = std::abs(v - med);
        spread = std::max(spread, v);
      }
      const double mad = median_inplace(buf);
      med_[d] = med;
      mad_[d] = mad;
      // zero MAD marks a degenerate direction of the discrete cloud
      if (mad <= 1e-14 * (std::abs(med) + spread)) {
        dir_ok_[static_cast<std::size_t>(d)] = false;
      } else {
        ++n_ok;
      }
    }
    if (n_ok == 0)
      throw numeric_error("projection depth: MAD degenerate in every sampled direction");
  }

  double halfspace_from_projections(const Eigen::Ref<const Eigen::RowVectorXd>& q) const {
    const Eigen::Index D = dirs_.cols();
    const double R = static_cast<double>(cloud_.rows());
    const std::ptrdiff_t rows = cloud_.rows();
    std::ptrdiff_t best = rows;
    for (Eigen::Index d = 0; d < D && best > 0; ++d) {
      const auto& col = sorted_proj_[static_cast<std::size_t>(d)];
      // fraction >= q along +u, fraction <= q along -u; the count <= q only
      // needs the second search when ties could pull it below the minimum
      const std::ptrdiff_t pos = std::lower_bound(col.begin(), col.end(), q[d]) - col.begin();
      const std::ptrdiff_t ge = rows - pos;
      if (ge < best) best = ge;
      if (pos < best) {
        const std::ptrdiff_t le = std::upper_bound(col.begin(), col.end(), q[d]) - col.begin();
        if (le < best) best = le;
      }
    }
    return static_cast<double>(best) / R;
  }

  double projection_from_projections(const Eigen::Ref<const Eigen::RowVectorXd>& q) const {
    const Eigen::Index D = dirs_.cols();
    double out = 0.0;
    for (Eigen::Index d = 0; d < D; ++d) {
      if (!dir_ok_[static_cast<std::size_t>(d)]) continue;
      const double o = std::abs(q[d] - med_[d]) / mad_[d];
      if (o > out) out = o;
    }
    return 1.0 / (1.0 + out);
  }

  PointCloud cloud_;
  DepthKind kind_;
  Eigen::VectorXd mean_;
  MatrixXd cov_;
  Eigen::LDLT<MatrixXd> cov_solver_;
  bool ridge_applied_ = false;
  bool exact_2d_ = false;
  MatrixXd dirs_;  // p x D (antithetic pairs)
  std::vector<std::vector<double>> sorted_proj_;
  VectorXd med_, mad_;
  std::vector<bool> dir_ok_;
};

// One-shot depth query; value is deterministic given the seed.
inline double depth(const Eigen::Ref<const VectorXd>& x, const PointCloud& cloud, DepthKind kind,
                    std::uint64_t seed) {
  return DepthEvaluator(cloud, kind, seed).depth(x);
}

}  // namespace evsel
