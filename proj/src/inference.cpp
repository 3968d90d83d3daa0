#include "compolattice/inference.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "compolattice/errors.hpp"

namespace compolattice {

namespace {

/// Inverse-covariance apply for region distances; falls back to an eigenvalue clamp
/// when the (possibly jittered) covariance is still numerically singular.
struct CovarianceSolver {
  explicit CovarianceSolver(const Eigen::MatrixXd& sigma) {
    llt.compute(sigma);
    if (llt.info() == Eigen::Success) return;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sigma);
    const double floor = 1e-30 * (1.0 + sigma.trace());
    clamped_values = es.eigenvalues().cwiseMax(floor);
    vectors = es.eigenvectors();
    use_eigen = true;
  }

  double squared_mahalanobis(const Eigen::VectorXd& v) const {
    if (!use_eigen) return v.dot(llt.solve(v));
    const Eigen::VectorXd w = vectors.transpose() * v;
    return (w.array().square() / clamped_values.array()).sum();
  }

  Eigen::LLT<Eigen::MatrixXd> llt;
  Eigen::VectorXd clamped_values;
  Eigen::MatrixXd vectors;
  bool use_eigen = false;
};

}  // namespace

double nearest_rank_quantile(std::vector<double> values, double level) {
  if (values.empty()) throw std::invalid_argument("nearest_rank_quantile: empty sample");
  std::sort(values.begin(), values.end());
  const auto m = static_cast<double>(values.size());
  auto idx = static_cast<long>(std::ceil(level * m)) - 1;
  idx = std::clamp<long>(idx, 0, static_cast<long>(values.size()) - 1);
  return values[static_cast<size_t>(idx)];
}

Composition posterior_composition(const McmcTrace& trace, const LatticeModel& lattice, int node) {
  const int m = trace.n_samples();
  if (m == 0) throw std::invalid_argument("posterior_composition: empty trace");
  const Eigen::MatrixXd eta = trace.node_eta(lattice, node);
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(trace.n_fields + 1);
  for (int t = 0; t < m; ++t) acc += inv_alr_parts(eta.row(t).transpose());
  acc /= acc.sum();
  return Composition(acc);
}

Composition composition_of_mean_eta(const McmcTrace& trace, const LatticeModel& lattice, int node) {
  if (trace.n_samples() == 0) throw std::invalid_argument("composition_of_mean_eta: empty trace");
  const Eigen::MatrixXd eta = trace.node_eta(lattice, node);
  return inv_alr(eta.colwise().mean().transpose());
}

RegionSummary region_from_cloud(const Eigen::MatrixXd& cloud, double level,
                                RegionSummary::Kind kind, int node) {
  const int m = static_cast<int>(cloud.rows());
  const int d = static_cast<int>(cloud.cols());
  if (m < 100) throw std::invalid_argument("region: needs at least 100 samples");
  if (!(level > 0.0 && level <= 1.0)) throw std::invalid_argument("region: level must be in (0, 1]");

  RegionSummary region;
  region.node = node;
  region.kind = kind;
  region.level = level;
  region.mu = cloud.colwise().mean().transpose();
  const Eigen::MatrixXd centered = cloud.rowwise() - region.mu.transpose();
  region.sigma = centered.transpose() * centered / static_cast<double>(m - 1);

  Eigen::LLT<Eigen::MatrixXd> probe(region.sigma);
  if (probe.info() != Eigen::Success) {
    region.sigma += (1e-10 * region.sigma.trace() / d) * Eigen::MatrixXd::Identity(d, d);
    region.jittered = true;
  }

  const CovarianceSolver solver(region.sigma);
  std::vector<double> dist(static_cast<size_t>(m));
  for (int t = 0; t < m; ++t)
    dist[static_cast<size_t>(t)] = solver.squared_mahalanobis(centered.row(t).transpose());
  region.c_quantile = nearest_rank_quantile(std::move(dist), level);
  return region;
}

RegionSummary confidence_region(const McmcTrace& trace, const LatticeModel& lattice, int node,
                                double level) {
  return region_from_cloud(trace.node_eta(lattice, node), level, RegionSummary::Kind::confidence,
                           node);
}

RegionSummary prediction_region(const McmcTrace& trace, const LatticeModel& lattice, int node,
                                double level, RngStream& rng) {
  const int m = trace.n_samples();
  if (m < 100) throw std::invalid_argument("prediction_region: needs at least 100 samples");
  const Eigen::MatrixXd eta = trace.node_eta(lattice, node);
  const int d = trace.n_fields;
  Eigen::MatrixXd cloud(m, d);
  for (int t = 0; t < m; ++t) {
    const Eigen::VectorXd z = inv_alr_parts(eta.row(t).transpose());
    const Eigen::VectorXd y = draw_dirichlet(trace.alpha[t] * z, rng);
    const double log_last = std::log(y[d]);
    for (int k = 0; k < d; ++k) cloud(t, k) = std::log(y[k]) - log_last;
  }
  return region_from_cloud(cloud, level, RegionSummary::Kind::prediction, node);
}

TernaryBounds ternary_bounds(const RegionSummary& region, int boundary_points) {
  const int d = static_cast<int>(region.mu.size());
  if (d != 2) throw std::invalid_argument("ternary_bounds: requires d = 2 (three components)");
  if (boundary_points < 8) throw std::invalid_argument("ternary_bounds: too few boundary points");

  // sigma = V diag(lambda) V^T; boundary eta(t) = mu + sqrt(c) V diag(sqrt(lambda)) u(t)
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(region.sigma);
  const Eigen::VectorXd scale = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  const Eigen::MatrixXd axes = es.eigenvectors() * scale.asDiagonal();
  const double radius = std::sqrt(std::max(region.c_quantile, 0.0));

  const int n_comp = d + 1;
  TernaryBounds bounds;
  bounds.lower = Eigen::VectorXd::Constant(n_comp, std::numeric_limits<double>::infinity());
  bounds.upper = Eigen::VectorXd::Constant(n_comp, -std::numeric_limits<double>::infinity());
  bounds.at_lower.resize(n_comp, n_comp);
  bounds.at_upper.resize(n_comp, n_comp);

  for (int i = 0; i < boundary_points; ++i) {
    const double angle = 2.0 * std::numbers::pi * static_cast<double>(i) / boundary_points;
    Eigen::Vector2d u(std::cos(angle), std::sin(angle));
    const Eigen::VectorXd eta = region.mu + radius * (axes * u);
    const Eigen::VectorXd z = inv_alr_parts(eta);
    for (int k = 0; k < n_comp; ++k) {
      if (z[k] < bounds.lower[k]) {
        bounds.lower[k] = z[k];
        bounds.at_lower.row(k) = z.transpose();
      }
      if (z[k] > bounds.upper[k]) {
        bounds.upper[k] = z[k];
        bounds.at_upper.row(k) = z.transpose();
      }
    }
  }
  return bounds;
}

}  // namespace compolattice
