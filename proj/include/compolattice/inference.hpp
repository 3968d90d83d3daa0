#pragma once

#include <vector>

#include <Eigen/Core>

#include "compolattice/composition.hpp"
#include "compolattice/lattice.hpp"
#include "compolattice/rng.hpp"
#include "compolattice/sampler.hpp"

namespace compolattice {

/// Elliptical region for the latent eta at one node, defined by the sample mean,
/// sample covariance and an empirical squared-Mahalanobis quantile of the cloud
/// it was built from.
struct RegionSummary {
  enum class Kind { confidence, prediction };

  int node = 0;
  Kind kind = Kind::confidence;
  double level = 0.95;
  Eigen::VectorXd mu;     // d
  Eigen::MatrixXd sigma;  // d x d, SPD after jitter
  double c_quantile = 0.0;
  bool jittered = false;  // a degenerate covariance was repaired
};

/// Joint per-component bounds of a (d = 2) region mapped to the 3-part simplex:
/// for each component its min/max over the ellipse and the full compositions
/// attained there.
struct TernaryBounds {
  Eigen::VectorXd lower;    // D
  Eigen::VectorXd upper;    // D
  Eigen::MatrixXd at_lower; // D x D, row k = composition at component k's minimum
  Eigen::MatrixXd at_upper; // D x D
};

/// Nearest-rank empirical quantile of an unsorted sample (deterministic).
double nearest_rank_quantile(std::vector<double> values, double level);

/// Posterior mean composition at a node: average of inv_alr(eta) over stored samples.
Composition posterior_composition(const McmcTrace& trace, const LatticeModel& lattice, int node);

/// Alternative point summary: inv_alr of the posterior mean eta.
Composition composition_of_mean_eta(const McmcTrace& trace, const LatticeModel& lattice, int node);

/// Elliptical region of the posterior eta samples at a node; requires >= 100 samples.
RegionSummary confidence_region(const McmcTrace& trace, const LatticeModel& lattice, int node,
                                double level = 0.95);

/// Prediction region: per stored sample draw y* ~ Dirichlet(alpha * inv_alr(eta)),
/// map through alr, and build the region on that cloud.
RegionSummary prediction_region(const McmcTrace& trace, const LatticeModel& lattice, int node,
                                double level, RngStream& rng);

/// Region built directly from an M x d cloud of latent points (also used by tests).
RegionSummary region_from_cloud(const Eigen::MatrixXd& cloud, double level,
                                RegionSummary::Kind kind, int node);

/// Discretizes the ellipse boundary (default 4096 points), maps through inv_alr and
/// records per-component extremes. Only d = 2 has a ternary geometry.
TernaryBounds ternary_bounds(const RegionSummary& region, int boundary_points = 4096);

}  // namespace compolattice
