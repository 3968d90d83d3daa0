#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Core>

namespace compolattice {

/// All stochastic code takes an explicit stream; streams are never shared across threads.
using RngStream = std::mt19937_64;

inline RngStream make_stream(std::uint64_t seed) { return RngStream(seed); }

/// splitmix64 step; used to derive independent per-job seeds from a master seed.
std::uint64_t splitmix64(std::uint64_t& state);

/// Counter-based seed derivation: the index-th seed of the master's splitmix sequence.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

double draw_normal(RngStream& rng);
Eigen::VectorXd draw_standard_normal(Eigen::Index n, RngStream& rng);

/// Gamma(shape, rate) with density ~ x^{shape-1} e^{-rate x}.
double draw_gamma(double shape, double rate, RngStream& rng);

double draw_chi_squared(double dof, RngStream& rng);

/// Dirichlet with concentration vector `conc` (all entries > 0). Gamma draws that
/// underflow to zero are clamped to keep the result strictly interior.
Eigen::VectorXd draw_dirichlet(const Eigen::VectorXd& conc, RngStream& rng);

/// Inverse Wishart with density ~ |S|^{-(dof+d+1)/2} exp(-tr(S^{-1} psi)/2),
/// sampled via the Bartlett decomposition; requires dof > d - 1.
Eigen::MatrixXd draw_inv_wishart(const Eigen::MatrixXd& psi, double dof, RngStream& rng);

}  // namespace compolattice
