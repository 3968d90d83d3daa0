#include "compolattice/rng.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Cholesky>

#include "compolattice/errors.hpp"

namespace compolattice {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  std::uint64_t state = master;
  std::uint64_t out = splitmix64(state);
  for (std::uint64_t i = 0; i < index; ++i) out = splitmix64(state);
  return out;
}

double draw_normal(RngStream& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  return dist(rng);
}

Eigen::VectorXd draw_standard_normal(Eigen::Index n, RngStream& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Eigen::VectorXd z(n);
  for (Eigen::Index i = 0; i < n; ++i) z[i] = dist(rng);
  return z;
}

double draw_gamma(double shape, double rate, RngStream& rng) {
  if (shape <= 0.0 || rate <= 0.0) throw std::invalid_argument("draw_gamma: shape and rate must be positive");
  std::gamma_distribution<double> dist(shape, 1.0 / rate);
  return dist(rng);
}

double draw_chi_squared(double dof, RngStream& rng) { return draw_gamma(0.5 * dof, 0.5, rng); }

Eigen::VectorXd draw_dirichlet(const Eigen::VectorXd& conc, RngStream& rng) {
  Eigen::VectorXd g(conc.size());
  for (Eigen::Index k = 0; k < conc.size(); ++k) {
    // tiny shapes underflow to exactly 0 with positive probability; clamp so the
    // normalized draw stays inside the open simplex
    g[k] = std::max(draw_gamma(conc[k], 1.0, rng), 1e-290);
  }
  return g / g.sum();
}

Eigen::MatrixXd draw_inv_wishart(const Eigen::MatrixXd& psi, double dof, RngStream& rng) {
  const Eigen::Index d = psi.rows();
  if (psi.cols() != d) throw std::invalid_argument("draw_inv_wishart: psi must be square");
  if (dof <= static_cast<double>(d) - 1.0)
    throw std::invalid_argument("draw_inv_wishart: dof must exceed d - 1");

  // W ~ Wishart(psi^{-1}, dof) via Bartlett, then invert.
  Eigen::LLT<Eigen::MatrixXd> psi_llt(psi);
  if (psi_llt.info() != Eigen::Success) throw NumericalError("draw_inv_wishart: scale matrix not SPD");

  Eigen::MatrixXd bartlett = Eigen::MatrixXd::Zero(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    bartlett(i, i) = std::sqrt(draw_chi_squared(dof - static_cast<double>(i), rng));
    for (Eigen::Index j = 0; j < i; ++j) bartlett(i, j) = draw_normal(rng);
  }
  // psi^{-1} = L^{-T} L^{-1} with psi = L L^T, so the Wishart factor is L^{-T} A.
  Eigen::MatrixXd factor =
      psi_llt.matrixL().transpose().solve(bartlett);  // L^{-T} A
  Eigen::MatrixXd w = factor * factor.transpose();
  Eigen::LLT<Eigen::MatrixXd> w_llt(w);
  if (w_llt.info() != Eigen::Success) throw NumericalError("draw_inv_wishart: degenerate Wishart draw");
  Eigen::MatrixXd inv = w_llt.solve(Eigen::MatrixXd::Identity(d, d));
  return 0.5 * (inv + inv.transpose());
}

}  // namespace compolattice
