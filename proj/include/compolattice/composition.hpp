#pragma once

#include <vector>

#include <Eigen/Core>

namespace compolattice {

/// A point on the open D-simplex: strictly positive parts summing to one.
class Composition {
 public:
  explicit Composition(Eigen::VectorXd parts);  // validates interiority and the sum

  const Eigen::VectorXd& parts() const { return parts_; }
  int size() const { return static_cast<int>(parts_.size()); }
  double operator[](Eigen::Index k) const { return parts_[k]; }

 private:
  Eigen::VectorXd parts_;
};

/// One latent point in R^d (d = D - 1), the alr image of a Composition.
using LatentVector = Eigen::VectorXd;

/// Additive log-ratio transform: eta_k = log(z_k / z_D).
LatentVector alr(const Composition& z);

/// Inverse alr. Overflow-safe: all coordinates (and the implicit 0 of part D) are
/// shifted by -max(0, max_k eta_k) before exponentiation.
Composition inv_alr(const LatentVector& eta);

/// Kernel form of inv_alr returning the raw parts vector; used in hot loops.
Eigen::VectorXd inv_alr_parts(const LatentVector& eta);

/// d x D matrix of first derivatives d z_k / d eta_i evaluated at parts z:
/// entry (i, k) = z_k ((k == i) - z_i).
Eigen::MatrixXd d_inv_alr(const Eigen::VectorXd& z_parts);
Eigen::MatrixXd d_inv_alr(const Composition& z);

/// Second derivatives d^2 z_k / d eta_i d eta_j: one d x d matrix per component k.
std::vector<Eigen::MatrixXd> d2_inv_alr(const Eigen::VectorXd& z_parts);
std::vector<Eigen::MatrixXd> d2_inv_alr(const Composition& z);

/// Aitchison compositional distance: sqrt((a_u - a_v)^T J^{-1} (a_u - a_v)) with
/// a = alr(.) and J = I + ones (2 on the diagonal, 1 off it).
double acd(const Composition& u, const Composition& v);

/// Repair policy for observed compositions: parts below the floor are raised to
/// `floor_eps` and the vector renormalized. Returns true if a repair was applied.
/// Idempotent: a previously repaired vector passes through unchanged.
bool repair_composition(Eigen::VectorXd& parts, double floor_eps = 1e-6);

}  // namespace compolattice
