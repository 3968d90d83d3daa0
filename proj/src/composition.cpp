#include "compolattice/composition.hpp"

#include <cmath>
#include <stdexcept>

namespace compolattice {

namespace {

void require_interior(const Eigen::VectorXd& parts, const char* who) {
  for (Eigen::Index k = 0; k < parts.size(); ++k) {
    if (!(parts[k] > 0.0) || !(parts[k] < 1.0))
      throw std::invalid_argument(std::string(who) + ": parts must lie in (0, 1)");
  }
}

}  // namespace

Composition::Composition(Eigen::VectorXd parts) : parts_(std::move(parts)) {
  if (parts_.size() < 2) throw std::invalid_argument("Composition: needs at least two parts");
  require_interior(parts_, "Composition");
  if (std::abs(parts_.sum() - 1.0) > 1e-12)
    throw std::invalid_argument("Composition: parts must sum to 1 within 1e-12");
}

LatentVector alr(const Composition& z) {
  const Eigen::VectorXd& p = z.parts();
  const Eigen::Index d = p.size() - 1;
  const double log_last = std::log(p[d]);
  LatentVector eta(d);
  for (Eigen::Index k = 0; k < d; ++k) eta[k] = std::log(p[k]) - log_last;
  return eta;
}

Eigen::VectorXd inv_alr_parts(const LatentVector& eta) {
  const Eigen::Index d = eta.size();
  for (Eigen::Index k = 0; k < d; ++k)
    if (!std::isfinite(eta[k])) throw std::invalid_argument("inv_alr: coordinates must be finite");
  const double shift = std::max(0.0, eta.maxCoeff());
  Eigen::VectorXd w(d + 1);
  for (Eigen::Index k = 0; k < d; ++k) w[k] = std::exp(eta[k] - shift);
  w[d] = std::exp(-shift);
  w /= w.sum();
  // keep extreme coordinates strictly inside (0, 1); the sum stays within 1e-12
  const double cap = std::nextafter(1.0, 0.0);
  for (Eigen::Index k = 0; k <= d; ++k) w[k] = std::min(std::max(w[k], 1e-310), cap);
  return w;
}

Composition inv_alr(const LatentVector& eta) { return Composition(inv_alr_parts(eta)); }

Eigen::MatrixXd d_inv_alr(const Eigen::VectorXd& z) {
  const Eigen::Index n_parts = z.size();
  const Eigen::Index d = n_parts - 1;
  Eigen::MatrixXd jac(d, n_parts);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index k = 0; k < n_parts; ++k)
      jac(i, k) = z[k] * ((k == i ? 1.0 : 0.0) - z[i]);
  return jac;
}

Eigen::MatrixXd d_inv_alr(const Composition& z) { return d_inv_alr(z.parts()); }

std::vector<Eigen::MatrixXd> d2_inv_alr(const Eigen::VectorXd& z) {
  const Eigen::Index n_parts = z.size();
  const Eigen::Index d = n_parts - 1;
  std::vector<Eigen::MatrixXd> hess(static_cast<size_t>(n_parts));
  for (Eigen::Index k = 0; k < n_parts; ++k) {
    Eigen::MatrixXd h(d, d);
    for (Eigen::Index i = 0; i < d; ++i) {
      const double dki = (k == i) ? 1.0 : 0.0;
      for (Eigen::Index j = 0; j < d; ++j) {
        const double dkj = (k == j) ? 1.0 : 0.0;
        const double dij = (i == j) ? 1.0 : 0.0;
        h(i, j) = z[k] * (dkj - z[j]) * (dki - z[i]) - z[k] * z[i] * (dij - z[j]);
      }
    }
    hess[static_cast<size_t>(k)] = std::move(h);
  }
  return hess;
}

std::vector<Eigen::MatrixXd> d2_inv_alr(const Composition& z) { return d2_inv_alr(z.parts()); }

double acd(const Composition& u, const Composition& v) {
  if (u.size() != v.size()) throw std::invalid_argument("acd: dimension mismatch");
  const Eigen::VectorXd diff = alr(u) - alr(v);
  const Eigen::Index d = diff.size();
  // J = I + ones, so J^{-1} = I - ones/(d+1) by Sherman-Morrison.
  const double s = diff.sum();
  const double quad = diff.squaredNorm() - s * s / (static_cast<double>(d) + 1.0);
  return std::sqrt(std::max(quad, 0.0));
}

bool repair_composition(Eigen::VectorXd& parts, double floor_eps) {
  const double sum = parts.sum();
  bool needs_repair = std::abs(sum - 1.0) > 1e-9;
  for (Eigen::Index k = 0; k < parts.size() && !needs_repair; ++k)
    if (parts[k] < 0.5 * floor_eps) needs_repair = true;
  if (!needs_repair) return false;
  for (Eigen::Index k = 0; k < parts.size(); ++k) parts[k] = std::max(parts[k], floor_eps);
  parts /= parts.sum();
  return true;
}

}  // namespace compolattice
