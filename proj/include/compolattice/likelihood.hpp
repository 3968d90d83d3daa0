#pragma once

#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "compolattice/composition.hpp"
#include "compolattice/lattice.hpp"

namespace compolattice {

/// Hyperparameters of the hierarchy; defaults are the reference values used throughout.
struct HyperParams {
  double a_alpha = 1.5;   // gamma shape for the Dirichlet scale
  double b_alpha = 0.1;   // gamma rate for the Dirichlet scale
  double a_kappa = 1.0;   // gamma shape for the spatial scale
  double b_kappa = 1.6282814824902876;  // log(100)/sqrt(8)
  double a_rho = 1.0;     // inverse-Wishart scale multiplier
  double b_rho = 10.0;    // inverse-Wishart degrees of freedom
  double q_beta = 1e-3;   // prior precision of the regression coefficients

  /// All strictly positive; b_rho > d - 1 for propriety.
  void validate(int n_fields) const;
};

/// Compositional observations at the lattice's observed nodes (row s = y at obs_index[s]).
struct Observations {
  Eigen::MatrixXd y;  // N_o x D, rows strictly interior and summing to 1

  int num_sites() const { return static_cast<int>(y.rows()); }
  int n_components() const { return static_cast<int>(y.cols()); }
  int n_fields() const { return n_components() - 1; }
};

/// Current values of all unknowns. Layout is field-major throughout:
/// x = (X_1^T, ..., X_d^T)^T with fields of length N, beta = (beta_1^T, ..., beta_d^T)^T
/// with blocks of length p.
struct ModelState {
  Eigen::VectorXd x;     // N*d
  Eigen::VectorXd beta;  // d*p
  double alpha = 1.0;    // > 0
  double kappa = 1.0;    // > 0
  Eigen::MatrixXd rho;   // d x d SPD

  /// N x d matrix view of the latent fields (column k = field k).
  Eigen::Map<const Eigen::MatrixXd> fields(int n_nodes, int n_fields) const {
    return Eigen::Map<const Eigen::MatrixXd>(x.data(), n_nodes, n_fields);
  }
};

enum class ModelVariant { full, regression_only };

/// Dimension of the MALA block: (X, beta, alpha) for the full model, (beta, alpha)
/// for the regression-only one.
int theta_dim(const LatticeModel& lattice, int n_fields, ModelVariant variant);

/// Latent field at observed sites: eta(s, k) = (B beta_k + X_k)[obs_index[s]].
Eigen::MatrixXd latent_at_observed(const ModelState& state, const LatticeModel& lattice,
                                   int n_fields, ModelVariant variant);

/// Dirichlet log-density log Gamma(alpha) - sum_k log Gamma(alpha z_k)
///                       + sum_k (alpha z_k - 1) log y_k.
double dirichlet_loglik(const Composition& y, const Composition& z, double alpha);

/// Kernel form over raw part vectors; log_y holds precomputed logs of y.
double dirichlet_loglik_raw(const Eigen::VectorXd& log_y, const Eigen::VectorXd& z, double alpha);

/// Joint log posterior of (X, beta, alpha) given (kappa, rho), up to the additive
/// constant collecting the determinant terms that are fixed within this block.
/// Returns -inf for alpha <= 0.
double log_posterior(const ModelState& state, const LatticeModel& lattice,
                     const Observations& data, const HyperParams& hp,
                     const Eigen::SparseMatrix<double>& q, ModelVariant variant);
double log_posterior(const ModelState& state, const LatticeModel& lattice,
                     const Observations& data, const HyperParams& hp,
                     ModelVariant variant = ModelVariant::full);

/// Gradient of log_posterior w.r.t. theta = (X, beta, alpha) (or (beta, alpha)).
Eigen::VectorXd grad_log_posterior(const ModelState& state, const LatticeModel& lattice,
                                   const Observations& data, const HyperParams& hp,
                                   const Eigen::SparseMatrix<double>& q, ModelVariant variant);
Eigen::VectorXd grad_log_posterior(const ModelState& state, const LatticeModel& lattice,
                                   const Observations& data, const HyperParams& hp,
                                   ModelVariant variant = ModelVariant::full);

/// Per-site pieces of the expected information of the data likelihood, in eta-space:
///   site[s](k, k')   = alpha^2 sum_l psi'(alpha z_l) dz_l/deta_k dz_l/deta_k'
///   site_alpha[s](k) = alpha   sum_l z_l psi'(alpha z_l) dz_l/deta_k
///   alpha_alpha      = sum_s [ sum_l z_l^2 psi'(alpha z_l) - psi'(alpha) ]
struct FisherDataBlocks {
  std::vector<Eigen::MatrixXd> site;
  std::vector<Eigen::VectorXd> site_alpha;
  double alpha_alpha = 0.0;
};

FisherDataBlocks fisher_data_blocks(const ModelState& state, const LatticeModel& lattice,
                                    const Observations& data);

/// Expected Fisher information of theta including the prior curvature:
/// data blocks scattered through [A, AB], plus blockdiag(rho^{-1} (x) Q, q_beta I)
/// and the alpha prior term (a_alpha - 1)/alpha^2 (alpha diagonal floored at 1e-8).
Eigen::SparseMatrix<double> fisher_information(const ModelState& state,
                                               const LatticeModel& lattice,
                                               const Observations& data, const HyperParams& hp,
                                               const Eigen::SparseMatrix<double>& q,
                                               ModelVariant variant);
Eigen::SparseMatrix<double> fisher_information(const ModelState& state,
                                               const LatticeModel& lattice,
                                               const Observations& data, const HyperParams& hp,
                                               ModelVariant variant = ModelVariant::full);

}  // namespace compolattice
