#include "compolattice/likelihood.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Cholesky>

#include "compolattice/errors.hpp"
#include "compolattice/special_functions.hpp"

namespace compolattice {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kAlphaDiagFloor = 1e-8;

Eigen::MatrixXd rho_inverse(const Eigen::MatrixXd& rho) {
  Eigen::LLT<Eigen::MatrixXd> llt(rho);
  if (llt.info() != Eigen::Success) throw NumericalError("rho is not positive definite");
  const Eigen::Index d = rho.rows();
  Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(d, d));
  return 0.5 * (inv + inv.transpose());
}

void check_dims(const ModelState& state, const LatticeModel& lattice, const Observations& data,
                ModelVariant variant) {
  const int n = lattice.num_nodes();
  const int d = data.n_fields();
  const int p = lattice.num_covariates();
  if (variant == ModelVariant::full && state.x.size() != static_cast<Eigen::Index>(n) * d)
    throw std::invalid_argument("state.x has wrong dimension");
  if (state.beta.size() != static_cast<Eigen::Index>(d) * p)
    throw std::invalid_argument("state.beta has wrong dimension");
  if (data.num_sites() != lattice.num_obs())
    throw std::invalid_argument("observations do not match lattice.obs_index");
}

}  // namespace

void HyperParams::validate(int n_fields) const {
  const double vals[] = {a_alpha, b_alpha, a_kappa, b_kappa, a_rho, b_rho, q_beta};
  for (double v : vals)
    if (!(v > 0.0)) throw ConfigError("hyperparameters must be strictly positive");
  if (!(b_rho > static_cast<double>(n_fields) - 1.0))
    throw ConfigError("b_rho must exceed d - 1 for a proper inverse Wishart prior");
}

int theta_dim(const LatticeModel& lattice, int n_fields, ModelVariant variant) {
  const int dp = n_fields * lattice.num_covariates();
  if (variant == ModelVariant::full) return lattice.num_nodes() * n_fields + dp + 1;
  return dp + 1;
}

Eigen::MatrixXd latent_at_observed(const ModelState& state, const LatticeModel& lattice,
                                   int n_fields, ModelVariant variant) {
  const int n = lattice.num_nodes();
  const int p = lattice.num_covariates();
  const int n_obs = lattice.num_obs();
  Eigen::MatrixXd eta(n_obs, n_fields);
  for (int k = 0; k < n_fields; ++k) {
    const auto beta_k = state.beta.segment(static_cast<Eigen::Index>(k) * p, p);
    for (int s = 0; s < n_obs; ++s) {
      const int node = lattice.obs_index[static_cast<size_t>(s)];
      double v = lattice.covariates.row(node).dot(beta_k);
      if (variant == ModelVariant::full) v += state.x[static_cast<Eigen::Index>(k) * n + node];
      eta(s, k) = v;
    }
  }
  return eta;
}

double dirichlet_loglik_raw(const Eigen::VectorXd& log_y, const Eigen::VectorXd& z, double alpha) {
  double out = std::lgamma(alpha);
  for (Eigen::Index k = 0; k < z.size(); ++k) {
    const double az = alpha * z[k];
    out += -std::lgamma(az) + (az - 1.0) * log_y[k];
  }
  return out;
}

double dirichlet_loglik(const Composition& y, const Composition& z, double alpha) {
  if (!(alpha > 0.0)) throw std::invalid_argument("dirichlet_loglik: alpha must be positive");
  if (y.size() != z.size()) throw std::invalid_argument("dirichlet_loglik: dimension mismatch");
  return dirichlet_loglik_raw(y.parts().array().log(), z.parts(), alpha);
}

double log_posterior(const ModelState& state, const LatticeModel& lattice,
                     const Observations& data, const HyperParams& hp,
                     const Eigen::SparseMatrix<double>& q, ModelVariant variant) {
  check_dims(state, lattice, data, variant);
  if (!(state.alpha > 0.0)) return kNegInf;

  const int d = data.n_fields();
  double value = 0.0;

  const Eigen::MatrixXd eta = latent_at_observed(state, lattice, d, variant);
  for (int s = 0; s < data.num_sites(); ++s) {
    const Eigen::VectorXd z = inv_alr_parts(eta.row(s).transpose());
    const Eigen::VectorXd log_y = data.y.row(s).array().log();
    value += dirichlet_loglik_raw(log_y, z, state.alpha);
  }

  if (variant == ModelVariant::full) {
    const auto fields = state.fields(lattice.num_nodes(), d);
    const Eigen::MatrixXd qx = q * fields;
    const Eigen::MatrixXd gram = fields.transpose() * qx;  // x^T Q x, d x d
    value -= 0.5 * rho_inverse(state.rho).cwiseProduct(gram).sum();
  }

  value -= 0.5 * hp.q_beta * state.beta.squaredNorm();
  value += (hp.a_alpha - 1.0) * std::log(state.alpha) - state.alpha * hp.b_alpha;
  return value;
}

double log_posterior(const ModelState& state, const LatticeModel& lattice,
                     const Observations& data, const HyperParams& hp, ModelVariant variant) {
  if (variant == ModelVariant::regression_only) {
    Eigen::SparseMatrix<double> empty;
    return log_posterior(state, lattice, data, hp, empty, variant);
  }
  return log_posterior(state, lattice, data, hp, assemble_Q(lattice, state.kappa), variant);
}

Eigen::VectorXd grad_log_posterior(const ModelState& state, const LatticeModel& lattice,
                                   const Observations& data, const HyperParams& hp,
                                   const Eigen::SparseMatrix<double>& q, ModelVariant variant) {
  check_dims(state, lattice, data, variant);
  if (!(state.alpha > 0.0)) throw std::invalid_argument("grad_log_posterior: alpha must be positive");

  const int n = lattice.num_nodes();
  const int d = data.n_fields();
  const int p = lattice.num_covariates();
  const bool full = variant == ModelVariant::full;
  const int x_size = full ? n * d : 0;
  const int beta_off = x_size;
  const int alpha_off = beta_off + d * p;

  Eigen::VectorXd grad = Eigen::VectorXd::Zero(theta_dim(lattice, d, variant));
  const Eigen::MatrixXd eta = latent_at_observed(state, lattice, d, variant);
  const double alpha = state.alpha;

  double grad_alpha = data.num_sites() * digamma(alpha);
  for (int s = 0; s < data.num_sites(); ++s) {
    const int node = lattice.obs_index[static_cast<size_t>(s)];
    const Eigen::VectorXd z = inv_alr_parts(eta.row(s).transpose());
    const Eigen::VectorXd log_y = data.y.row(s).array().log();

    Eigen::VectorXd w(d + 1);
    for (int l = 0; l <= d; ++l) {
      w[l] = alpha * (log_y[l] - digamma(alpha * z[l]));
      grad_alpha += z[l] * (log_y[l] - digamma(alpha * z[l]));
    }
    const Eigen::VectorXd g_eta = d_inv_alr(z) * w;  // d-vector

    for (int k = 0; k < d; ++k) {
      if (full) grad[static_cast<Eigen::Index>(k) * n + node] += g_eta[k];
      grad.segment(beta_off + static_cast<Eigen::Index>(k) * p, p) +=
          g_eta[k] * lattice.covariates.row(node).transpose();
    }
  }
  grad[alpha_off] = grad_alpha + (hp.a_alpha - 1.0) / alpha - hp.b_alpha;

  if (full) {
    const auto fields = state.fields(n, d);
    const Eigen::MatrixXd qx_rinv = (q * fields) * rho_inverse(state.rho);  // N x d
    for (int k = 0; k < d; ++k)
      grad.segment(static_cast<Eigen::Index>(k) * n, n) -= qx_rinv.col(k);
  }
  grad.segment(beta_off, static_cast<Eigen::Index>(d) * p) -= hp.q_beta * state.beta;
  return grad;
}

Eigen::VectorXd grad_log_posterior(const ModelState& state, const LatticeModel& lattice,
                                   const Observations& data, const HyperParams& hp,
                                   ModelVariant variant) {
  if (variant == ModelVariant::regression_only) {
    Eigen::SparseMatrix<double> empty;
    return grad_log_posterior(state, lattice, data, hp, empty, variant);
  }
  return grad_log_posterior(state, lattice, data, hp, assemble_Q(lattice, state.kappa), variant);
}

FisherDataBlocks fisher_data_blocks(const ModelState& state, const LatticeModel& lattice,
                                    const Observations& data) {
  const int d = data.n_fields();
  const double alpha = state.alpha;
  if (!(alpha > 0.0)) throw std::invalid_argument("fisher_data_blocks: alpha must be positive");
  // eta is needed per-site regardless of variant; the X contribution at unobserved
  // sites never enters, so the full-variant path is correct for both.
  const ModelVariant variant =
      state.x.size() == 0 ? ModelVariant::regression_only : ModelVariant::full;
  const Eigen::MatrixXd eta = latent_at_observed(state, lattice, d, variant);

  FisherDataBlocks blocks;
  blocks.site.reserve(static_cast<size_t>(data.num_sites()));
  blocks.site_alpha.reserve(static_cast<size_t>(data.num_sites()));
  for (int s = 0; s < data.num_sites(); ++s) {
    const Eigen::VectorXd z = inv_alr_parts(eta.row(s).transpose());
    const Eigen::MatrixXd jac = d_inv_alr(z);  // d x (d+1)
    Eigen::VectorXd tri(d + 1);
    for (int l = 0; l <= d; ++l) tri[l] = trigamma(alpha * z[l]);

    blocks.site.push_back(alpha * alpha * jac * tri.asDiagonal() * jac.transpose());
    blocks.site_alpha.push_back(alpha * jac * z.cwiseProduct(tri));
    blocks.alpha_alpha += z.array().square().matrix().dot(tri) - trigamma(alpha);
  }
  return blocks;
}

Eigen::SparseMatrix<double> fisher_information(const ModelState& state,
                                               const LatticeModel& lattice,
                                               const Observations& data, const HyperParams& hp,
                                               const Eigen::SparseMatrix<double>& q,
                                               ModelVariant variant) {
  check_dims(state, lattice, data, variant);
  const int n = lattice.num_nodes();
  const int d = data.n_fields();
  const int p = lattice.num_covariates();
  const bool full = variant == ModelVariant::full;
  const int x_size = full ? n * d : 0;
  const int beta_off = x_size;
  const int alpha_off = beta_off + d * p;
  const int dim = theta_dim(lattice, d, variant);

  const FisherDataBlocks blocks = fisher_data_blocks(state, lattice, data);
  const Eigen::MatrixXd b_obs = lattice.covariates_at_observed();

  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<size_t>(full ? q.nonZeros() * d * d : 0) +
                static_cast<size_t>(data.num_sites()) * static_cast<size_t>(d * d) * (p + 2) +
                static_cast<size_t>(d * p + 1) * static_cast<size_t>(d * p + 1));

  if (full) {
    // rho^{-1} (x) Q written directly as triplets (same layout as
    // assemble_joint_precision, without materializing the intermediate matrix)
    const Eigen::MatrixXd rho_inv_sym = [&] {
      Eigen::LLT<Eigen::MatrixXd> llt(state.rho);
      if (llt.info() != Eigen::Success) throw NumericalError("fisher_information: rho not SPD");
      Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(d, d));
      return Eigen::MatrixXd(0.5 * (inv + inv.transpose()));
    }();
    for (int k = 0; k < d; ++k)
      for (int l = 0; l < d; ++l) {
        const double w = rho_inv_sym(k, l);
        if (w == 0.0) continue;
        for (Eigen::Index col = 0; col < q.outerSize(); ++col)
          for (Eigen::SparseMatrix<double>::InnerIterator it(q, col); it; ++it)
            trips.emplace_back(static_cast<Eigen::Index>(k) * n + it.row(),
                               static_cast<Eigen::Index>(l) * n + col, w * it.value());
      }
  }

  Eigen::MatrixXd beta_block = hp.q_beta * Eigen::MatrixXd::Identity(d * p, d * p);
  Eigen::VectorXd beta_alpha = Eigen::VectorXd::Zero(d * p);

  for (int s = 0; s < data.num_sites(); ++s) {
    const int node = lattice.obs_index[static_cast<size_t>(s)];
    const Eigen::MatrixXd& h = blocks.site[static_cast<size_t>(s)];
    const Eigen::VectorXd& v = blocks.site_alpha[static_cast<size_t>(s)];
    const Eigen::VectorXd b_row = b_obs.row(s).transpose();

    for (int k = 0; k < d; ++k) {
      const Eigen::Index xk = static_cast<Eigen::Index>(k) * n + node;
      if (full) {
        for (int k2 = 0; k2 < d; ++k2) {
          const Eigen::Index xk2 = static_cast<Eigen::Index>(k2) * n + node;
          trips.emplace_back(xk, xk2, h(k, k2));
          for (int j = 0; j < p; ++j) {
            const Eigen::Index bj = beta_off + static_cast<Eigen::Index>(k2) * p + j;
            trips.emplace_back(xk, bj, h(k, k2) * b_row[j]);
            trips.emplace_back(bj, xk, h(k, k2) * b_row[j]);
          }
        }
        trips.emplace_back(xk, alpha_off, v[k]);
        trips.emplace_back(alpha_off, xk, v[k]);
      }
      for (int k2 = 0; k2 < d; ++k2)
        beta_block.block(static_cast<Eigen::Index>(k) * p, static_cast<Eigen::Index>(k2) * p, p, p) +=
            h(k, k2) * (b_row * b_row.transpose());
      beta_alpha.segment(static_cast<Eigen::Index>(k) * p, p) += v[k] * b_row;
    }
  }

  for (int i = 0; i < d * p; ++i) {
    for (int j = 0; j < d * p; ++j) trips.emplace_back(beta_off + i, beta_off + j, beta_block(i, j));
    trips.emplace_back(beta_off + i, alpha_off, beta_alpha[i]);
    trips.emplace_back(alpha_off, beta_off + i, beta_alpha[i]);
  }

  const double prior_alpha = (hp.a_alpha - 1.0) / (state.alpha * state.alpha);
  trips.emplace_back(alpha_off, alpha_off, std::max(blocks.alpha_alpha + prior_alpha, kAlphaDiagFloor));

  Eigen::SparseMatrix<double> info(dim, dim);
  info.setFromTriplets(trips.begin(), trips.end());
  info.makeCompressed();
  return info;
}

Eigen::SparseMatrix<double> fisher_information(const ModelState& state,
                                               const LatticeModel& lattice,
                                               const Observations& data, const HyperParams& hp,
                                               ModelVariant variant) {
  if (variant == ModelVariant::regression_only) {
    Eigen::SparseMatrix<double> empty;
    return fisher_information(state, lattice, data, hp, empty, variant);
  }
  return fisher_information(state, lattice, data, hp, assemble_Q(lattice, state.kappa), variant);
}

}  // namespace compolattice
