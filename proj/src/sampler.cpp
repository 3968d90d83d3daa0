#include "compolattice/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include "compolattice/errors.hpp"

namespace compolattice {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kStepFloor = 1e-8;

Eigen::VectorXd pack_theta(const ModelState& state, ModelVariant variant) {
  const Eigen::Index nx = variant == ModelVariant::full ? state.x.size() : 0;
  Eigen::VectorXd theta(nx + state.beta.size() + 1);
  if (nx > 0) theta.head(nx) = state.x;
  theta.segment(nx, state.beta.size()) = state.beta;
  theta[theta.size() - 1] = state.alpha;
  return theta;
}

ModelState unpack_theta(const Eigen::VectorXd& theta, const ModelState& like, ModelVariant variant) {
  ModelState out = like;
  const Eigen::Index nx = variant == ModelVariant::full ? like.x.size() : 0;
  if (nx > 0) out.x = theta.head(nx);
  out.beta = theta.segment(nx, like.beta.size());
  out.alpha = theta[theta.size() - 1];
  return out;
}

std::optional<MalaEvaluation> evaluate_state(const ModelState& state, const LatticeModel& lattice,
                                             const Observations& data, const HyperParams& hp,
                                             const Eigen::SparseMatrix<double>& q,
                                             ModelVariant variant,
                                             const std::shared_ptr<SolverPool>& pool) {
  MalaEvaluation eval;
  eval.log_post = log_posterior(state, lattice, data, hp, q, variant);
  if (!std::isfinite(eval.log_post)) return std::nullopt;
  eval.grad = grad_log_posterior(state, lattice, data, hp, q, variant);
  if (!eval.grad.allFinite()) return std::nullopt;
  auto factor =
      PrecisionFactor::try_factorize(fisher_information(state, lattice, data, hp, q, variant), pool);
  if (!factor) return std::nullopt;
  eval.fisher = std::make_shared<const PrecisionFactor>(std::move(*factor));
  eval.newton = eval.fisher->solve(eval.grad);
  return eval;
}

double gaussian_proposal_logdensity(const PrecisionFactor& fisher, double eps,
                                    const Eigen::VectorXd& deviation) {
  const double n = static_cast<double>(fisher.dim());
  return 0.5 * (fisher.log_det() - 2.0 * n * std::log(eps)) -
         0.5 * fisher.quad_form(deviation) / (eps * eps);
}

std::string summarize_state(const ModelState& state) {
  std::ostringstream os;
  os << "{\"alpha\":" << state.alpha << ",\"kappa\":" << state.kappa
     << ",\"beta_norm\":" << state.beta.norm() << ",\"x_norm\":" << state.x.norm() << "}";
  return os.str();
}

double logdet_spd_dense(const Eigen::MatrixXd& m) {
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) throw NumericalError("dense log-determinant: matrix not SPD");
  return 2.0 * Eigen::MatrixXd(llt.matrixL()).diagonal().array().log().sum();
}

}  // namespace

void SamplerConfig::validate() const {
  if (n_iter < 1) throw ConfigError("n_iter must be at least 1");
  if (burn_in < 0 || burn_in >= n_iter) throw ConfigError("burn_in must satisfy 0 <= burn_in < n_iter");
  if (thin < 1) throw ConfigError("thin must be at least 1");
  if (!(target_mala > 0.0 && target_mala < 1.0) || !(target_rw > 0.0 && target_rw < 1.0))
    throw ConfigError("acceptance targets must lie in (0, 1)");
  if (!(eps0 > 0.0) || !(sigma_kappa0 > 0.0)) throw ConfigError("initial step sizes must be positive");
}

ModelState McmcTrace::state_at(int i) const {
  if (i < 0 || i >= n_samples()) throw std::out_of_range("McmcTrace::state_at");
  ModelState s;
  if (x.cols() > 0) s.x = x.row(i).transpose();
  s.beta = beta.row(i).transpose();
  s.alpha = alpha[i];
  if (kappa.size() > 0) s.kappa = kappa[i];
  if (rho.cols() > 0) {
    s.rho.resize(n_fields, n_fields);
    for (int a = 0; a < n_fields; ++a)
      for (int b = 0; b < n_fields; ++b) s.rho(a, b) = rho(i, a * n_fields + b);
  } else {
    s.rho = Eigen::MatrixXd::Identity(n_fields, n_fields);
  }
  return s;
}

Eigen::MatrixXd McmcTrace::node_eta(const LatticeModel& lattice, int node) const {
  if (node < 0 || node >= n_nodes) throw std::out_of_range("McmcTrace::node_eta: bad node");
  const int m = n_samples();
  Eigen::MatrixXd eta(m, n_fields);
  const Eigen::VectorXd b_row = lattice.covariates.row(node).transpose();
  for (int k = 0; k < n_fields; ++k) {
    eta.col(k) = beta.middleCols(static_cast<Eigen::Index>(k) * n_covariates, n_covariates) * b_row;
    if (x.cols() > 0) eta.col(k) += x.col(static_cast<Eigen::Index>(k) * n_nodes + node);
  }
  return eta;
}

double adapt_step(double eps, double acc_prob, long iter, double target) {
  if (iter < 1) throw std::invalid_argument("adapt_step: iter must be >= 1");
  const double gamma = 1.0 / std::sqrt(static_cast<double>(iter));
  return std::max(eps + gamma * (acc_prob - target), kStepFloor);
}

MalaOutcome mala_step(ModelState& state, const LatticeModel& lattice, const Observations& data,
                      const HyperParams& hp, double eps, RngStream& rng, ModelVariant variant,
                      const Eigen::SparseMatrix<double>& q, MalaCache* cache) {
  if (!(eps > 0.0)) throw std::invalid_argument("mala_step: eps must be positive");

  MalaCache local;
  MalaCache& c = cache ? *cache : local;
  if (!c.pool) c.pool = std::make_shared<SolverPool>();
  if (!c.eval) {
    auto eval = evaluate_state(state, lattice, data, hp, q, variant, c.pool);
    if (!eval)
      throw NumericalError("mala_step: current state cannot be evaluated " + summarize_state(state));
    c.eval = std::move(*eval);
  }
  const MalaEvaluation& cur = *c.eval;

  const Eigen::VectorXd theta = pack_theta(state, variant);
  const Eigen::VectorXd mu_fwd = theta + 0.5 * eps * eps * cur.newton;
  const Eigen::VectorXd noise = cur.fisher->sample(Eigen::VectorXd::Zero(theta.size()), rng);
  const Eigen::VectorXd theta_star = mu_fwd + eps * noise;
  const double log_u = std::log(std::uniform_real_distribution<double>(0.0, 1.0)(rng));

  MalaOutcome out;
  out.diag.log_post_current = cur.log_post;
  out.diag.log_q_forward = gaussian_proposal_logdensity(*cur.fisher, eps, theta_star - mu_fwd);

  const ModelState proposal = unpack_theta(theta_star, state, variant);
  if (!(proposal.alpha > 0.0)) {
    out.log_acceptance = kNegInf;
    out.acc_prob = 0.0;
    out.diag.log_post_proposal = kNegInf;
    return out;
  }

  auto prop_eval = evaluate_state(proposal, lattice, data, hp, q, variant, c.pool);
  if (!prop_eval) {
    out.log_acceptance = kNegInf;
    out.acc_prob = 0.0;
    out.fisher_failed = true;
    return out;
  }
  out.diag.proposal_evaluated = true;
  out.diag.log_post_proposal = prop_eval->log_post;

  const Eigen::VectorXd mu_rev = theta_star + 0.5 * eps * eps * prop_eval->newton;
  out.diag.log_q_reverse = gaussian_proposal_logdensity(*prop_eval->fisher, eps, theta - mu_rev);

  out.log_acceptance = (prop_eval->log_post - cur.log_post) +
                       (out.diag.log_q_reverse - out.diag.log_q_forward);
  out.acc_prob = std::min(1.0, std::exp(std::min(out.log_acceptance, 0.0)));
  if (log_u < out.log_acceptance) {
    state = proposal;
    c.eval = std::move(*prop_eval);
    out.accepted = true;
  }
  return out;
}

MalaOutcome mala_step(ModelState& state, const LatticeModel& lattice, const Observations& data,
                      const HyperParams& hp, double eps, RngStream& rng, ModelVariant variant) {
  if (variant == ModelVariant::regression_only) {
    Eigen::SparseMatrix<double> empty;
    return mala_step(state, lattice, data, hp, eps, rng, variant, empty, nullptr);
  }
  return mala_step(state, lattice, data, hp, eps, rng, variant, assemble_Q(lattice, state.kappa),
                   nullptr);
}

double log_kappa_marginal(double kappa, const LatticeModel& lattice,
                          const Eigen::MatrixXd& x_fields, const HyperParams& hp) {
  if (!(kappa > 0.0)) return kNegInf;
  const int n = lattice.num_nodes();
  const Eigen::Index d = x_fields.cols();
  if (x_fields.rows() != n) throw std::invalid_argument("log_kappa_marginal: x_fields must be N x d");

  const Eigen::SparseMatrix<double> q = assemble_Q(lattice, kappa);
  auto factor = PrecisionFactor::try_factorize(q);
  if (!factor) return kNegInf;

  const Eigen::MatrixXd scatter = hp.a_rho * Eigen::MatrixXd::Identity(d, d) +
                                  x_fields.transpose() * (q * x_fields);
  return 0.5 * static_cast<double>(d) * factor->log_det() -
         0.5 * (static_cast<double>(n) + hp.b_rho) * logdet_spd_dense(scatter) +
         (hp.a_kappa - 1.0) * std::log(kappa) - hp.b_kappa * kappa;
}

RwStepResult log_scale_rw_step(double current, double current_log_density, double sigma,
                               const std::function<double(double)>& log_density, RngStream& rng) {
  if (!(current > 0.0)) throw std::invalid_argument("log_scale_rw_step: current must be positive");
  const double proposal = current * std::exp(sigma * draw_normal(rng));
  const double log_u = std::log(std::uniform_real_distribution<double>(0.0, 1.0)(rng));
  const double prop_log_density = log_density(proposal);

  // q(k|k*)/q(k*|k) = k*/k for a random walk on log kappa
  const double log_acc = prop_log_density - current_log_density + std::log(proposal / current);
  RwStepResult res;
  res.acc_prob = std::min(1.0, std::exp(std::min(log_acc, 0.0)));
  if (std::isfinite(log_acc) && log_u < log_acc) {
    res.value = proposal;
    res.log_density = prop_log_density;
    res.accepted = true;
  } else {
    res.value = current;
    res.log_density = current_log_density;
  }
  return res;
}

KappaRhoOutcome kappa_rho_step(ModelState& state, const LatticeModel& lattice,
                               const HyperParams& hp, double sigma_kappa, RngStream& rng,
                               Eigen::SparseMatrix<double>& q_cache, double& q_logdet_cache,
                               const std::shared_ptr<SolverPool>& q_pool) {
  const int n = lattice.num_nodes();
  const Eigen::Index d = state.rho.rows();
  const Eigen::MatrixXd x_fields = state.fields(n, static_cast<int>(d));

  const Eigen::MatrixXd s_cur = hp.a_rho * Eigen::MatrixXd::Identity(d, d) +
                                x_fields.transpose() * (q_cache * x_fields);
  const double cur_log_density =
      0.5 * static_cast<double>(d) * q_logdet_cache -
      0.5 * (static_cast<double>(n) + hp.b_rho) * logdet_spd_dense(s_cur) +
      (hp.a_kappa - 1.0) * std::log(state.kappa) - hp.b_kappa * state.kappa;

  Eigen::SparseMatrix<double> q_prop;
  double q_prop_logdet = 0.0;
  Eigen::MatrixXd s_prop;
  auto marginal = [&](double kappa_star) -> double {
    q_prop = assemble_Q(lattice, kappa_star);
    auto factor = PrecisionFactor::try_factorize(q_prop, q_pool);
    if (!factor) return kNegInf;
    q_prop_logdet = factor->log_det();
    s_prop = hp.a_rho * Eigen::MatrixXd::Identity(d, d) +
             x_fields.transpose() * (q_prop * x_fields);
    return 0.5 * static_cast<double>(d) * q_prop_logdet -
           0.5 * (static_cast<double>(n) + hp.b_rho) * logdet_spd_dense(s_prop) +
           (hp.a_kappa - 1.0) * std::log(kappa_star) - hp.b_kappa * kappa_star;
  };

  const RwStepResult rw = log_scale_rw_step(state.kappa, cur_log_density, sigma_kappa, marginal, rng);
  Eigen::MatrixXd scatter = s_cur;
  if (rw.accepted) {
    state.kappa = rw.value;
    q_cache = std::move(q_prop);
    q_logdet_cache = q_prop_logdet;
    scatter = s_prop;
  }
  // rho is refreshed from its full conditional every block, also on rejection:
  // the proposal density q(kappa*, rho* | kappa, rho) = P(rho*|X, kappa*) q(kappa*|kappa)
  // makes this a partially collapsed Gibbs move that leaves [kappa, rho | X] invariant.
  state.rho = draw_inv_wishart(scatter, static_cast<double>(n) + hp.b_rho, rng);

  KappaRhoOutcome out;
  out.accepted = rw.accepted;
  out.acc_prob = rw.acc_prob;
  return out;
}

ModelState initial_state(const LatticeModel& lattice, const Observations& data,
                         const HyperParams& hp, ModelVariant variant, RngStream* rng) {
  const int n = lattice.num_nodes();
  const int d = data.n_fields();
  const int p = lattice.num_covariates();
  const int n_obs = data.num_sites();

  ModelState state;
  state.beta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d) * p);
  state.alpha = std::clamp(hp.a_alpha / hp.b_alpha, 1.0, 50.0);
  const double diam = lattice.domain_diameter();
  state.kappa = diam > 0.0 ? std::sqrt(8.0) / (diam / 5.0) : 1.0;
  state.rho = Eigen::MatrixXd::Identity(d, d);
  if (variant == ModelVariant::full) state.x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n) * d);

  if (n_obs == 0) {
    if (rng && variant == ModelVariant::full) {
      const PrecisionFactor joint =
          factorize(assemble_joint_precision(assemble_Q(lattice, state.kappa), state.rho));
      state.x = sample_gmrf(joint, state.x, *rng);
    }
    return state;
  }

  Eigen::MatrixXd eta_obs(n_obs, d);
  for (int s = 0; s < n_obs; ++s)
    eta_obs.row(s) = alr(Composition(data.y.row(s).transpose())).transpose();

  const Eigen::MatrixXd b_obs = lattice.covariates_at_observed();
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(b_obs);
  Eigen::MatrixXd resid = eta_obs;
  for (int k = 0; k < d; ++k) {
    const Eigen::VectorXd beta_k = qr.solve(eta_obs.col(k));
    state.beta.segment(static_cast<Eigen::Index>(k) * p, p) = beta_k;
    resid.col(k) -= b_obs * beta_k;
  }
  if (n_obs > 1) {
    state.rho = resid.transpose() * resid / static_cast<double>(n_obs - 1) +
                1e-6 * Eigen::MatrixXd::Identity(d, d);
  }
  if (rng && variant == ModelVariant::full) {
    const PrecisionFactor joint =
        factorize(assemble_joint_precision(assemble_Q(lattice, state.kappa), state.rho));
    state.x = sample_gmrf(joint, Eigen::VectorXd::Zero(state.x.size()), *rng);
  }
  return state;
}

McmcTrace run_chain(const LatticeModel& lattice, const Observations& data, const HyperParams& hp,
                    const SamplerConfig& config, const ProgressFn& progress) {
  config.validate();
  hp.validate(data.n_fields());
  if (lattice.num_obs() != data.num_sites())
    throw std::invalid_argument("run_chain: observations do not match lattice.obs_index");

  const int n = lattice.num_nodes();
  const int d = data.n_fields();
  const int p = lattice.num_covariates();
  const bool full = config.model_variant == ModelVariant::full;

  RngStream rng = make_stream(config.seed);
  ModelState state = initial_state(lattice, data, hp, config.model_variant, &rng);

  McmcTrace trace;
  trace.n_nodes = n;
  trace.n_fields = d;
  trace.n_covariates = p;
  trace.variant = config.model_variant;
  trace.config = config;

  const int n_store = static_cast<int>((config.n_iter - config.burn_in) / config.thin);
  if (full) trace.x.resize(n_store, static_cast<Eigen::Index>(n) * d);
  trace.beta.resize(n_store, static_cast<Eigen::Index>(d) * p);
  trace.alpha.resize(n_store);
  if (full) {
    trace.kappa.resize(n_store);
    trace.rho.resize(n_store, static_cast<Eigen::Index>(d) * d);
    trace.sigma_kappa_history.resize(config.n_iter);
  }
  trace.eps_history.resize(config.n_iter);

  Eigen::SparseMatrix<double> q;
  double q_logdet = 0.0;
  if (full) {
    q = assemble_Q(lattice, state.kappa);
    auto qf = PrecisionFactor::try_factorize(q);
    if (!qf) throw ChainFailure(0, "initial Q(kappa) not SPD", summarize_state(state));
    q_logdet = qf->log_det();
  }

  double eps = config.eps0;
  double sigma_kappa = config.sigma_kappa0;
  MalaCache cache;
  auto q_pool = std::make_shared<SolverPool>();

  for (long iter = 1; iter <= config.n_iter; ++iter) {
    MalaOutcome mala;
    try {
      mala = mala_step(state, lattice, data, hp, eps, rng, config.model_variant, q, &cache);
    } catch (const NumericalError& err) {
      throw ChainFailure(iter, err.what(), summarize_state(state));
    }
    trace.mala_attempted += 1;
    trace.mala_accepted += mala.accepted ? 1 : 0;
    trace.fisher_failures += mala.fisher_failed ? 1 : 0;
    if (iter > config.burn_in) {
      trace.mala_attempted_post += 1;
      trace.mala_accepted_post += mala.accepted ? 1 : 0;
    }

    KappaRhoOutcome kr;
    if (full) {
      try {
        kr = kappa_rho_step(state, lattice, hp, sigma_kappa, rng, q, q_logdet, q_pool);
      } catch (const NumericalError& err) {
        throw ChainFailure(iter, err.what(), summarize_state(state));
      }
      trace.kappa_attempted += 1;
      trace.kappa_accepted += kr.accepted ? 1 : 0;
      if (iter > config.burn_in) {
        trace.kappa_attempted_post += 1;
        trace.kappa_accepted_post += kr.accepted ? 1 : 0;
      }
      // (kappa, rho) moved, so the cached MALA evaluation no longer matches the prior
      cache.invalidate();
    }

    if (iter <= config.burn_in) {
      eps = adapt_step(eps, mala.acc_prob, iter, config.target_mala);
      if (full) sigma_kappa = adapt_step(sigma_kappa, kr.acc_prob, iter, config.target_rw);
    }
    trace.eps_history[iter - 1] = eps;
    if (full) trace.sigma_kappa_history[iter - 1] = sigma_kappa;

    if (iter > config.burn_in && (iter - config.burn_in) % config.thin == 0) {
      const int row = static_cast<int>((iter - config.burn_in) / config.thin) - 1;
      if (full) trace.x.row(row) = state.x.transpose();
      trace.beta.row(row) = state.beta.transpose();
      trace.alpha[row] = state.alpha;
      if (full) {
        trace.kappa[row] = state.kappa;
        for (int a = 0; a < d; ++a)
          for (int b = 0; b < d; ++b) trace.rho(row, static_cast<Eigen::Index>(a) * d + b) = state.rho(a, b);
      }
    }

    if (progress && (iter % 1000 == 0 || iter == config.n_iter))
      progress(iter, config.n_iter, eps, sigma_kappa);
  }
  return trace;
}

}  // namespace compolattice
