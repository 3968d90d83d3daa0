#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "compolattice/cholesky.hpp"
#include "compolattice/likelihood.hpp"
#include "compolattice/rng.hpp"

namespace compolattice {

struct SamplerConfig {
  long n_iter = 100000;
  long burn_in = 10000;
  long thin = 1;
  double eps0 = 0.1;           // initial MALA step size
  double sigma_kappa0 = 0.3;   // initial log-scale RW step for kappa
  double target_mala = 0.57;
  double target_rw = 0.4;
  std::uint64_t seed = 0;
  ModelVariant model_variant = ModelVariant::full;

  void validate() const;
};

/// Post-burn-in, thinned samples of all unknowns plus sampler bookkeeping.
struct McmcTrace {
  int n_nodes = 0;
  int n_fields = 0;
  int n_covariates = 0;
  ModelVariant variant = ModelVariant::full;

  // one row per stored sample; x/kappa/rho are empty for the regression-only variant
  Eigen::MatrixXd x;      // M x (N*d)
  Eigen::MatrixXd beta;   // M x (d*p)
  Eigen::VectorXd alpha;  // M
  Eigen::VectorXd kappa;  // M
  Eigen::MatrixXd rho;    // M x (d*d), row-major flattening of each d x d draw

  Eigen::VectorXd eps_history;          // per iteration
  Eigen::VectorXd sigma_kappa_history;  // per iteration (full variant)

  long mala_accepted = 0, mala_attempted = 0;
  long kappa_accepted = 0, kappa_attempted = 0;
  long mala_accepted_post = 0, mala_attempted_post = 0;
  long kappa_accepted_post = 0, kappa_attempted_post = 0;
  long fisher_failures = 0;  // proposal rejections due to failed factorizations

  SamplerConfig config;

  int n_samples() const { return static_cast<int>(alpha.size()); }
  ModelState state_at(int i) const;

  /// Per-sample latent eta at one node (M x d): eta_k = (B beta_k + X_k)[node].
  Eigen::MatrixXd node_eta(const LatticeModel& lattice, int node) const;
};

/// eps + iter^{-1/2} (acc_prob - target), floored at 1e-8.
double adapt_step(double eps, double acc_prob, long iter, double target);

struct MalaDiagnostics {
  double log_post_current = 0.0;
  double log_post_proposal = 0.0;
  double log_q_forward = 0.0;   // log q(theta* | theta)
  double log_q_reverse = 0.0;   // log q(theta | theta*)
  bool proposal_evaluated = false;  // false when rejected before the reverse kernel
};

struct MalaOutcome {
  bool accepted = false;
  double log_acceptance = 0.0;
  double acc_prob = 0.0;
  bool fisher_failed = false;  // proposal rejected because I(theta*) failed to factorize
  MalaDiagnostics diag;
};

/// Cached evaluation of the current state, reused across consecutive MALA steps
/// while (kappa, rho) stay fixed.
struct MalaEvaluation {
  double log_post = 0.0;
  Eigen::VectorXd grad;
  std::shared_ptr<const PrecisionFactor> fisher;
  Eigen::VectorXd newton;  // fisher^{-1} grad
};

struct MalaCache {
  std::optional<MalaEvaluation> eval;
  std::shared_ptr<SolverPool> pool;  // recycles Fisher factorizations along a chain
  void invalidate() { eval.reset(); }
};

/// One Fisher-preconditioned MALA step over (X, beta, alpha); updates `state` in
/// place on acceptance. `q` must equal assemble_Q(lattice, state.kappa).
MalaOutcome mala_step(ModelState& state, const LatticeModel& lattice, const Observations& data,
                      const HyperParams& hp, double eps, RngStream& rng, ModelVariant variant,
                      const Eigen::SparseMatrix<double>& q, MalaCache* cache = nullptr);
MalaOutcome mala_step(ModelState& state, const LatticeModel& lattice, const Observations& data,
                      const HyperParams& hp, double eps, RngStream& rng,
                      ModelVariant variant = ModelVariant::full);

/// Marginal log posterior of kappa given the latent fields (rho integrated out),
/// up to an additive constant:
///   (d/2) log|Q(kappa)| - (N+b_rho)/2 log|a_rho I + x^T Q x| + (a_kappa-1) log kappa
///   - b_kappa kappa.
double log_kappa_marginal(double kappa, const LatticeModel& lattice,
                          const Eigen::MatrixXd& x_fields, const HyperParams& hp);

struct RwStepResult {
  double value = 0.0;
  double log_density = 0.0;  // log density at the returned value
  bool accepted = false;
  double acc_prob = 0.0;
};

/// Metropolis-Hastings random walk in log scale for a positive scalar; the
/// acceptance ratio carries the kappa*/kappa change-of-variable factor.
RwStepResult log_scale_rw_step(double current, double current_log_density, double sigma,
                               const std::function<double(double)>& log_density, RngStream& rng);

struct KappaRhoOutcome {
  bool accepted = false;
  double acc_prob = 0.0;
};

/// The second MCMC block: log-RW proposal for kappa against the marginalized
/// posterior, then rho refreshed from its inverse-Wishart full conditional at the
/// resulting kappa (redrawn whether or not kappa* was accepted). `q_cache` and
/// `q_logdet_cache` must describe Q at state.kappa and are updated on acceptance.
KappaRhoOutcome kappa_rho_step(ModelState& state, const LatticeModel& lattice,
                               const HyperParams& hp, double sigma_kappa, RngStream& rng,
                               Eigen::SparseMatrix<double>& q_cache, double& q_logdet_cache,
                               const std::shared_ptr<SolverPool>& q_pool = nullptr);

/// Data-informed starting point: beta from least squares of alr(y) on B, alpha at
/// its clipped prior mean, kappa from the domain-range heuristic, rho from the
/// residual covariance. With an rng, X starts at a prior draw given (kappa0, rho0)
/// so the roughness seen by the first kappa updates is typical; without one X = 0
/// (an X of zero makes the marginalized kappa posterior degenerate to
/// |Q|^{d/2} P(kappa), sending kappa on a long excursion before the field adapts).
ModelState initial_state(const LatticeModel& lattice, const Observations& data,
                         const HyperParams& hp, ModelVariant variant,
                         RngStream* rng = nullptr);

using ProgressFn = std::function<void(long iter, long total, double eps, double sigma_kappa)>;

McmcTrace run_chain(const LatticeModel& lattice, const Observations& data, const HyperParams& hp,
                    const SamplerConfig& config, const ProgressFn& progress = nullptr);

}  // namespace compolattice
