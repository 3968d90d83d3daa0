#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "compolattice/composition.hpp"
#include "compolattice/likelihood.hpp"
#include "compolattice/rng.hpp"
#include "compolattice/sampler.hpp"

namespace compolattice {

/// Forward draw from the hierarchy at fixed (beta, alpha, kappa, rho):
/// X ~ N(0, rho (x) Q^{-1}), eta = B beta + X, z = inv_alr(eta), y ~ Dirichlet(alpha z)
/// at the observed nodes.
struct SimulatedData {
  Observations obs;        // rows follow lattice.obs_index
  Eigen::MatrixXd z_true;  // N x D compositions at every node
  Eigen::VectorXd x_true;  // N*d field draw (field-major)
};

SimulatedData simulate_dataset(const LatticeModel& lattice, const ModelState& true_state,
                               RngStream& rng);

/// Full-rectangle lattice with an intercept plus one standardized smooth covariate
/// (east-west gradient + north-south sinusoid) and a seeded random observation
/// subset; the generator behind `simulate` and the synthetic benchmarks.
LatticeModel make_synthetic_lattice(int n_rows, int n_cols, int n_obs, std::uint64_t seed);

/// Repeated k-fold cross-validation scored by the compositional distance against
/// the held-out observations.
struct CvConfig {
  int k = 6;
  int repeats = 10;
  SamplerConfig chain;  // per-fit chain; see make_cv_chain_config for the defaults
  std::uint64_t seed = 0;
  int n_threads = 0;  // 0 = recommended_threads()
};

/// Shortened refit chain used inside cross-validation (length is a config knob).
SamplerConfig make_cv_chain_config(long n_iter = 20000, long burn_in = 5000, long thin = 10);

struct CvVariantResult {
  ModelVariant variant = ModelVariant::full;
  Eigen::MatrixXd fold_error;    // repeats x k, mean ACD of each fold's held-out cells
  Eigen::VectorXd repeat_error;  // pooled mean ACD over all held-out cells per repeat
  double mean_error = 0.0;       // mean of repeat_error
  double sd_error = 0.0;         // standard deviation of repeat_error
};

struct CvReport {
  std::vector<CvVariantResult> variants;
  int k = 0;
  int repeats = 0;
  std::uint64_t seed = 0;
  long chain_iters = 0;
  long chain_burn_in = 0;
};

/// Predicts compositions (|nodes| x D) at the given nodes after fitting to training
/// data; replaceable in tests.
using CvPredictor = std::function<Eigen::MatrixXd(
    const LatticeModel& train_lattice, const Observations& train_data, const HyperParams& hp,
    const SamplerConfig& chain, std::uint64_t seed, const std::vector<int>& nodes)>;

/// Fold partition of observation positions [0, n_obs) for one repeat: round-robin
/// over a seeded shuffle, so fold sizes differ by at most one and every observation
/// appears in exactly one fold.
std::vector<std::vector<int>> make_folds(int n_obs, int k, std::uint64_t seed);

CvReport cross_validate(const LatticeModel& lattice, const Observations& data,
                        const HyperParams& hp, const CvConfig& config,
                        const std::vector<ModelVariant>& variants,
                        const CvPredictor& predictor = nullptr);

/// Composition map keyed by cell id; ordering is immaterial.
struct CompositionMap {
  std::vector<long> cell_ids;
  Eigen::MatrixXd comps;  // one row per cell id
};

/// Mean compositional distance between two maps over identical cell sets.
double compare_to_reference(const CompositionMap& predicted, const CompositionMap& reference);

}  // namespace compolattice
