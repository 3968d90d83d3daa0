#include "compolattice/validation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "compolattice/cholesky.hpp"
#include "compolattice/errors.hpp"
#include "compolattice/inference.hpp"
#include "compolattice/parallel.hpp"

namespace compolattice {

SimulatedData simulate_dataset(const LatticeModel& lattice, const ModelState& true_state,
                               RngStream& rng) {
  const int n = lattice.num_nodes();
  const int d = static_cast<int>(true_state.rho.rows());
  const int p = lattice.num_covariates();
  if (true_state.beta.size() != static_cast<Eigen::Index>(d) * p)
    throw std::invalid_argument("simulate_dataset: beta has wrong dimension");
  if (!(true_state.alpha > 0.0) || !(true_state.kappa > 0.0))
    throw std::invalid_argument("simulate_dataset: alpha and kappa must be positive");

  const Eigen::SparseMatrix<double> q = assemble_Q(lattice, true_state.kappa);
  const PrecisionFactor joint = factorize(assemble_joint_precision(q, true_state.rho));

  SimulatedData sim;
  sim.x_true = sample_gmrf(joint, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n) * d), rng);

  sim.z_true.resize(n, d + 1);
  Eigen::VectorXd eta(d);
  for (int node = 0; node < n; ++node) {
    for (int k = 0; k < d; ++k)
      eta[k] = lattice.covariates.row(node).dot(
                   true_state.beta.segment(static_cast<Eigen::Index>(k) * p, p)) +
               sim.x_true[static_cast<Eigen::Index>(k) * n + node];
    sim.z_true.row(node) = inv_alr_parts(eta).transpose();
  }

  sim.obs.y.resize(lattice.num_obs(), d + 1);
  for (int s = 0; s < lattice.num_obs(); ++s) {
    const int node = lattice.obs_index[static_cast<size_t>(s)];
    Eigen::VectorXd y =
        draw_dirichlet(true_state.alpha * sim.z_true.row(node).transpose(), rng);
    repair_composition(y);
    sim.obs.y.row(s) = y.transpose();
  }
  return sim;
}

LatticeModel make_synthetic_lattice(int n_rows, int n_cols, int n_obs, std::uint64_t seed) {
  LatticeModel lattice = build_lattice(n_rows, n_cols, 1.0);
  const int n = lattice.num_nodes();
  if (n_obs < 1 || n_obs > n)
    throw std::invalid_argument("make_synthetic_lattice: n_obs out of range");

  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) {
    const auto& c = lattice.cells[static_cast<size_t>(i)];
    const double fx = n_cols > 1 ? static_cast<double>(c.col) / (n_cols - 1) : 0.0;
    const double fy = n_rows > 1 ? static_cast<double>(c.row) / (n_rows - 1) : 0.0;
    v[i] = (fx - 0.5) + 0.4 * std::sin(2.0 * 3.14159265358979323846 * fy);
  }
  const double mean = v.mean();
  const double sd = std::sqrt((v.array() - mean).square().sum() / std::max(n - 1, 1));
  if (sd > 0) v = (v.array() - mean) / sd;
  lattice.covariates.resize(n, 2);
  lattice.covariates.col(0).setOnes();
  lattice.covariates.col(1) = v;

  std::vector<int> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  RngStream site_rng = make_stream(derive_seed(seed, 0));
  std::shuffle(order.begin(), order.end(), site_rng);
  order.resize(static_cast<size_t>(n_obs));
  std::sort(order.begin(), order.end());
  lattice.obs_index = order;
  return lattice;
}

SamplerConfig make_cv_chain_config(long n_iter, long burn_in, long thin) {
  SamplerConfig cfg;
  cfg.n_iter = n_iter;
  cfg.burn_in = burn_in;
  cfg.thin = thin;
  return cfg;
}

std::vector<std::vector<int>> make_folds(int n_obs, int k, std::uint64_t seed) {
  if (k < 2 || k > n_obs) throw std::invalid_argument("make_folds: need 2 <= k <= n_obs");
  std::vector<int> order(static_cast<size_t>(n_obs));
  std::iota(order.begin(), order.end(), 0);
  RngStream rng = make_stream(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<int>> folds(static_cast<size_t>(k));
  for (int i = 0; i < n_obs; ++i) folds[static_cast<size_t>(i % k)].push_back(order[static_cast<size_t>(i)]);
  return folds;
}

namespace {

Eigen::MatrixXd chain_predictor(const LatticeModel& train_lattice, const Observations& train_data,
                                const HyperParams& hp, const SamplerConfig& chain,
                                std::uint64_t seed, const std::vector<int>& nodes) {
  SamplerConfig cfg = chain;
  cfg.seed = seed;
  const McmcTrace trace = run_chain(train_lattice, train_data, hp, cfg);
  Eigen::MatrixXd out(static_cast<Eigen::Index>(nodes.size()), train_data.n_components());
  for (size_t i = 0; i < nodes.size(); ++i)
    out.row(static_cast<Eigen::Index>(i)) =
        posterior_composition(trace, train_lattice, nodes[i]).parts().transpose();
  return out;
}

}  // namespace

CvReport cross_validate(const LatticeModel& lattice, const Observations& data,
                        const HyperParams& hp, const CvConfig& config,
                        const std::vector<ModelVariant>& variants, const CvPredictor& predictor) {
  const int n_obs = data.num_sites();
  if (config.k > n_obs) throw std::invalid_argument("cross_validate: more folds than observations");
  if (config.repeats < 1) throw std::invalid_argument("cross_validate: repeats must be >= 1");
  const CvPredictor predict = predictor ? predictor : CvPredictor(chain_predictor);

  // fold partitions are shared across variants so the comparison is paired
  std::vector<std::vector<std::vector<int>>> folds_by_repeat;
  folds_by_repeat.reserve(static_cast<size_t>(config.repeats));
  for (int r = 0; r < config.repeats; ++r)
    folds_by_repeat.push_back(
        make_folds(n_obs, config.k, derive_seed(config.seed, static_cast<std::uint64_t>(r))));

  struct Job {
    int repeat, fold;
    size_t variant_idx;
  };
  std::vector<Job> jobs;
  for (size_t v = 0; v < variants.size(); ++v)
    for (int r = 0; r < config.repeats; ++r)
      for (int f = 0; f < config.k; ++f) jobs.push_back(Job{r, f, v});

  // per job: (sum of ACD over held-out cells, cell count)
  std::vector<double> job_sum(jobs.size(), 0.0);
  std::vector<int> job_count(jobs.size(), 0);

  parallel_for(
      static_cast<int>(jobs.size()),
      [&](int j) {
        const Job& job = jobs[static_cast<size_t>(j)];
        const std::vector<int>& test_positions =
            folds_by_repeat[static_cast<size_t>(job.repeat)][static_cast<size_t>(job.fold)];

        std::vector<bool> is_test(static_cast<size_t>(n_obs), false);
        for (int pos : test_positions) is_test[static_cast<size_t>(pos)] = true;

        LatticeModel train = lattice;
        train.obs_index.clear();
        Observations train_data;
        std::vector<int> kept;
        for (int s = 0; s < n_obs; ++s)
          if (!is_test[static_cast<size_t>(s)]) {
            train.obs_index.push_back(lattice.obs_index[static_cast<size_t>(s)]);
            kept.push_back(s);
          }
        train_data.y.resize(static_cast<Eigen::Index>(kept.size()), data.n_components());
        for (size_t i = 0; i < kept.size(); ++i)
          train_data.y.row(static_cast<Eigen::Index>(i)) = data.y.row(kept[i]);

        std::vector<int> test_nodes;
        for (int pos : test_positions)
          test_nodes.push_back(lattice.obs_index[static_cast<size_t>(pos)]);

        SamplerConfig chain = config.chain;
        chain.model_variant = variants[job.variant_idx];
        const std::uint64_t seed =
            derive_seed(config.seed, static_cast<std::uint64_t>(config.repeats) +
                                         static_cast<std::uint64_t>(j));
        const Eigen::MatrixXd pred = predict(train, train_data, hp, chain, seed, test_nodes);

        double sum = 0.0;
        for (size_t i = 0; i < test_positions.size(); ++i) {
          const Composition u(pred.row(static_cast<Eigen::Index>(i)).transpose());
          const Composition v(data.y.row(test_positions[i]).transpose());
          sum += acd(u, v);
        }
        job_sum[static_cast<size_t>(j)] = sum;
        job_count[static_cast<size_t>(j)] = static_cast<int>(test_positions.size());
      },
      config.n_threads);

  CvReport report;
  report.k = config.k;
  report.repeats = config.repeats;
  report.seed = config.seed;
  report.chain_iters = config.chain.n_iter;
  report.chain_burn_in = config.chain.burn_in;

  for (size_t v = 0; v < variants.size(); ++v) {
    CvVariantResult res;
    res.variant = variants[v];
    res.fold_error = Eigen::MatrixXd::Zero(config.repeats, config.k);
    res.repeat_error = Eigen::VectorXd::Zero(config.repeats);
    Eigen::VectorXd repeat_count = Eigen::VectorXd::Zero(config.repeats);
    for (size_t j = 0; j < jobs.size(); ++j) {
      if (jobs[j].variant_idx != v) continue;
      res.fold_error(jobs[j].repeat, jobs[j].fold) = job_sum[j] / job_count[j];
      res.repeat_error[jobs[j].repeat] += job_sum[j];
      repeat_count[jobs[j].repeat] += job_count[j];
    }
    res.repeat_error.array() /= repeat_count.array();
    res.mean_error = res.repeat_error.mean();
    const double var = (res.repeat_error.array() - res.mean_error).square().sum() /
                       std::max(config.repeats - 1, 1);
    res.sd_error = std::sqrt(var);
    report.variants.push_back(std::move(res));
  }
  return report;
}

double compare_to_reference(const CompositionMap& predicted, const CompositionMap& reference) {
  if (predicted.cell_ids.size() != reference.cell_ids.size() ||
      predicted.cell_ids.empty())
    throw DataError("compare_to_reference: cell sets differ in size or are empty");

  auto order_of = [](const CompositionMap& m) {
    std::vector<size_t> order(m.cell_ids.size());
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return m.cell_ids[a] < m.cell_ids[b]; });
    return order;
  };
  const auto po = order_of(predicted);
  const auto ro = order_of(reference);

  double sum = 0.0;
  for (size_t i = 0; i < po.size(); ++i) {
    if (predicted.cell_ids[po[i]] != reference.cell_ids[ro[i]])
      throw DataError("compare_to_reference: cell id mismatch");
    sum += acd(Composition(predicted.comps.row(static_cast<Eigen::Index>(po[i])).transpose()),
               Composition(reference.comps.row(static_cast<Eigen::Index>(ro[i])).transpose()));
  }
  return sum / static_cast<double>(po.size());
}

}  // namespace compolattice
