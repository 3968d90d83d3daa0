#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "compolattice/composition.hpp"
#include "compolattice/errors.hpp"
#include "compolattice/inference.hpp"
#include "compolattice/io.hpp"
#include "compolattice/parallel.hpp"
#include "compolattice/sampler.hpp"
#include "compolattice/validation.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace compolattice;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumerical = 4;

struct CommonOpts {
  std::string grid, obs, cov, out, trace_path, config_path;
  bool alr_cov = false;
};

json vector_to_json(const Eigen::VectorXd& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(vector_to_json(m.row(i).transpose()));
  return rows;
}

void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open for writing: " + path);
  out << j.dump(2) << "\n";
}

/// Effective-settings hash embedded in every output of a run.
std::string run_hash(const json& effective) { return config_hash(effective.dump()); }

void apply_config_file(const std::string& path, HyperParams& hp, SamplerConfig& cfg,
                       const CLI::App* sub) {
  if (path.empty()) return;
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& err) {
    throw ConfigError(std::string("bad config file: ") + err.what());
  }
  if (j.contains("hyperparams")) {
    const json& h = j["hyperparams"];
    if (h.contains("a_alpha")) hp.a_alpha = h["a_alpha"].get<double>();
    if (h.contains("b_alpha")) hp.b_alpha = h["b_alpha"].get<double>();
    if (h.contains("a_kappa")) hp.a_kappa = h["a_kappa"].get<double>();
    if (h.contains("b_kappa")) hp.b_kappa = h["b_kappa"].get<double>();
    if (h.contains("a_rho")) hp.a_rho = h["a_rho"].get<double>();
    if (h.contains("b_rho")) hp.b_rho = h["b_rho"].get<double>();
    if (h.contains("q_beta")) hp.q_beta = h["q_beta"].get<double>();
  }
  if (j.contains("sampler")) {
    const json& s = j["sampler"];
    auto unset = [sub](const char* flag) { return sub->count(flag) == 0; };
    if (s.contains("iters") && unset("--iters")) cfg.n_iter = s["iters"].get<long>();
    if (s.contains("burn_in") && unset("--burn-in")) cfg.burn_in = s["burn_in"].get<long>();
    if (s.contains("thin") && unset("--thin")) cfg.thin = s["thin"].get<long>();
    if (s.contains("eps0")) cfg.eps0 = s["eps0"].get<double>();
    if (s.contains("sigma_kappa0")) cfg.sigma_kappa0 = s["sigma_kappa0"].get<double>();
    if (s.contains("seed") && unset("--seed")) cfg.seed = s["seed"].get<std::uint64_t>();
  }
}

json hyperparams_to_json(const HyperParams& hp) {
  return json{{"a_alpha", hp.a_alpha}, {"b_alpha", hp.b_alpha}, {"a_kappa", hp.a_kappa},
              {"b_kappa", hp.b_kappa}, {"a_rho", hp.a_rho},     {"b_rho", hp.b_rho},
              {"q_beta", hp.q_beta}};
}

json sampler_to_json(const SamplerConfig& cfg) {
  return json{{"n_iter", cfg.n_iter},
              {"burn_in", cfg.burn_in},
              {"thin", cfg.thin},
              {"eps0", cfg.eps0},
              {"sigma_kappa0", cfg.sigma_kappa0},
              {"target_mala", cfg.target_mala},
              {"target_rw", cfg.target_rw},
              {"seed", cfg.seed},
              {"variant", cfg.model_variant == ModelVariant::full ? "full" : "rm"}};
}

ProgressFn stderr_progress(const char* label) {
  auto start = std::chrono::steady_clock::now();
  return [start, label](long iter, long total, double eps, double sigma) {
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const double rate = secs > 0 ? static_cast<double>(iter) / secs : 0.0;
    std::fprintf(stderr, "\r%s %ld/%ld  %.1f it/s  eps=%.4g sigma_k=%.4g   ", label, iter, total,
                 rate, eps, sigma);
    if (iter == total) std::fprintf(stderr, "\n");
  };
}

int cmd_simulate(const std::string& out_dir, int rows, int cols, int n_obs, int n_comp,
                 double alpha, double kappa, std::uint64_t seed) {
  fs::create_directories(out_dir);
  const int d = n_comp - 1;
  if (n_obs <= 0) n_obs = std::max(10, rows * cols / 6);
  if (n_obs > rows * cols) throw ConfigError("--n-obs exceeds the number of grid cells");
  LatticeModel lattice = make_synthetic_lattice(rows, cols, n_obs, seed);

  ModelState truth;
  truth.alpha = alpha;
  truth.kappa = kappa;
  truth.rho = Eigen::MatrixXd::Constant(d, d, 0.2) + 0.3 * Eigen::MatrixXd::Identity(d, d);
  // field-major layout: (beta_1^T, ..., beta_d^T) with beta_k = (intercept, slope)
  truth.beta.resize(2 * d);
  for (int k = 0; k < d; ++k) {
    truth.beta[2 * k] = 0.2 - 0.3 * k;
    truth.beta[2 * k + 1] = 0.35 - 0.1 * k;
  }

  RngStream rng = make_stream(derive_seed(seed, 1));
  const SimulatedData sim = simulate_dataset(lattice, truth, rng);

  json effective = {{"command", "simulate"}, {"rows", rows},   {"cols", cols},
                    {"n_obs", n_obs},        {"n_comp", n_comp}, {"alpha", alpha},
                    {"kappa", kappa},        {"seed", seed}};
  const std::string hash = run_hash(effective);
  const std::string meta = "config_hash=" + hash + " seed=" + std::to_string(seed);

  write_grid_csv(out_dir + "/grid.csv", lattice, meta);
  write_observations_csv(out_dir + "/observations.csv", lattice, sim.obs, meta);
  write_covariates_csv(out_dir + "/covariates.csv", lattice, meta);

  json truth_json = {{"config_hash", hash},
                     {"seed", seed},
                     {"alpha", truth.alpha},
                     {"kappa", truth.kappa},
                     {"beta", vector_to_json(truth.beta)},
                     {"rho", matrix_to_json(truth.rho)},
                     {"x_true", vector_to_json(sim.x_true)},
                     {"z_true", matrix_to_json(sim.z_true)}};
  write_json_file(out_dir + "/truth.json", truth_json);
  std::printf("simulate: wrote %d cells (%d observed) to %s\n", lattice.num_nodes(), n_obs,
              out_dir.c_str());
  return kExitOk;
}

int cmd_fit(const CommonOpts& opts, const HyperParams& hp, const SamplerConfig& cfg) {
  fs::create_directories(opts.out);
  const IngestResult data = ingest(opts.grid, opts.obs, opts.cov, opts.alr_cov);
  for (const auto& w : data.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());

  json effective = {{"command", "fit"},
                    {"hyperparams", hyperparams_to_json(hp)},
                    {"sampler", sampler_to_json(cfg)},
                    {"alr_cov", opts.alr_cov}};
  const std::string hash = run_hash(effective);
  const std::string meta = "config_hash=" + hash + " seed=" + std::to_string(cfg.seed);

  const auto t0 = std::chrono::steady_clock::now();
  McmcTrace trace;
  try {
    trace = run_chain(data.lattice, data.obs, hp, cfg, stderr_progress("fit"));
  } catch (const ChainFailure& fail) {
    json pm = {{"iteration", fail.iteration},
               {"message", fail.what()},
               {"state", json::parse(fail.state_summary, nullptr, false)}};
    write_json_file(opts.out + "/postmortem.json", pm);
    std::fprintf(stderr, "numerical failure; post-mortem written to %s/postmortem.json\n",
                 opts.out.c_str());
    throw;
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  write_trace(opts.out + "/trace.bin", trace, hash);
  write_params_csv(opts.out + "/params.csv", trace, meta);
  const ParameterSummary summary = parameter_summary(trace);
  write_summary_csv(opts.out + "/summary.csv", summary, meta);
  std::printf("%s", format_summary_table(summary).c_str());
  std::printf("iterations/second: %.1f (%ld iterations in %.1f s)\n",
              static_cast<double>(cfg.n_iter) / secs, cfg.n_iter, secs);
  std::printf("MALA acceptance (post burn-in): %.3f  kappa-RW: %.3f  fisher failures: %ld\n",
              trace.mala_attempted_post
                  ? static_cast<double>(trace.mala_accepted_post) / trace.mala_attempted_post
                  : 0.0,
              trace.kappa_attempted_post
                  ? static_cast<double>(trace.kappa_accepted_post) / trace.kappa_attempted_post
                  : 0.0,
              trace.fisher_failures);
  return kExitOk;
}

void check_trace_matches(const McmcTrace& trace, const LatticeModel& lattice,
                         const Observations& obs) {
  if (trace.n_nodes != lattice.num_nodes() || trace.n_covariates != lattice.num_covariates() ||
      trace.n_fields != obs.n_fields())
    throw DataError("trace dimensions do not match the ingested inputs");
}

int cmd_predict(const CommonOpts& opts, const std::string& summary_kind) {
  fs::create_directories(opts.out);
  const IngestResult data = ingest(opts.grid, opts.obs, opts.cov, opts.alr_cov);
  const McmcTrace trace = read_trace(opts.trace_path);
  check_trace_matches(trace, data.lattice, data.obs);

  json effective = {{"command", "predict"},
                    {"summary", summary_kind},
                    {"trace_seed", trace.config.seed},
                    {"alr_cov", opts.alr_cov}};
  const std::string hash = run_hash(effective);

  const int n = data.lattice.num_nodes();
  const int n_comp = trace.n_fields + 1;
  Eigen::MatrixXd comps(n, n_comp);
  parallel_for(n, [&](int node) {
    const Composition c = summary_kind == "inv-alr-mean"
                              ? composition_of_mean_eta(trace, data.lattice, node)
                              : posterior_composition(trace, data.lattice, node);
    comps.row(node) = c.parts().transpose();
  });

  std::ofstream out(opts.out + "/predictions.csv");
  if (!out) throw DataError("cannot open predictions.csv");
  out << "# config_hash=" << hash << " seed=" << trace.config.seed << "\n";
  out << "cell_id,row,col";
  for (int k = 1; k <= n_comp; ++k) out << ",comp_" << k;
  out << "\n";
  for (int i = 0; i < n; ++i) {
    const auto& c = data.lattice.cells[static_cast<size_t>(i)];
    out << c.id << "," << c.row << "," << c.col;
    for (int k = 0; k < n_comp; ++k) out << "," << format_double(comps(i, k));
    out << "\n";
  }
  json metadata = {{"config_hash", hash},
                   {"seed", trace.config.seed},
                   {"summary", summary_kind},
                   {"n_nodes", n},
                   {"n_samples", trace.n_samples()}};
  write_json_file(opts.out + "/predictions.json", metadata);
  std::printf("predict: wrote %d node compositions (%s summary)\n", n, summary_kind.c_str());
  return kExitOk;
}

json region_record(const LatticeModel& lattice, int node, const Composition& mean,
                   const RegionSummary& region, bool with_ternary, int ternary_points) {
  json rec = {{"node", node},
              {"cell_id", lattice.cells[static_cast<size_t>(node)].id},
              {"mean_composition", vector_to_json(mean.parts())},
              {"ellipse",
               {{"mu", vector_to_json(region.mu)},
                {"sigma", matrix_to_json(region.sigma)},
                {"c", region.c_quantile}}}};
  if (with_ternary) {
    const TernaryBounds tb = ternary_bounds(region, ternary_points);
    rec["ternary_bounds"] = {{"lower", vector_to_json(tb.lower)},
                             {"upper", vector_to_json(tb.upper)},
                             {"at_lower", matrix_to_json(tb.at_lower)},
                             {"at_upper", matrix_to_json(tb.at_upper)}};
  }
  return rec;
}

int cmd_regions(const CommonOpts& opts, double level, std::uint64_t seed, bool seed_given) {
  fs::create_directories(opts.out);
  const IngestResult data = ingest(opts.grid, opts.obs, opts.cov, opts.alr_cov);
  const McmcTrace trace = read_trace(opts.trace_path);
  check_trace_matches(trace, data.lattice, data.obs);
  if (!seed_given) seed = trace.config.seed;

  json effective = {{"command", "regions"}, {"level", level}, {"seed", seed}};
  const std::string hash = run_hash(effective);

  const int n = data.lattice.num_nodes();
  const bool ternary = trace.n_fields == 2;
  std::vector<json> conf_records(static_cast<size_t>(n)), pred_records(static_cast<size_t>(n));
  std::vector<RegionSummary> conf(static_cast<size_t>(n)), pred(static_cast<size_t>(n));
  std::vector<Composition> means;
  means.reserve(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) means.push_back(Composition(Eigen::VectorXd::Constant(trace.n_fields + 1, 1.0 / (trace.n_fields + 1))));

  parallel_for(n, [&](int node) {
    means[static_cast<size_t>(node)] = posterior_composition(trace, data.lattice, node);
    conf[static_cast<size_t>(node)] = confidence_region(trace, data.lattice, node, level);
    RngStream rng = make_stream(derive_seed(seed, static_cast<std::uint64_t>(node)));
    pred[static_cast<size_t>(node)] = prediction_region(trace, data.lattice, node, level, rng);
    conf_records[static_cast<size_t>(node)] =
        region_record(data.lattice, node, means[static_cast<size_t>(node)], conf[static_cast<size_t>(node)], ternary, 4096);
    pred_records[static_cast<size_t>(node)] =
        region_record(data.lattice, node, means[static_cast<size_t>(node)], pred[static_cast<size_t>(node)], ternary, 4096);
  });

  for (const auto* kind : {"confidence", "prediction"}) {
    json doc = {{"config_hash", hash}, {"seed", seed}, {"level", level}, {"kind", kind}};
    json arr = json::array();
    const auto& records = std::string(kind) == "confidence" ? conf_records : pred_records;
    for (const auto& r : records) arr.push_back(r);
    doc["regions"] = arr;
    write_json_file(opts.out + "/regions_" + kind + ".json", doc);
  }

  std::ofstream out(opts.out + "/regions.csv");
  if (!out) throw DataError("cannot open regions.csv");
  out << "# config_hash=" << hash << " seed=" << seed << "\n";
  const int n_comp = trace.n_fields + 1;
  out << "node,cell_id,row,col,kind,level";
  for (int k = 1; k <= n_comp; ++k) out << ",mean_" << k;
  for (int k = 1; k <= trace.n_fields; ++k) out << ",mu_" << k;
  for (int a = 1; a <= trace.n_fields; ++a)
    for (int b = a; b <= trace.n_fields; ++b) out << ",sigma_" << a << b;
  out << ",c";
  if (ternary)
    for (int k = 1; k <= n_comp; ++k) out << ",min_" << k << ",max_" << k;
  out << "\n";
  auto emit_row = [&](int node, const char* kind, const RegionSummary& region) {
    const auto& cell = data.lattice.cells[static_cast<size_t>(node)];
    out << node << "," << cell.id << "," << cell.row << "," << cell.col << "," << kind << ","
        << format_double(level);
    for (int k = 0; k < n_comp; ++k) out << "," << format_double(means[static_cast<size_t>(node)][k]);
    for (int k = 0; k < trace.n_fields; ++k) out << "," << format_double(region.mu[k]);
    for (int a = 0; a < trace.n_fields; ++a)
      for (int b = a; b < trace.n_fields; ++b) out << "," << format_double(region.sigma(a, b));
    out << "," << format_double(region.c_quantile);
    if (ternary) {
      const TernaryBounds tb = ternary_bounds(region, 4096);
      for (int k = 0; k < n_comp; ++k)
        out << "," << format_double(tb.lower[k]) << "," << format_double(tb.upper[k]);
    }
    out << "\n";
  };
  for (int node = 0; node < n; ++node) {
    emit_row(node, "confidence", conf[static_cast<size_t>(node)]);
    emit_row(node, "prediction", pred[static_cast<size_t>(node)]);
  }
  std::printf("regions: wrote %d nodes at level %.3f%s\n", n, level,
              ternary ? "" : " (d != 2: ternary bounds omitted)");
  return kExitOk;
}

int cmd_cv(const CommonOpts& opts, const HyperParams& hp, const SamplerConfig& chain,
           const std::string& variant, int folds, int repeats) {
  fs::create_directories(opts.out);
  const IngestResult data = ingest(opts.grid, opts.obs, opts.cov, opts.alr_cov);

  std::vector<ModelVariant> variants;
  if (variant == "full" || variant == "both") variants.push_back(ModelVariant::full);
  if (variant == "rm" || variant == "both") variants.push_back(ModelVariant::regression_only);
  if (variants.empty()) throw ConfigError("--variant must be full, rm or both");

  CvConfig cv_cfg;
  cv_cfg.k = folds;
  cv_cfg.repeats = repeats;
  cv_cfg.chain = chain;
  cv_cfg.seed = chain.seed;

  json effective = {{"command", "cv"},     {"folds", folds},
                    {"repeats", repeats},  {"variant", variant},
                    {"hyperparams", hyperparams_to_json(hp)}, {"sampler", sampler_to_json(chain)}};
  const std::string hash = run_hash(effective);

  const CvReport report = cross_validate(data.lattice, data.obs, hp, cv_cfg, variants);

  json doc = {{"config_hash", hash}, {"seed", cv_cfg.seed},      {"k", report.k},
              {"repeats", report.repeats}, {"chain_iters", report.chain_iters},
              {"chain_burn_in", report.chain_burn_in}};
  json vars = json::array();
  std::printf("variant   cv_error   (sd)\n");
  for (const auto& res : report.variants) {
    const char* name = res.variant == ModelVariant::full ? "Full" : "RM";
    vars.push_back({{"variant", name},
                    {"mean_error", res.mean_error},
                    {"sd_error", res.sd_error},
                    {"repeat_error", vector_to_json(res.repeat_error)},
                    {"fold_error", matrix_to_json(res.fold_error)}});
    std::printf("%-8s  %.4f     (%.4f)\n", name, res.mean_error, res.sd_error);
  }
  doc["variants"] = vars;
  write_json_file(opts.out + "/cv_report.json", doc);

  std::ofstream out(opts.out + "/cv_report.csv");
  if (!out) throw DataError("cannot open cv_report.csv");
  out << "# config_hash=" << hash << " seed=" << cv_cfg.seed << "\n";
  out << "variant,repeat,error\n";
  for (const auto& res : report.variants)
    for (int r = 0; r < report.repeats; ++r)
      out << (res.variant == ModelVariant::full ? "Full" : "RM") << "," << r << ","
          << format_double(res.repeat_error[r]) << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"compolattice: Bayesian spatial interpolation of compositional data"};
  app.require_subcommand(1);

  // simulate
  auto* sim = app.add_subcommand("simulate", "generate a synthetic dataset");
  std::string sim_out = "sim_out";
  int sim_rows = 27, sim_cols = 40, sim_obs = 0, sim_comp = 3;
  double sim_alpha = 8.0, sim_kappa = 0.25;
  std::uint64_t sim_seed = 20240901;
  sim->add_option("--out", sim_out, "output directory");
  sim->add_option("--rows", sim_rows, "grid rows")->check(CLI::PositiveNumber);
  sim->add_option("--cols", sim_cols, "grid cols")->check(CLI::PositiveNumber);
  sim->add_option("--n-obs", sim_obs, "observed cells (default: N/6)");
  sim->add_option("--components", sim_comp, "composition parts D")->check(CLI::Range(2, 12));
  sim->add_option("--alpha", sim_alpha, "true Dirichlet scale");
  sim->add_option("--kappa", sim_kappa, "true spatial scale");
  sim->add_option("--seed", sim_seed, "master seed");

  auto add_common = [](CLI::App* sub, CommonOpts& opts, bool with_trace) {
    sub->add_option("--grid", opts.grid, "grid csv")->required();
    sub->add_option("--obs", opts.obs, "observations csv")->required();
    sub->add_option("--cov", opts.cov, "covariates csv")->required();
    sub->add_option("--out", opts.out, "output directory")->required();
    sub->add_flag("--alr-cov", opts.alr_cov, "alr-transform compositional covariates");
    if (with_trace) sub->add_option("--trace", opts.trace_path, "trace file from fit")->required();
  };

  // fit
  auto* fit = app.add_subcommand("fit", "run the MCMC and write a trace");
  CommonOpts fit_opts;
  HyperParams fit_hp;
  SamplerConfig fit_cfg;
  fit_cfg.thin = 10;
  std::string fit_variant = "full";
  add_common(fit, fit_opts, false);
  fit->add_option("--config", fit_opts.config_path, "JSON config file");
  fit->add_option("--seed", fit_cfg.seed, "master seed");
  fit->add_option("--iters", fit_cfg.n_iter, "MCMC iterations");
  fit->add_option("--burn-in", fit_cfg.burn_in, "burn-in iterations");
  fit->add_option("--thin", fit_cfg.thin, "thinning stride");
  fit->add_option("--variant", fit_variant, "full | rm");

  // predict
  auto* predict = app.add_subcommand("predict", "posterior mean composition maps");
  CommonOpts pred_opts;
  std::string pred_summary = "mean-z";
  add_common(predict, pred_opts, true);
  predict->add_option("--summary", pred_summary, "mean-z | inv-alr-mean")
      ->check(CLI::IsMember({"mean-z", "inv-alr-mean"}));

  // regions
  auto* regions = app.add_subcommand("regions", "confidence/prediction regions per node");
  CommonOpts reg_opts;
  double reg_level = 0.95;
  std::uint64_t reg_seed = 0;
  add_common(regions, reg_opts, true);
  regions->add_option("--level", reg_level, "region level")->check(CLI::Range(0.0, 1.0));
  auto* reg_seed_opt = regions->add_option("--seed", reg_seed, "seed for prediction draws");

  // cv
  auto* cv = app.add_subcommand("cv", "repeated k-fold cross-validation");
  CommonOpts cv_opts;
  HyperParams cv_hp;
  SamplerConfig cv_chain = make_cv_chain_config();
  std::string cv_variant = "both";
  int cv_folds = 6, cv_repeats = 10;
  add_common(cv, cv_opts, false);
  cv->add_option("--config", cv_opts.config_path, "JSON config file");
  cv->add_option("--seed", cv_chain.seed, "master seed");
  cv->add_option("--variant", cv_variant, "full | rm | both");
  cv->add_option("--folds", cv_folds, "folds per repeat")->check(CLI::PositiveNumber);
  cv->add_option("--repeats", cv_repeats, "CV repeats")->check(CLI::PositiveNumber);
  cv->add_option("--iters", cv_chain.n_iter, "chain iterations per refit");
  cv->add_option("--burn-in", cv_chain.burn_in, "burn-in per refit");
  cv->add_option("--thin", cv_chain.thin, "thinning per refit");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (sim->parsed())
      return cmd_simulate(sim_out, sim_rows, sim_cols, sim_obs, sim_comp, sim_alpha, sim_kappa,
                          sim_seed);
    if (fit->parsed()) {
      apply_config_file(fit_opts.config_path, fit_hp, fit_cfg, fit);
      if (fit_variant == "rm")
        fit_cfg.model_variant = ModelVariant::regression_only;
      else if (fit_variant != "full")
        throw ConfigError("--variant must be full or rm");
      return cmd_fit(fit_opts, fit_hp, fit_cfg);
    }
    if (predict->parsed()) return cmd_predict(pred_opts, pred_summary);
    if (regions->parsed()) return cmd_regions(reg_opts, reg_level, reg_seed, reg_seed_opt->count() > 0);
    if (cv->parsed()) {
      apply_config_file(cv_opts.config_path, cv_hp, cv_chain, cv);
      return cmd_cv(cv_opts, cv_hp, cv_chain, cv_variant, cv_folds, cv_repeats);
    }
  } catch (const ConfigError& err) {
    std::fprintf(stderr, "config error: %s\n", err.what());
    return kExitConfig;
  } catch (const DataError& err) {
    std::fprintf(stderr, "data error: %s\n", err.what());
    return kExitData;
  } catch (const NumericalError& err) {
    std::fprintf(stderr, "numerical failure: %s\n", err.what());
    return kExitNumerical;
  } catch (const std::exception& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return kExitNumerical;
  }
  return kExitOk;
}
