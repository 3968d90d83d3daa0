#include "compolattice/io.hpp"

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "compolattice/composition.hpp"
#include "compolattice/errors.hpp"
#include "compolattice/inference.hpp"

namespace compolattice {

namespace {

using nlohmann::json;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& s, const std::string& context) {
  try {
    size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw DataError("could not parse number '" + s + "' in " + context);
  }
}

long parse_long(const std::string& s, const std::string& context) {
  try {
    size_t pos = 0;
    const long v = std::stol(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw DataError("could not parse integer '" + s + "' in " + context);
  }
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open for writing: " + path);
  return out;
}

const char* variant_name(ModelVariant v) {
  return v == ModelVariant::full ? "full" : "rm";
}

void write_matrix(std::ostream& out, const Eigen::MatrixXd& m) {
  out.write(reinterpret_cast<const char*>(m.data()),
            static_cast<std::streamsize>(sizeof(double)) * m.size());
}

void write_vector(std::ostream& out, const Eigen::VectorXd& v) {
  out.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(sizeof(double)) * v.size());
}

Eigen::MatrixXd read_matrix(std::istream& in, Eigen::Index rows, Eigen::Index cols) {
  Eigen::MatrixXd m(rows, cols);
  in.read(reinterpret_cast<char*>(m.data()),
          static_cast<std::streamsize>(sizeof(double)) * m.size());
  if (!in) throw DataError("trace file truncated");
  return m;
}

constexpr char kTraceMagic[8] = {'C', 'P', 'L', 'T', 'R', 'A', 'C', 'E'};
constexpr std::uint32_t kTraceVersion = 1;

}  // namespace

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open file: " + path);
  CsvTable table;
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    std::vector<std::string> fields;
    std::stringstream ss(t);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(trim(field));
    if (!t.empty() && t.back() == ',') fields.push_back("");
    if (!have_header) {
      table.header = std::move(fields);
      have_header = true;
    } else {
      if (fields.size() != table.header.size())
        throw DataError("ragged row in " + path + ": '" + t + "'");
      table.rows.push_back(std::move(fields));
    }
  }
  if (!have_header) throw DataError("empty file: " + path);
  return table;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

IngestResult ingest(const std::string& grid_csv, const std::string& obs_csv,
                    const std::string& cov_csv, bool alr_covariates) {
  IngestResult result;

  // grid
  const CsvTable grid = read_csv(grid_csv);
  if (grid.header.size() != 3) throw DataError("grid file must have columns cell_id,row,col");
  std::vector<GridCell> cells;
  int max_row = 0, max_col = 0;
  for (const auto& row : grid.rows) {
    GridCell c;
    c.id = parse_long(row[0], grid_csv);
    c.row = static_cast<int>(parse_long(row[1], grid_csv));
    c.col = static_cast<int>(parse_long(row[2], grid_csv));
    if (c.row < 0 || c.col < 0) throw DataError("negative grid coordinates in " + grid_csv);
    max_row = std::max(max_row, c.row);
    max_col = std::max(max_col, c.col);
    cells.push_back(c);
  }
  if (cells.empty()) throw DataError("grid file has no cells: " + grid_csv);
  try {
    result.lattice = build_lattice(max_row + 1, max_col + 1, 1.0, cells);
  } catch (const std::invalid_argument& err) {
    throw DataError(std::string("grid file invalid: ") + err.what());
  }

  std::map<long, int> node_of;
  for (int i = 0; i < result.lattice.num_nodes(); ++i)
    node_of[result.lattice.cells[static_cast<size_t>(i)].id] = i;

  // covariates: required at every node (prediction needs B everywhere)
  const CsvTable cov = read_csv(cov_csv);
  if (cov.header.size() < 2) throw DataError("covariates file needs cell_id plus value columns");
  const int n_raw = static_cast<int>(cov.header.size()) - 1;
  Eigen::MatrixXd raw(result.lattice.num_nodes(), n_raw);
  std::vector<bool> seen(static_cast<size_t>(result.lattice.num_nodes()), false);
  for (const auto& row : cov.rows) {
    const long id = parse_long(row[0], cov_csv);
    auto it = node_of.find(id);
    if (it == node_of.end())
      throw DataError("covariates reference unknown cell_id " + std::to_string(id));
    if (seen[static_cast<size_t>(it->second)])
      throw DataError("duplicate covariate row for cell_id " + std::to_string(id));
    seen[static_cast<size_t>(it->second)] = true;
    for (int j = 0; j < n_raw; ++j)
      raw(it->second, j) = parse_double(row[static_cast<size_t>(j) + 1], cov_csv);
  }
  for (int i = 0; i < result.lattice.num_nodes(); ++i)
    if (!seen[static_cast<size_t>(i)])
      throw DataError("missing covariates for cell_id " +
                      std::to_string(result.lattice.cells[static_cast<size_t>(i)].id));

  int p_extra = n_raw;
  Eigen::MatrixXd extra = raw;
  if (alr_covariates) {
    if (n_raw < 2) throw DataError("alr covariates need at least two composition columns");
    p_extra = n_raw - 1;
    extra.resize(result.lattice.num_nodes(), p_extra);
    for (int i = 0; i < result.lattice.num_nodes(); ++i) {
      Eigen::VectorXd parts = raw.row(i).transpose();
      if (repair_composition(parts))
        result.warnings.push_back("covariate composition repaired at cell_id " +
                                  std::to_string(result.lattice.cells[static_cast<size_t>(i)].id));
      extra.row(i) = alr(Composition(parts)).transpose();
    }
  }
  result.lattice.covariates.resize(result.lattice.num_nodes(), 1 + p_extra);
  result.lattice.covariates.col(0).setOnes();
  result.lattice.covariates.rightCols(p_extra) = extra;

  // observations
  const CsvTable obs = read_csv(obs_csv);
  if (obs.header.size() < 3) throw DataError("observations file needs cell_id plus >= 2 parts");
  const int n_comp = static_cast<int>(obs.header.size()) - 1;
  struct ObsRow {
    long id;
    int node;
    Eigen::VectorXd y;
  };
  std::vector<ObsRow> rows;
  std::vector<bool> obs_seen(static_cast<size_t>(result.lattice.num_nodes()), false);
  for (const auto& row : obs.rows) {
    ObsRow o;
    o.id = parse_long(row[0], obs_csv);
    auto it = node_of.find(o.id);
    if (it == node_of.end())
      throw DataError("observation references unknown cell_id " + std::to_string(o.id));
    if (obs_seen[static_cast<size_t>(it->second)])
      throw DataError("duplicate observation for cell_id " + std::to_string(o.id));
    obs_seen[static_cast<size_t>(it->second)] = true;
    o.node = it->second;
    o.y.resize(n_comp);
    for (int k = 0; k < n_comp; ++k)
      o.y[k] = parse_double(row[static_cast<size_t>(k) + 1], obs_csv);
    if (std::abs(o.y.sum() - 1.0) > 1e-6)
      throw DataError("observation at cell_id " + std::to_string(o.id) +
                      " does not sum to 1 within 1e-6");
    if (repair_composition(o.y))
      result.warnings.push_back("observation repaired to the interior at cell_id " +
                                std::to_string(o.id));
    rows.push_back(std::move(o));
  }
  std::sort(rows.begin(), rows.end(), [](const ObsRow& a, const ObsRow& b) { return a.id < b.id; });

  result.obs.y.resize(static_cast<Eigen::Index>(rows.size()), n_comp);
  result.lattice.obs_index.clear();
  for (size_t s = 0; s < rows.size(); ++s) {
    result.lattice.obs_index.push_back(rows[s].node);
    result.obs.y.row(static_cast<Eigen::Index>(s)) = rows[s].y.transpose();
  }
  return result;
}

void write_grid_csv(const std::string& path, const LatticeModel& lattice,
                    const std::string& meta_comment) {
  auto out = open_out(path);
  if (!meta_comment.empty()) out << "# " << meta_comment << "\n";
  out << "cell_id,row,col\n";
  for (const auto& c : lattice.cells) out << c.id << "," << c.row << "," << c.col << "\n";
}

void write_observations_csv(const std::string& path, const LatticeModel& lattice,
                            const Observations& obs, const std::string& meta_comment) {
  auto out = open_out(path);
  if (!meta_comment.empty()) out << "# " << meta_comment << "\n";
  out << "cell_id";
  for (int k = 1; k <= obs.n_components(); ++k) out << ",y_" << k;
  out << "\n";
  for (int s = 0; s < obs.num_sites(); ++s) {
    out << lattice.cells[static_cast<size_t>(lattice.obs_index[static_cast<size_t>(s)])].id;
    for (int k = 0; k < obs.n_components(); ++k) out << "," << format_double(obs.y(s, k));
    out << "\n";
  }
}

void write_covariates_csv(const std::string& path, const LatticeModel& lattice,
                          const std::string& meta_comment) {
  auto out = open_out(path);
  if (!meta_comment.empty()) out << "# " << meta_comment << "\n";
  const int p = lattice.num_covariates();
  out << "cell_id";
  for (int j = 1; j < p; ++j) out << ",b_" << j;
  out << "\n";
  for (int i = 0; i < lattice.num_nodes(); ++i) {
    out << lattice.cells[static_cast<size_t>(i)].id;
    for (int j = 1; j < p; ++j) out << "," << format_double(lattice.covariates(i, j));
    out << "\n";
  }
}

void write_trace(const std::string& path, const McmcTrace& trace, const std::string& hash) {
  json header;
  header["format"] = "compolattice-trace";
  header["encoding"] = "f64le-colmajor";
  header["n_nodes"] = trace.n_nodes;
  header["n_fields"] = trace.n_fields;
  header["n_covariates"] = trace.n_covariates;
  header["variant"] = variant_name(trace.variant);
  header["n_samples"] = trace.n_samples();
  header["seed"] = trace.config.seed;
  header["config_hash"] = hash;
  header["config"] = {{"n_iter", trace.config.n_iter},
                      {"burn_in", trace.config.burn_in},
                      {"thin", trace.config.thin},
                      {"eps0", trace.config.eps0},
                      {"sigma_kappa0", trace.config.sigma_kappa0},
                      {"target_mala", trace.config.target_mala},
                      {"target_rw", trace.config.target_rw},
                      {"seed", trace.config.seed},
                      {"variant", variant_name(trace.config.model_variant)}};
  header["counters"] = {{"mala_accepted", trace.mala_accepted},
                        {"mala_attempted", trace.mala_attempted},
                        {"kappa_accepted", trace.kappa_accepted},
                        {"kappa_attempted", trace.kappa_attempted},
                        {"mala_accepted_post", trace.mala_accepted_post},
                        {"mala_attempted_post", trace.mala_attempted_post},
                        {"kappa_accepted_post", trace.kappa_accepted_post},
                        {"kappa_attempted_post", trace.kappa_attempted_post},
                        {"fisher_failures", trace.fisher_failures}};
  json arrays = json::array();
  auto add_array = [&arrays](const char* name, Eigen::Index rows, Eigen::Index cols) {
    arrays.push_back({{"name", name}, {"rows", rows}, {"cols", cols}});
  };
  add_array("x", trace.x.rows(), trace.x.cols());
  add_array("beta", trace.beta.rows(), trace.beta.cols());
  add_array("alpha", trace.alpha.size(), 1);
  add_array("kappa", trace.kappa.size(), 1);
  add_array("rho", trace.rho.rows(), trace.rho.cols());
  add_array("eps_history", trace.eps_history.size(), 1);
  add_array("sigma_kappa_history", trace.sigma_kappa_history.size(), 1);
  header["arrays"] = arrays;

  const std::string header_str = header.dump();
  auto out = open_out(path);
  out.write(kTraceMagic, sizeof(kTraceMagic));
  const std::uint32_t version = kTraceVersion;
  out.write(reinterpret_cast<const char*>(&version), sizeof(version));
  const std::uint64_t len = header_str.size();
  out.write(reinterpret_cast<const char*>(&len), sizeof(len));
  out.write(header_str.data(), static_cast<std::streamsize>(header_str.size()));
  write_matrix(out, trace.x);
  write_matrix(out, trace.beta);
  write_vector(out, trace.alpha);
  write_vector(out, trace.kappa);
  write_matrix(out, trace.rho);
  write_vector(out, trace.eps_history);
  write_vector(out, trace.sigma_kappa_history);
  if (!out) throw DataError("failed writing trace to " + path);
}

McmcTrace read_trace(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open trace: " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kTraceMagic, sizeof(magic)) != 0)
    throw DataError("not a trace file: " + path);
  std::uint32_t version = 0;
  in.read(reinterpret_cast<char*>(&version), sizeof(version));
  if (version != kTraceVersion) throw DataError("unsupported trace version");
  std::uint64_t len = 0;
  in.read(reinterpret_cast<char*>(&len), sizeof(len));
  std::string header_str(len, '\0');
  in.read(header_str.data(), static_cast<std::streamsize>(len));
  if (!in) throw DataError("trace header truncated");
  json header;
  try {
    header = json::parse(header_str);
  } catch (const json::exception& err) {
    throw DataError(std::string("bad trace header: ") + err.what());
  }

  McmcTrace trace;
  trace.n_nodes = header.at("n_nodes").get<int>();
  trace.n_fields = header.at("n_fields").get<int>();
  trace.n_covariates = header.at("n_covariates").get<int>();
  trace.variant = header.at("variant").get<std::string>() == "full" ? ModelVariant::full
                                                                    : ModelVariant::regression_only;
  const json& cfg = header.at("config");
  trace.config.n_iter = cfg.at("n_iter").get<long>();
  trace.config.burn_in = cfg.at("burn_in").get<long>();
  trace.config.thin = cfg.at("thin").get<long>();
  trace.config.eps0 = cfg.at("eps0").get<double>();
  trace.config.sigma_kappa0 = cfg.at("sigma_kappa0").get<double>();
  trace.config.target_mala = cfg.at("target_mala").get<double>();
  trace.config.target_rw = cfg.at("target_rw").get<double>();
  trace.config.seed = cfg.at("seed").get<std::uint64_t>();
  trace.config.model_variant = trace.variant;
  const json& counters = header.at("counters");
  trace.mala_accepted = counters.at("mala_accepted").get<long>();
  trace.mala_attempted = counters.at("mala_attempted").get<long>();
  trace.kappa_accepted = counters.at("kappa_accepted").get<long>();
  trace.kappa_attempted = counters.at("kappa_attempted").get<long>();
  trace.mala_accepted_post = counters.at("mala_accepted_post").get<long>();
  trace.mala_attempted_post = counters.at("mala_attempted_post").get<long>();
  trace.kappa_accepted_post = counters.at("kappa_accepted_post").get<long>();
  trace.kappa_attempted_post = counters.at("kappa_attempted_post").get<long>();
  trace.fisher_failures = counters.at("fisher_failures").get<long>();

  std::map<std::string, std::pair<Eigen::Index, Eigen::Index>> shapes;
  for (const auto& a : header.at("arrays"))
    shapes[a.at("name").get<std::string>()] = {a.at("rows").get<Eigen::Index>(),
                                               a.at("cols").get<Eigen::Index>()};
  auto shape = [&shapes](const char* name) {
    auto it = shapes.find(name);
    if (it == shapes.end()) throw DataError(std::string("trace missing array ") + name);
    return it->second;
  };
  auto [xr, xc] = shape("x");
  trace.x = read_matrix(in, xr, xc);
  auto [br, bc] = shape("beta");
  trace.beta = read_matrix(in, br, bc);
  trace.alpha = read_matrix(in, shape("alpha").first, 1);
  trace.kappa = read_matrix(in, shape("kappa").first, 1);
  auto [rr, rc] = shape("rho");
  trace.rho = read_matrix(in, rr, rc);
  trace.eps_history = read_matrix(in, shape("eps_history").first, 1);
  trace.sigma_kappa_history = read_matrix(in, shape("sigma_kappa_history").first, 1);
  return trace;
}

void write_params_csv(const std::string& path, const McmcTrace& trace,
                      const std::string& meta_comment) {
  auto out = open_out(path);
  if (!meta_comment.empty()) out << "# " << meta_comment << "\n";
  const int d = trace.n_fields;
  const int p = trace.n_covariates;
  const bool full = trace.variant == ModelVariant::full;
  out << "sample,alpha";
  if (full) {
    out << ",kappa";
    for (int a = 0; a < d; ++a)
      for (int b = a; b < d; ++b) out << ",rho_" << (a + 1) << (b + 1);
  }
  for (int k = 0; k < d; ++k)
    for (int j = 0; j < p; ++j) out << ",beta_" << (k + 1) << j;
  out << "\n";
  for (int i = 0; i < trace.n_samples(); ++i) {
    out << i << "," << format_double(trace.alpha[i]);
    if (full) {
      out << "," << format_double(trace.kappa[i]);
      for (int a = 0; a < d; ++a)
        for (int b = a; b < d; ++b)
          out << "," << format_double(trace.rho(i, static_cast<Eigen::Index>(a) * d + b));
    }
    for (Eigen::Index j = 0; j < trace.beta.cols(); ++j)
      out << "," << format_double(trace.beta(i, j));
    out << "\n";
  }
}

ParameterSummary parameter_summary(const McmcTrace& trace) {
  const int m = trace.n_samples();
  if (m == 0) throw std::invalid_argument("parameter_summary: empty trace");
  ParameterSummary s;
  std::vector<Eigen::VectorXd> cols;

  auto add = [&](const std::string& name, const Eigen::VectorXd& samples) {
    s.names.push_back(name);
    cols.push_back(samples);
  };
  add("alpha", trace.alpha);
  if (trace.variant == ModelVariant::full) {
    add("kappa", trace.kappa);
    for (int a = 0; a < trace.n_fields; ++a)
      for (int b = a; b < trace.n_fields; ++b)
        add("rho_" + std::to_string(a + 1) + std::to_string(b + 1),
            trace.rho.col(static_cast<Eigen::Index>(a) * trace.n_fields + b));
  }
  for (int k = 0; k < trace.n_fields; ++k)
    for (int j = 0; j < trace.n_covariates; ++j)
      add("beta_" + std::to_string(k + 1) + std::to_string(j),
          trace.beta.col(static_cast<Eigen::Index>(k) * trace.n_covariates + j));

  const auto n = static_cast<Eigen::Index>(s.names.size());
  s.est.resize(n);
  s.lo.resize(n);
  s.hi.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::VectorXd& v = cols[static_cast<size_t>(i)];
    s.est[i] = v.mean();
    std::vector<double> vals(v.data(), v.data() + v.size());
    s.lo[i] = nearest_rank_quantile(vals, 0.025);
    s.hi[i] = nearest_rank_quantile(std::move(vals), 0.975);
  }
  return s;
}

std::string format_summary_table(const ParameterSummary& summary) {
  std::ostringstream os;
  os << "parameter        est        (95% CI)\n";
  for (size_t i = 0; i < summary.names.size(); ++i) {
    char line[128];
    std::snprintf(line, sizeof(line), "%-12s %9.4f   (%9.4f, %9.4f)\n", summary.names[i].c_str(),
                  summary.est[static_cast<Eigen::Index>(i)], summary.lo[static_cast<Eigen::Index>(i)],
                  summary.hi[static_cast<Eigen::Index>(i)]);
    os << line;
  }
  return os.str();
}

void write_summary_csv(const std::string& path, const ParameterSummary& summary,
                       const std::string& meta_comment) {
  auto out = open_out(path);
  if (!meta_comment.empty()) out << "# " << meta_comment << "\n";
  out << "parameter,est,ci_lo,ci_hi\n";
  for (size_t i = 0; i < summary.names.size(); ++i) {
    const auto j = static_cast<Eigen::Index>(i);
    out << summary.names[i] << "," << format_double(summary.est[j]) << ","
        << format_double(summary.lo[j]) << "," << format_double(summary.hi[j]) << "\n";
  }
}

std::string config_hash(const std::string& canonical) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : canonical) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace compolattice
