#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "compolattice/lattice.hpp"
#include "compolattice/likelihood.hpp"
#include "compolattice/sampler.hpp"

namespace compolattice {

// ---------------------------------------------------------------- CSV plumbing

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

/// Reads a comma-separated file; blank lines and '#' comment lines are skipped.
CsvTable read_csv(const std::string& path);

/// Round-trippable formatting for doubles (%.17g).
std::string format_double(double v);

// ---------------------------------------------------------------- data ingest

struct IngestResult {
  LatticeModel lattice;
  Observations obs;
  std::vector<std::string> warnings;  // e.g. composition repairs
};

/// Builds the model inputs from three CSV files:
///   grid:         cell_id,row,col            (active cells)
///   observations: cell_id,y_1..y_D           (compositions, repaired to the interior)
///   covariates:   cell_id,b_1..b_{p-1}       (intercept added; must cover every cell)
/// With alr_covariates the covariate columns are treated as one composition and
/// alr-transformed during ingest.
IngestResult ingest(const std::string& grid_csv, const std::string& obs_csv,
                    const std::string& cov_csv, bool alr_covariates = false);

void write_grid_csv(const std::string& path, const LatticeModel& lattice,
                    const std::string& meta_comment = "");
void write_observations_csv(const std::string& path, const LatticeModel& lattice,
                            const Observations& obs, const std::string& meta_comment = "");
void write_covariates_csv(const std::string& path, const LatticeModel& lattice,
                          const std::string& meta_comment = "");

// ---------------------------------------------------------------- trace files

/// Columnar binary trace: magic + version + JSON header (dimensions, config echo,
/// seed, counters, named arrays) followed by the raw little-endian doubles.
void write_trace(const std::string& path, const McmcTrace& trace,
                 const std::string& config_hash);
McmcTrace read_trace(const std::string& path);

/// Per-stored-sample CSV of the scalar parameters (alpha, kappa, rho, beta).
void write_params_csv(const std::string& path, const McmcTrace& trace,
                      const std::string& meta_comment = "");

// ---------------------------------------------------------------- summaries

struct ParameterSummary {
  std::vector<std::string> names;
  Eigen::VectorXd est;  // posterior means
  Eigen::VectorXd lo;   // empirical 2.5% quantiles
  Eigen::VectorXd hi;   // empirical 97.5% quantiles
};

ParameterSummary parameter_summary(const McmcTrace& trace);
std::string format_summary_table(const ParameterSummary& summary);
void write_summary_csv(const std::string& path, const ParameterSummary& summary,
                       const std::string& meta_comment = "");

// ---------------------------------------------------------------- metadata

/// FNV-1a 64-bit hash of a canonical configuration string, as fixed-width hex.
std::string config_hash(const std::string& canonical);

}  // namespace compolattice
