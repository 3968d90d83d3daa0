#pragma once

#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace compolattice {

/// Grid cell in (row, col) coordinates; used to describe the active subset of a lattice.
struct GridCell {
  long id = -1;
  int row = 0;
  int col = 0;
};

/// Lattice geometry plus the graph operators from which the spatial precision is built.
///
/// C is diagonal (cell measures) and G is the 4-neighbor graph Laplacian of the
/// active cells: zero row sums (no-flux boundary), degree on the diagonal, -1 between
/// active neighbors. G C^{-1} G is cached since it does not depend on the scale kappa.
struct LatticeModel {
  int n_rows = 0;
  int n_cols = 0;
  double spacing = 1.0;
  Eigen::VectorXd c_diag;                  // N, strictly positive
  Eigen::SparseMatrix<double> g;           // N x N
  Eigen::SparseMatrix<double> g_cinv_g;    // N x N, G C^{-1} G
  std::vector<GridCell> cells;             // per node id/row/col (node order = ascending cell id)
  std::vector<int> obs_index;              // N_o distinct node indices, sorted by cell id
  Eigen::MatrixXd covariates;              // N x p, column 0 is the intercept of ones

  int num_nodes() const { return static_cast<int>(c_diag.size()); }
  int num_obs() const { return static_cast<int>(obs_index.size()); }
  int num_covariates() const { return static_cast<int>(covariates.cols()); }

  /// Covariate rows at observed nodes (N_o x p).
  Eigen::MatrixXd covariates_at_observed() const;

  /// Euclidean diameter of the grid extent, in spacing units.
  double domain_diameter() const;
};

/// Full-rectangle lattice: every (row, col) cell active, cell id = row * n_cols + col.
/// C = spacing^2 * I; G is the 4-neighbor graph Laplacian (spacing-free in 2-D).
LatticeModel build_lattice(int n_rows, int n_cols, double unit_spacing);

/// Masked lattice over the given active cells only; G is the Laplacian of the induced
/// subgraph, so row sums stay zero along irregular boundaries. Node order follows
/// ascending cell id; ids must be distinct.
LatticeModel build_lattice(int n_rows, int n_cols, double unit_spacing,
                           const std::vector<GridCell>& active_cells);

/// Spatial precision Q(kappa) = kappa^4 C + 2 kappa^2 G + G C^{-1} G; SPD for kappa > 0.
Eigen::SparseMatrix<double> assemble_Q(const LatticeModel& lattice, double kappa);

/// Joint precision rho^{-1} (x) Q under field-major vectorization
/// X = (X_1^T, ..., X_d^T)^T: block (k, l) equals (rho^{-1})[k, l] * Q.
/// Rejects non-SPD rho.
Eigen::SparseMatrix<double> assemble_joint_precision(const Eigen::SparseMatrix<double>& q,
                                                     const Eigen::MatrixXd& rho);

}  // namespace compolattice
