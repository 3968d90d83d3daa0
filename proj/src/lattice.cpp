#include "compolattice/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include <Eigen/Cholesky>

#include "compolattice/errors.hpp"

namespace compolattice {

Eigen::MatrixXd LatticeModel::covariates_at_observed() const {
  Eigen::MatrixXd out(num_obs(), num_covariates());
  for (int s = 0; s < num_obs(); ++s) out.row(s) = covariates.row(obs_index[static_cast<size_t>(s)]);
  return out;
}

double LatticeModel::domain_diameter() const {
  const double dr = static_cast<double>(n_rows - 1);
  const double dc = static_cast<double>(n_cols - 1);
  return spacing * std::sqrt(dr * dr + dc * dc);
}

namespace {

LatticeModel build_from_cells(int n_rows, int n_cols, double unit_spacing,
                              std::vector<GridCell> cells) {
  if (n_rows < 1 || n_cols < 1) throw std::invalid_argument("build_lattice: grid must be at least 1x1");
  if (!(unit_spacing > 0.0)) throw std::invalid_argument("build_lattice: spacing must be positive");
  if (cells.empty()) throw std::invalid_argument("build_lattice: no active cells");

  std::sort(cells.begin(), cells.end(), [](const GridCell& a, const GridCell& b) { return a.id < b.id; });
  std::map<std::pair<int, int>, int> node_of;
  for (size_t i = 0; i < cells.size(); ++i) {
    const GridCell& c = cells[i];
    if (c.row < 0 || c.row >= n_rows || c.col < 0 || c.col >= n_cols)
      throw std::invalid_argument("build_lattice: cell outside grid extent");
    if (i > 0 && cells[i].id == cells[i - 1].id)
      throw std::invalid_argument("build_lattice: duplicate cell id");
    if (!node_of.emplace(std::make_pair(c.row, c.col), static_cast<int>(i)).second)
      throw std::invalid_argument("build_lattice: duplicate cell position");
  }

  const int n = static_cast<int>(cells.size());
  LatticeModel lattice;
  lattice.n_rows = n_rows;
  lattice.n_cols = n_cols;
  lattice.spacing = unit_spacing;
  lattice.cells = std::move(cells);
  lattice.c_diag = Eigen::VectorXd::Constant(n, unit_spacing * unit_spacing);

  // Laplacian of the induced 4-neighbor subgraph. The 2-D stiffness entries are
  // spacing-free; all spacing dependence sits in the cell measures C.
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<size_t>(n) * 5);
  Eigen::VectorXd degree = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < n; ++i) {
    const GridCell& c = lattice.cells[static_cast<size_t>(i)];
    const std::pair<int, int> nbrs[2] = {{c.row, c.col + 1}, {c.row + 1, c.col}};
    for (const auto& nb : nbrs) {
      auto it = node_of.find(nb);
      if (it == node_of.end()) continue;
      const int j = it->second;
      trips.emplace_back(i, j, -1.0);
      trips.emplace_back(j, i, -1.0);
      degree[i] += 1.0;
      degree[j] += 1.0;
    }
  }
  for (int i = 0; i < n; ++i) trips.emplace_back(i, i, degree[i]);
  lattice.g.resize(n, n);
  lattice.g.setFromTriplets(trips.begin(), trips.end());
  lattice.g.makeCompressed();

  Eigen::SparseMatrix<double> scaled =
      lattice.c_diag.cwiseInverse().asDiagonal() * lattice.g;          // C^{-1} G
  Eigen::SparseMatrix<double> prod = (lattice.g * scaled).pruned(0.0, 0.0);
  // mirror the lower half so the cached product is symmetric to exact arithmetic
  Eigen::SparseMatrix<double> lower = prod.triangularView<Eigen::Lower>();
  lattice.g_cinv_g = lower.selfadjointView<Eigen::Lower>();
  lattice.g_cinv_g.makeCompressed();
  return lattice;
}

}  // namespace

LatticeModel build_lattice(int n_rows, int n_cols, double unit_spacing) {
  if (n_rows < 1 || n_cols < 1) throw std::invalid_argument("build_lattice: grid must be at least 1x1");
  std::vector<GridCell> cells;
  cells.reserve(static_cast<size_t>(n_rows) * static_cast<size_t>(n_cols));
  for (int r = 0; r < n_rows; ++r)
    for (int c = 0; c < n_cols; ++c)
      cells.push_back(GridCell{static_cast<long>(r) * n_cols + c, r, c});
  return build_from_cells(n_rows, n_cols, unit_spacing, std::move(cells));
}

LatticeModel build_lattice(int n_rows, int n_cols, double unit_spacing,
                           const std::vector<GridCell>& active_cells) {
  return build_from_cells(n_rows, n_cols, unit_spacing, active_cells);
}

Eigen::SparseMatrix<double> assemble_Q(const LatticeModel& lattice, double kappa) {
  if (!(kappa > 0.0)) throw std::invalid_argument("assemble_Q: kappa must be positive");
  const double k2 = kappa * kappa;
  const double k4 = k2 * k2;
  Eigen::SparseMatrix<double> q = lattice.g_cinv_g;
  q += (2.0 * k2) * lattice.g;
  Eigen::SparseMatrix<double> c(lattice.num_nodes(), lattice.num_nodes());
  c = lattice.c_diag.asDiagonal();
  q += k4 * c;
  q.makeCompressed();
  return q;
}

Eigen::SparseMatrix<double> assemble_joint_precision(const Eigen::SparseMatrix<double>& q,
                                                     const Eigen::MatrixXd& rho) {
  const Eigen::Index d = rho.rows();
  if (rho.cols() != d) throw std::invalid_argument("assemble_joint_precision: rho must be square");
  Eigen::LLT<Eigen::MatrixXd> llt(rho);
  if (llt.info() != Eigen::Success)
    throw NumericalError("assemble_joint_precision: rho is not positive definite");
  const Eigen::MatrixXd rho_inv = llt.solve(Eigen::MatrixXd::Identity(d, d));

  const Eigen::Index n = q.rows();
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<size_t>(q.nonZeros()) * static_cast<size_t>(d * d));
  for (Eigen::Index k = 0; k < d; ++k) {
    for (Eigen::Index l = 0; l < d; ++l) {
      const double w = 0.5 * (rho_inv(k, l) + rho_inv(l, k));  // enforce exact symmetry
      if (w == 0.0) continue;
      for (Eigen::Index col = 0; col < q.outerSize(); ++col)
        for (Eigen::SparseMatrix<double>::InnerIterator it(q, col); it; ++it)
          trips.emplace_back(k * n + it.row(), l * n + col, w * it.value());
    }
  }
  Eigen::SparseMatrix<double> joint(n * d, n * d);
  joint.setFromTriplets(trips.begin(), trips.end());
  joint.makeCompressed();
  return joint;
}

}  // namespace compolattice
