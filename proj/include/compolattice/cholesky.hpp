#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include "compolattice/rng.hpp"

namespace compolattice {

class SolverPool;

/// Sparse SPD matrix together with its (fill-reducing, permuted) triangular
/// factorization. Immutable after construction; safe to share read-only.
class PrecisionFactor {
 public:
  /// Factorizes; throws NumericalError when the matrix is not positive definite.
  explicit PrecisionFactor(Eigen::SparseMatrix<double> matrix);

  /// Non-throwing variant used to reject bad MCMC proposals. With a pool, the
  /// symbolic analysis is reused across structurally identical matrices.
  static std::optional<PrecisionFactor> try_factorize(Eigen::SparseMatrix<double> matrix,
                                                      const std::shared_ptr<SolverPool>& pool);
  static std::optional<PrecisionFactor> try_factorize(Eigen::SparseMatrix<double> matrix);

  PrecisionFactor(PrecisionFactor&&) noexcept = default;
  PrecisionFactor& operator=(PrecisionFactor&&) noexcept;
  PrecisionFactor(const PrecisionFactor&) = delete;
  PrecisionFactor& operator=(const PrecisionFactor&) = delete;
  ~PrecisionFactor();

  const Eigen::SparseMatrix<double>& matrix() const { return matrix_; }
  double log_det() const { return log_det_; }
  Eigen::Index dim() const { return matrix_.rows(); }

  /// Solves matrix * x = b.
  Eigen::VectorXd solve(const Eigen::VectorXd& b) const;

  /// Quadratic form v^T matrix v.
  double quad_form(const Eigen::VectorXd& v) const;

  /// Draw with precision equal to the factored matrix: mean_shift + L^{-T} z.
  Eigen::VectorXd sample(const Eigen::VectorXd& mean_shift, RngStream& rng) const;

 private:
  friend class SolverPool;
  using Solver = Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>;
  struct PooledSolver {
    std::unique_ptr<Solver> solver;
    std::uint64_t epoch = 0;  // matches SolverPool::pattern_epoch_ when analyzed
  };

  PrecisionFactor(Eigen::SparseMatrix<double> matrix, std::shared_ptr<SolverPool> pool);
  bool factorization_ok() const;

  Eigen::SparseMatrix<double> matrix_;
  std::shared_ptr<SolverPool> pool_;
  PooledSolver slot_;
  double log_det_ = 0.0;
};

/// Recycles SimplicialLDLT instances so that repeated factorizations of matrices
/// with one fixed sparsity pattern (MALA preconditioners along a chain, Q(kappa)
/// across proposals) skip the fill-reducing analysis. The pattern is fingerprinted
/// and re-analysis happens automatically when it changes. Not thread-safe: use one
/// pool per chain.
class SolverPool {
 public:
  SolverPool() = default;

 private:
  friend class PrecisionFactor;
  PrecisionFactor::PooledSolver acquire();
  void release(PrecisionFactor::PooledSolver slot);
  bool pattern_current(const Eigen::SparseMatrix<double>& m) const;
  void set_pattern(const Eigen::SparseMatrix<double>& m);

  std::vector<PrecisionFactor::PooledSolver> free_;
  std::vector<int> outer_, inner_;
  std::uint64_t pattern_epoch_ = 0;
};

/// Spec-contract free functions.
PrecisionFactor factorize(const Eigen::SparseMatrix<double>& matrix);
Eigen::VectorXd sample_gmrf(const PrecisionFactor& factor, const Eigen::VectorXd& mean_shift,
                            RngStream& rng);

}  // namespace compolattice
