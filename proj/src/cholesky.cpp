#include "compolattice/cholesky.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>
#include <utility>

#include "compolattice/errors.hpp"

namespace compolattice {

PrecisionFactor::PooledSolver SolverPool::acquire() {
  if (free_.empty()) return PrecisionFactor::PooledSolver{std::make_unique<PrecisionFactor::Solver>(), 0};
  PrecisionFactor::PooledSolver slot = std::move(free_.back());
  free_.pop_back();
  return slot;
}

void SolverPool::release(PrecisionFactor::PooledSolver slot) {
  if (!slot.solver || free_.size() >= 4) return;
  free_.push_back(std::move(slot));
}

bool SolverPool::pattern_current(const Eigen::SparseMatrix<double>& m) const {
  if (pattern_epoch_ == 0) return false;
  const auto n = static_cast<size_t>(m.outerSize()) + 1;
  const auto nnz = static_cast<size_t>(m.nonZeros());
  if (outer_.size() != n || inner_.size() != nnz) return false;
  return std::memcmp(outer_.data(), m.outerIndexPtr(), n * sizeof(int)) == 0 &&
         std::memcmp(inner_.data(), m.innerIndexPtr(), nnz * sizeof(int)) == 0;
}

void SolverPool::set_pattern(const Eigen::SparseMatrix<double>& m) {
  outer_.assign(m.outerIndexPtr(), m.outerIndexPtr() + m.outerSize() + 1);
  inner_.assign(m.innerIndexPtr(), m.innerIndexPtr() + m.nonZeros());
  pattern_epoch_ += 1;
}

PrecisionFactor::PrecisionFactor(Eigen::SparseMatrix<double> matrix,
                                 std::shared_ptr<SolverPool> pool)
    : matrix_(std::move(matrix)), pool_(std::move(pool)) {
  matrix_.makeCompressed();
  if (pool_) {
    slot_ = pool_->acquire();
    if (!pool_->pattern_current(matrix_)) pool_->set_pattern(matrix_);
    if (slot_.epoch != pool_->pattern_epoch_) {
      slot_.solver->analyzePattern(matrix_);
      slot_.epoch = pool_->pattern_epoch_;
    }
    slot_.solver->factorize(matrix_);
  } else {
    slot_.solver = std::make_unique<Solver>();
    slot_.solver->compute(matrix_);
  }
  if (factorization_ok()) log_det_ = slot_.solver->vectorD().array().log().sum();
}

PrecisionFactor::~PrecisionFactor() {
  if (pool_ && slot_.solver) pool_->release(std::move(slot_));
}

PrecisionFactor& PrecisionFactor::operator=(PrecisionFactor&& other) noexcept {
  if (this != &other) {
    if (pool_ && slot_.solver) pool_->release(std::move(slot_));
    matrix_ = std::move(other.matrix_);
    pool_ = std::move(other.pool_);
    slot_ = std::move(other.slot_);
    log_det_ = other.log_det_;
  }
  return *this;
}

bool PrecisionFactor::factorization_ok() const {
  if (slot_.solver->info() != Eigen::Success) return false;
  const auto& d = slot_.solver->vectorD();
  for (Eigen::Index i = 0; i < d.size(); ++i)
    if (!(d[i] > 0.0) || !std::isfinite(d[i])) return false;
  return true;
}

PrecisionFactor::PrecisionFactor(Eigen::SparseMatrix<double> matrix)
    : PrecisionFactor(std::move(matrix), nullptr) {
  if (!factorization_ok())
    throw NumericalError("PrecisionFactor: matrix is not positive definite");
}

std::optional<PrecisionFactor> PrecisionFactor::try_factorize(
    Eigen::SparseMatrix<double> matrix, const std::shared_ptr<SolverPool>& pool) {
  PrecisionFactor f(std::move(matrix), pool);
  if (!f.factorization_ok()) return std::nullopt;
  return f;
}

std::optional<PrecisionFactor> PrecisionFactor::try_factorize(Eigen::SparseMatrix<double> matrix) {
  return try_factorize(std::move(matrix), nullptr);
}

Eigen::VectorXd PrecisionFactor::solve(const Eigen::VectorXd& b) const {
  if (b.size() != dim()) throw std::invalid_argument("PrecisionFactor::solve: dimension mismatch");
  return slot_.solver->solve(b);
}

double PrecisionFactor::quad_form(const Eigen::VectorXd& v) const {
  if (v.size() != dim()) throw std::invalid_argument("PrecisionFactor::quad_form: dimension mismatch");
  return v.dot(matrix_ * v);
}

Eigen::VectorXd PrecisionFactor::sample(const Eigen::VectorXd& mean_shift, RngStream& rng) const {
  if (mean_shift.size() != dim())
    throw std::invalid_argument("PrecisionFactor::sample: dimension mismatch");
  Eigen::VectorXd z = draw_standard_normal(dim(), rng);
  // matrix = P^T L D L^T P  =>  x = P^{-1} L^{-T} D^{-1/2} z has precision `matrix`
  z.array() *= slot_.solver->vectorD().array().rsqrt();
  Eigen::VectorXd u = slot_.solver->matrixU().solve(z);
  return mean_shift + slot_.solver->permutationPinv() * u;
}

PrecisionFactor factorize(const Eigen::SparseMatrix<double>& matrix) {
  return PrecisionFactor(matrix);
}

Eigen::VectorXd sample_gmrf(const PrecisionFactor& factor, const Eigen::VectorXd& mean_shift,
                            RngStream& rng) {
  return factor.sample(mean_shift, rng);
}

}  // namespace compolattice
