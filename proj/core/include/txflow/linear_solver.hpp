#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "txflow/stamps.hpp"

namespace txflow {

// Compressed sparse column matrix with summed duplicates and sorted rows.
struct CscMatrix {
  std::size_t n = 0;
  std::vector<int> col_ptr;
  std::vector<int> row_idx;
  std::vector<double> values;

  static CscMatrix from_triplets(std::size_t n, std::span<const Triplet> triplets);

  std::vector<double> multiply(std::span<const double> x) const;
  double norm_inf() const;
  double norm_one() const;
  double max_abs() const;
};

// LU factors of a sparse matrix (KLU: BTF + AMD ordering, partial pivoting).
// Immutable once built; solve() may be called concurrently.
class Factors {
 public:
  struct Impl;

  std::size_t size() const;
  double pivot_growth() const;
  double min_pivot() const;
  const CscMatrix& matrix() const;
  const Impl& impl() const { return *impl_; }

  explicit Factors(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}

 private:
  std::shared_ptr<const Impl> impl_;
};

struct SolveInfo {
  double residual_before = 0.0;  // ||b - A x||_inf before refinement
  double residual_after = 0.0;
};

// Throws Error(StructurallySingular) or Error(NumericallySingular).
Factors factorize(const CscMatrix& matrix);
Factors factorize(const SparseSystem& sys);

// Solves A x = rhs with one step of iterative refinement. Throws
// Error(DimensionMismatch).
std::vector<double> solve(const Factors& factors, std::span<const double> rhs,
                          SolveInfo* info = nullptr);

// Estimated 1-norm condition number ||A||_1 ||A^-1||_1.
double condition_estimate(const Factors& factors);
double condition_estimate(const SparseSystem& sys);

// Repeated factorizations of systems sharing one sparsity pattern. The
// symbolic analysis and the triplet-to-column mapping are redone only when
// the triplet pattern changes.
class LinearSolver {
 public:
  LinearSolver();
  ~LinearSolver();
  LinearSolver(LinearSolver&&) noexcept;
  LinearSolver& operator=(LinearSolver&&) noexcept;

  Factors factorize(const SparseSystem& sys);
  std::size_t analyses() const;

 private:
  struct Cache;
  std::unique_ptr<Cache> cache_;
};

}  // namespace txflow
