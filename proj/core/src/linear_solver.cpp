#include "txflow/linear_solver.hpp"

#include <klu.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <numeric>

#include "txflow/error.hpp"

namespace txflow {

namespace {

// Builds the column layout and, for every triplet, the slot it sums into.
CscMatrix compress(std::size_t n, std::span<const Triplet> triplets, std::vector<int>* slots) {
  for (const Triplet& t : triplets) {
    if (t.row >= n || t.col >= n) {
      throw Error(ErrorCode::DimensionMismatch, "triplet index outside the system dimension");
    }
  }
  std::vector<std::size_t> order(triplets.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const Triplet& ta = triplets[a];
    const Triplet& tb = triplets[b];
    return ta.col != tb.col ? ta.col < tb.col : ta.row < tb.row;
  });

  CscMatrix m;
  m.n = n;
  m.col_ptr.assign(n + 1, 0);
  if (slots) slots->assign(triplets.size(), -1);
  std::size_t prev_row = n;
  std::size_t prev_col = n;
  for (std::size_t k : order) {
    const Triplet& t = triplets[k];
    if (t.row != prev_row || t.col != prev_col) {
      m.row_idx.push_back(static_cast<int>(t.row));
      m.values.push_back(0.0);
      ++m.col_ptr[t.col + 1];
      prev_row = t.row;
      prev_col = t.col;
    }
    m.values.back() += t.value;
    if (slots) (*slots)[k] = static_cast<int>(m.values.size() - 1);
  }
  for (std::size_t c = 0; c < n; ++c) m.col_ptr[c + 1] += m.col_ptr[c];
  return m;
}

struct Symbolic {
  klu_symbolic* ptr = nullptr;
  klu_common common{};
  ~Symbolic() {
    if (ptr) klu_free_symbolic(&ptr, &common);
  }
};

std::shared_ptr<Symbolic> analyze(const CscMatrix& m) {
  auto sym = std::make_shared<Symbolic>();
  klu_defaults(&sym->common);
  sym->ptr = klu_analyze(static_cast<int>(m.n), const_cast<int*>(m.col_ptr.data()),
                         const_cast<int*>(m.row_idx.data()), &sym->common);
  if (!sym->ptr) {
    throw Error(ErrorCode::StructurallySingular, "symbolic analysis failed");
  }
  if (sym->common.structural_rank >= 0 && sym->common.structural_rank < static_cast<int>(m.n)) {
    throw Error(ErrorCode::StructurallySingular,
                "structural rank " + std::to_string(sym->common.structural_rank) + " < " +
                    std::to_string(m.n));
  }
  return sym;
}

}  // namespace

struct Factors::Impl {
  std::shared_ptr<Symbolic> symbolic;
  std::shared_ptr<const CscMatrix> matrix;
  klu_numeric* numeric = nullptr;
  mutable klu_common common{};
  mutable std::mutex mutex;  // klu_solve uses workspace inside the numeric object
  double growth = 0.0;
  double min_pivot = 0.0;

  ~Impl() {
    if (numeric) klu_free_numeric(&numeric, &common);
  }
};

CscMatrix CscMatrix::from_triplets(std::size_t n, std::span<const Triplet> triplets) {
  return compress(n, triplets, nullptr);
}

std::vector<double> CscMatrix::multiply(std::span<const double> x) const {
  std::vector<double> y(n, 0.0);
  for (std::size_t c = 0; c < n; ++c) {
    for (int p = col_ptr[c]; p < col_ptr[c + 1]; ++p) y[row_idx[p]] += values[p] * x[c];
  }
  return y;
}

double CscMatrix::norm_inf() const {
  std::vector<double> rows(n, 0.0);
  for (std::size_t p = 0; p < values.size(); ++p) rows[row_idx[p]] += std::abs(values[p]);
  return rows.empty() ? 0.0 : *std::max_element(rows.begin(), rows.end());
}

double CscMatrix::norm_one() const {
  double best = 0.0;
  for (std::size_t c = 0; c < n; ++c) {
    double s = 0.0;
    for (int p = col_ptr[c]; p < col_ptr[c + 1]; ++p) s += std::abs(values[p]);
    best = std::max(best, s);
  }
  return best;
}

double CscMatrix::max_abs() const {
  double best = 0.0;
  for (double v : values) best = std::max(best, std::abs(v));
  return best;
}

std::size_t Factors::size() const { return impl_->matrix->n; }
double Factors::pivot_growth() const { return impl_->growth; }
double Factors::min_pivot() const { return impl_->min_pivot; }
const CscMatrix& Factors::matrix() const { return *impl_->matrix; }

namespace {

Factors numeric_factor(std::shared_ptr<Symbolic> symbolic, std::shared_ptr<const CscMatrix> m) {
  auto impl = std::make_shared<Factors::Impl>();
  impl->symbolic = std::move(symbolic);
  impl->matrix = std::move(m);
  const CscMatrix& a = *impl->matrix;
  klu_defaults(&impl->common);
  impl->numeric = klu_factor(const_cast<int*>(a.col_ptr.data()), const_cast<int*>(a.row_idx.data()),
                             const_cast<double*>(a.values.data()), impl->symbolic->ptr, &impl->common);
  if (!impl->numeric) {
    if (impl->common.status == KLU_SINGULAR) {
      throw Error(ErrorCode::NumericallySingular, "zero pivot during factorization");
    }
    throw Error(ErrorCode::NumericallySingular,
                "factorization failed (KLU status " + std::to_string(impl->common.status) + ")");
  }

  // With row scaling on, every row of the factored matrix has max |entry| 1.
  const double* udiag = static_cast<const double*>(impl->numeric->Udiag);
  double lo = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < a.n; ++i) lo = std::min(lo, std::abs(udiag[i]));
  impl->min_pivot = lo;
  const double scale_ref = impl->common.scale > 0 ? 1.0 : a.max_abs();
  if (!(lo > 1e-14 * scale_ref)) {
    throw Error(ErrorCode::NumericallySingular, "pivot " + std::to_string(lo) + " below 1e-14 * max|A|");
  }
  if (klu_rgrowth(const_cast<int*>(a.col_ptr.data()), const_cast<int*>(a.row_idx.data()),
                  const_cast<double*>(a.values.data()), impl->symbolic->ptr, impl->numeric,
                  &impl->common)) {
    impl->growth = impl->common.rgrowth;
  }
  return Factors(std::move(impl));
}

}  // namespace

Factors factorize(const CscMatrix& matrix) {
  if (matrix.n == 0) throw Error(ErrorCode::DimensionMismatch, "empty system");
  auto m = std::make_shared<const CscMatrix>(matrix);
  return numeric_factor(analyze(*m), m);
}

Factors factorize(const SparseSystem& sys) {
  return factorize(CscMatrix::from_triplets(sys.n, sys.triplets));
}

std::vector<double> solve(const Factors& factors, std::span<const double> rhs, SolveInfo* info) {
  const Factors::Impl& f = factors.impl();
  const CscMatrix& a = *f.matrix;
  if (rhs.size() != a.n) {
    throw Error(ErrorCode::DimensionMismatch,
                "rhs length " + std::to_string(rhs.size()) + " != " + std::to_string(a.n));
  }
  auto residual_of = [&](const std::vector<double>& x, std::vector<double>& r) {
    const std::vector<double> ax = a.multiply(x);
    double norm = 0.0;
    for (std::size_t i = 0; i < a.n; ++i) {
      r[i] = rhs[i] - ax[i];
      norm = std::max(norm, std::abs(r[i]));
    }
    return norm;
  };

  std::lock_guard lock(f.mutex);
  klu_common common = f.common;
  std::vector<double> x(rhs.begin(), rhs.end());
  klu_solve(f.symbolic->ptr, f.numeric, static_cast<int>(a.n), 1, x.data(), &common);

  std::vector<double> r(a.n);
  const double before = residual_of(x, r);
  klu_solve(f.symbolic->ptr, f.numeric, static_cast<int>(a.n), 1, r.data(), &common);
  std::vector<double> refined(a.n);
  for (std::size_t i = 0; i < a.n; ++i) refined[i] = x[i] + r[i];
  std::vector<double> scratch(a.n);
  const double after = residual_of(refined, scratch);
  if (after <= before) {
    x.swap(refined);
  }
  if (info) {
    info->residual_before = before;
    info->residual_after = std::min(after, before);
  }
  return x;
}

double condition_estimate(const Factors& factors) {
  const Factors::Impl& f = factors.impl();
  const CscMatrix& a = *f.matrix;
  std::lock_guard lock(f.mutex);
  klu_common common = f.common;
  if (!klu_condest(const_cast<int*>(a.col_ptr.data()), const_cast<double*>(a.values.data()),
                   f.symbolic->ptr, f.numeric, &common)) {
    throw Error(ErrorCode::NumericallySingular, "condition estimate failed");
  }
  return common.condest;
}

double condition_estimate(const SparseSystem& sys) { return condition_estimate(factorize(sys)); }

struct LinearSolver::Cache {
  std::vector<std::pair<std::size_t, std::size_t>> pattern;
  std::vector<int> slots;
  std::shared_ptr<const CscMatrix> layout;
  std::shared_ptr<Symbolic> symbolic;
  std::size_t analyses = 0;
};

LinearSolver::LinearSolver() : cache_(std::make_unique<Cache>()) {}
LinearSolver::~LinearSolver() = default;
LinearSolver::LinearSolver(LinearSolver&&) noexcept = default;
LinearSolver& LinearSolver::operator=(LinearSolver&&) noexcept = default;

std::size_t LinearSolver::analyses() const { return cache_->analyses; }

Factors LinearSolver::factorize(const SparseSystem& sys) {
  Cache& c = *cache_;
  bool same = c.layout && c.layout->n == sys.n && c.pattern.size() == sys.triplets.size();
  for (std::size_t k = 0; same && k < sys.triplets.size(); ++k) {
    same = c.pattern[k].first == sys.triplets[k].row && c.pattern[k].second == sys.triplets[k].col;
  }
  if (!same) {
    if (sys.n == 0) throw Error(ErrorCode::DimensionMismatch, "empty system");
    auto m = std::make_shared<const CscMatrix>(compress(sys.n, sys.triplets, &c.slots));
    c.pattern.resize(sys.triplets.size());
    for (std::size_t k = 0; k < sys.triplets.size(); ++k) {
      c.pattern[k] = {sys.triplets[k].row, sys.triplets[k].col};
    }
    c.symbolic = analyze(*m);
    c.layout = m;
    ++c.analyses;
    return numeric_factor(c.symbolic, m);
  }
  auto m = std::make_shared<CscMatrix>();
  m->n = c.layout->n;
  m->col_ptr = c.layout->col_ptr;
  m->row_idx = c.layout->row_idx;
  m->values.assign(c.layout->values.size(), 0.0);
  for (std::size_t k = 0; k < sys.triplets.size(); ++k) m->values[c.slots[k]] += sys.triplets[k].value;
  return numeric_factor(c.symbolic, std::move(m));
}

}  // namespace txflow
