#pragma once

// Direct solvers for the Newton correction systems. Tridiagonal matrices
// (every 1D P1 operator) use Thomas elimination; anything wider is handed to
// Eigen's sparse LDL^T (symmetric) or LU (general) with fill-reducing ordering.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include "fraccn/errors.hpp"
#include "fraccn/sparse.hpp"

namespace fraccn {

/// Relative pivot threshold: a pivot below this times its row's largest
/// magnitude signals a singular Jacobian.
inline constexpr double kPivotTolerance = 1e-14;

namespace detail {

inline bool is_tridiagonal(const SparsityPattern& p) {
  for (std::size_t i = 0; i < p.rows; ++i)
    for (auto k = p.row_offsets[i]; k < p.row_offsets[i + 1]; ++k) {
      const auto j = p.columns[k];
      if ((j > i ? j - i : i - j) > 1) return false;
    }
  return true;
}

inline std::vector<double> row_max_magnitude(const SparseMatrix& a) {
  const auto& p = a.pattern();
  const auto v = a.values();
  std::vector<double> out(p.rows, 0.0);
  for (std::size_t i = 0; i < p.rows; ++i)
    for (auto k = p.row_offsets[i]; k < p.row_offsets[i + 1]; ++k)
      out[i] = std::max(out[i], std::abs(v[k]));
  return out;
}

inline SingularJacobian singular_at(std::size_t row) {
  return SingularJacobian("singular Jacobian: pivot below threshold in row " + std::to_string(row), row);
}

} // namespace detail

/// Thomas elimination without pivoting.
inline std::vector<double> solve_tridiagonal(const SparseMatrix& a, std::span<const double> rhs) {
  const std::size_t n = a.rows();
  detail::require(rhs.size() == n, "right-hand side length does not match matrix");
  if (n == 0) return {};
  const auto row_max = detail::row_max_magnitude(a);
  std::vector<double> c(n, 0.0), d(n, 0.0);
  double pivot = a.at(0, 0);
  if (std::abs(pivot) < kPivotTolerance * row_max[0] || row_max[0] == 0.0) throw detail::singular_at(0);
  c[0] = n > 1 ? a.at(0, 1) / pivot : 0.0;
  d[0] = rhs[0] / pivot;
  for (std::size_t i = 1; i < n; ++i) {
    const double lower = a.at(i, i - 1);
    pivot = a.at(i, i) - lower * c[i - 1];
    if (std::abs(pivot) < kPivotTolerance * row_max[i] || row_max[i] == 0.0) throw detail::singular_at(i);
    c[i] = i + 1 < n ? a.at(i, i + 1) / pivot : 0.0;
    d[i] = (rhs[i] - lower * d[i - 1]) / pivot;
  }
  std::vector<double> x(n);
  x[n - 1] = d[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) x[i] = d[i] - c[i] * x[i + 1];
  return x;
}

/// Factor-and-solve object. The symbolic analysis is reused across
/// factorizations as long as the sparsity pattern object does not change.
class LinearSolver {
public:
  void factorize(const SparseMatrix& a) {
    if (a.pattern_ptr() != pattern_) reset(a);
    if (a.rows() == 0) return;
    if (tridiagonal_) {
      tridiagonal_copy_ = a;
      // Thomas elimination validates pivots on every solve; run one now so
      // a singular matrix is reported at factorization time.
      std::vector<double> zero(a.rows(), 0.0);
      solve_tridiagonal(a, zero);
    } else if (symmetric_) {
      factor_ldlt(a);
    } else {
      factor_lu(a);
    }
    factorized_ = true;
  }

  std::vector<double> solve(std::span<const double> rhs) const {
    detail::require(factorized_, "solve called before factorize");
    detail::require(rhs.size() == rows_, "right-hand side length does not match matrix");
    if (rows_ == 0) return {};
    if (tridiagonal_) return solve_tridiagonal(tridiagonal_copy_, rhs);
    const Eigen::Map<const Eigen::VectorXd> b(rhs.data(), static_cast<Eigen::Index>(rhs.size()));
    return finish(symmetric_ ? Eigen::VectorXd(ldlt_->solve(b)) : Eigen::VectorXd(lu_->solve(b)));
  }

  std::vector<double> solve(const SparseMatrix& a, std::span<const double> rhs) {
    factorize(a);
    return solve(rhs);
  }

private:
  using EigenMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;

  void reset(const SparseMatrix& a) {
    pattern_ = a.pattern_ptr();
    rows_ = a.rows();
    tridiagonal_ = detail::is_tridiagonal(a.pattern());
    symmetric_ = a.asymmetry() == 0.0;
    factorized_ = false;
    ldlt_.reset();
    lu_.reset();
  }

  static EigenMatrix to_eigen(const SparseMatrix& a) {
    const auto& p = a.pattern();
    const auto v = a.values();
    std::vector<Eigen::Triplet<double, int>> t;
    t.reserve(p.nnz());
    for (std::size_t i = 0; i < p.rows; ++i)
      for (auto k = p.row_offsets[i]; k < p.row_offsets[i + 1]; ++k)
        t.emplace_back(static_cast<int>(i), static_cast<int>(p.columns[k]), v[k]);
    const auto n = static_cast<int>(p.rows);
    EigenMatrix m(n, n);
    m.setFromTriplets(t.begin(), t.end());
    m.makeCompressed();
    return m;
  }

  void factor_ldlt(const SparseMatrix& a) {
    const auto m = to_eigen(a);
    if (!ldlt_) {
      ldlt_ = std::make_unique<Eigen::SimplicialLDLT<EigenMatrix>>();
      ldlt_->analyzePattern(m);
    }
    ldlt_->factorize(m);
    if (ldlt_->info() != Eigen::Success) throw detail::singular_at(0);
    // D_k belongs to permuted row k; P maps original row i to k = perm(i)
    const auto row_max = detail::row_max_magnitude(a);
    const auto& perm = ldlt_->permutationP().indices();
    const auto& diag = ldlt_->vectorD();
    for (Eigen::Index i = 0; i < perm.size(); ++i) {
      const double limit = row_max[static_cast<std::size_t>(i)];
      if (!(std::abs(diag(perm(i))) >= kPivotTolerance * limit) || limit == 0.0) {
        throw detail::singular_at(static_cast<std::size_t>(i));
      }
    }
  }

  void factor_lu(const SparseMatrix& a) {
    const auto m = to_eigen(a);
    if (!lu_) {
      lu_ = std::make_unique<Eigen::SparseLU<EigenMatrix>>();
      lu_->analyzePattern(m);
    }
    lu_->factorize(m);
    if (lu_->info() != Eigen::Success) throw detail::singular_at(0);
  }

  static std::vector<double> finish(const Eigen::VectorXd& x) {
    if (!x.allFinite()) throw detail::singular_at(0);
    return {x.data(), x.data() + x.size()};
  }

  std::shared_ptr<const SparsityPattern> pattern_;
  std::size_t rows_ = 0;
  bool tridiagonal_ = false;
  bool symmetric_ = false;
  bool factorized_ = false;
  SparseMatrix tridiagonal_copy_;
  std::unique_ptr<Eigen::SimplicialLDLT<EigenMatrix>> ldlt_;
  std::unique_ptr<Eigen::SparseLU<EigenMatrix>> lu_;
};

/// One-shot solve of J x = rhs.
inline std::vector<double> linear_solve(const SparseMatrix& j, std::span<const double> rhs) {
  LinearSolver solver;
  return solver.solve(j, rhs);
}

} // namespace fraccn
