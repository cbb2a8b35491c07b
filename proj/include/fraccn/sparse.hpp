#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <span>
#include <tuple>
#include <vector>

#include "fraccn/errors.hpp"
#include "fraccn/mesh.hpp"

namespace fraccn {

/// Row-compressed structure with sorted, duplicate-free column indices.
struct SparsityPattern {
  std::size_t rows = 0;
  std::vector<std::size_t> row_offsets; ///< size rows + 1
  std::vector<std::size_t> columns;

  std::size_t nnz() const noexcept { return columns.size(); }

  /// Position of (row, col) in the value array, or nnz() if absent.
  std::size_t find(std::size_t row, std::size_t col) const {
    const auto first = columns.begin() + static_cast<std::ptrdiff_t>(row_offsets[row]);
    const auto last = columns.begin() + static_cast<std::ptrdiff_t>(row_offsets[row + 1]);
    const auto it = std::lower_bound(first, last, col);
    if (it == last || *it != col) return nnz();
    return static_cast<std::size_t>(it - columns.begin());
  }

  static SparsityPattern from_rows(std::vector<std::vector<std::size_t>> rows) {
    SparsityPattern p;
    p.rows = rows.size();
    p.row_offsets.assign(1, 0);
    for (auto& r : rows) {
      std::sort(r.begin(), r.end());
      r.erase(std::unique(r.begin(), r.end()), r.end());
      p.columns.insert(p.columns.end(), r.begin(), r.end());
      p.row_offsets.push_back(p.columns.size());
    }
    return p;
  }
};

/// Interior-DOF coupling pattern of a P1 mesh: i and j couple when they share an element.
inline std::shared_ptr<const SparsityPattern> build_pattern(const Mesh& mesh) {
  std::vector<std::vector<std::size_t>> rows(mesh.num_dofs());
  const auto nv = mesh.vertices_per_element();
  for (const auto& el : mesh.elements) {
    for (std::size_t a = 0; a < nv; ++a) {
      const auto ia = mesh.interior_index[el.vertices[a]];
      if (ia == kBoundaryNode) continue;
      for (std::size_t b = 0; b < nv; ++b) {
        const auto ib = mesh.interior_index[el.vertices[b]];
        if (ib != kBoundaryNode) rows[static_cast<std::size_t>(ia)].push_back(static_cast<std::size_t>(ib));
      }
    }
  }
  return std::make_shared<const SparsityPattern>(SparsityPattern::from_rows(std::move(rows)));
}

class SparseMatrix {
public:
  SparseMatrix() = default;
  explicit SparseMatrix(std::shared_ptr<const SparsityPattern> pattern)
      : pattern_(std::move(pattern)), values_(pattern_->nnz(), 0.0) {}

  /// Square matrix from (row, col, value) triplets; duplicates are summed.
  static SparseMatrix from_triplets(std::size_t n,
                                    std::span<const std::tuple<std::size_t, std::size_t, double>> t) {
    std::vector<std::vector<std::size_t>> rows(n);
    for (const auto& [i, j, v] : t) {
      detail::require(i < n && j < n, "triplet index out of range");
      rows[i].push_back(j);
    }
    SparseMatrix m(std::make_shared<const SparsityPattern>(SparsityPattern::from_rows(std::move(rows))));
    for (const auto& [i, j, v] : t) m.add(i, j, v);
    return m;
  }

  std::size_t rows() const noexcept { return pattern_ ? pattern_->rows : 0; }
  const SparsityPattern& pattern() const { return *pattern_; }
  const std::shared_ptr<const SparsityPattern>& pattern_ptr() const noexcept { return pattern_; }
  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }

  void add(std::size_t row, std::size_t col, double v) {
    const auto k = pattern_->find(row, col);
    if (k == pattern_->nnz()) throw InvalidInput("entry outside sparsity pattern");
    values_[k] += v;
  }

  double at(std::size_t row, std::size_t col) const {
    const auto k = pattern_->find(row, col);
    return k == pattern_->nnz() ? 0.0 : values_[k];
  }

  /// y = A x
  void multiply(std::span<const double> x, std::span<double> y) const {
    const auto& p = *pattern_;
    for (std::size_t i = 0; i < p.rows; ++i) {
      double s = 0.0;
      for (auto k = p.row_offsets[i]; k < p.row_offsets[i + 1]; ++k) s += values_[k] * x[p.columns[k]];
      y[i] = s;
    }
  }

  std::vector<double> operator*(std::span<const double> x) const {
    std::vector<double> y(rows());
    multiply(x, y);
    return y;
  }

  /// this += s * other; both must share one pattern.
  SparseMatrix& add_scaled(double s, const SparseMatrix& other) {
    if (other.pattern_ != pattern_ && other.pattern_->columns != pattern_->columns) {
      throw InvalidInput("add_scaled requires matching sparsity patterns");
    }
    for (std::size_t k = 0; k < values_.size(); ++k) values_[k] += s * other.values_[k];
    return *this;
  }

  SparseMatrix& scale(double s) {
    for (auto& v : values_) v *= s;
    return *this;
  }

  std::vector<std::vector<double>> to_dense() const {
    const auto& p = *pattern_;
    std::vector<std::vector<double>> d(p.rows, std::vector<double>(p.rows, 0.0));
    for (std::size_t i = 0; i < p.rows; ++i)
      for (auto k = p.row_offsets[i]; k < p.row_offsets[i + 1]; ++k) d[i][p.columns[k]] = values_[k];
    return d;
  }

  /// max |A_ij - A_ji|
  double asymmetry() const {
    const auto& p = *pattern_;
    double worst = 0.0;
    for (std::size_t i = 0; i < p.rows; ++i)
      for (auto k = p.row_offsets[i]; k < p.row_offsets[i + 1]; ++k)
        worst = std::max(worst, std::abs(values_[k] - at(p.columns[k], i)));
    return worst;
  }

private:
  std::shared_ptr<const SparsityPattern> pattern_;
  std::vector<double> values_;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

/// ||a||_2 / sqrt(len), zero for empty vectors.
inline double rms(std::span<const double> a) {
  return a.empty() ? 0.0 : norm2(a) / std::sqrt(static_cast<double>(a.size()));
}

} // namespace fraccn
