#include <cmath>
#include <random>
#include <tuple>

#include <gtest/gtest.h>

#include "fraccn/assembly.hpp"
#include "fraccn/linear_solver.hpp"
#include "fraccn/verify.hpp"

using namespace fraccn;

namespace {

using Triplet = std::tuple<std::size_t, std::size_t, double>;

double relative_residual(const SparseMatrix& a, std::span<const double> x, std::span<const double> b) {
  auto ax = a * x;
  for (std::size_t i = 0; i < ax.size(); ++i) ax[i] -= b[i];
  return norm2(ax) / norm2(b);
}

} // namespace

TEST(LinearSolve, Identity) {
  std::vector<Triplet> t;
  for (std::size_t i = 0; i < 6; ++i) t.emplace_back(i, i, 1.0);
  const auto id = SparseMatrix::from_triplets(6, t);
  const std::vector<double> rhs{1, -2, 3.5, 0, 7, -1e-3};
  EXPECT_EQ(linear_solve(id, rhs), rhs);
}

TEST(LinearSolve, TridiagonalAgainstDenseElimination) {
  const auto mesh = build_mesh_1d(8);
  const auto k = assemble_stiffness(mesh);
  std::vector<double> rhs(k.rows());
  for (std::size_t i = 0; i < rhs.size(); ++i) rhs[i] = std::sin(1.0 + double(i));
  const auto x = linear_solve(k, rhs);
  const auto oracle = verify::oracle::dense_solve(k.to_dense(), rhs);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(x[i], oracle[i], 1e-12);
}

TEST(LinearSolve, TwoDimensionalStiffness) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> normal;
  const auto k = assemble_stiffness(build_mesh_2d(8));
  std::vector<double> rhs(k.rows());
  for (auto& v : rhs) v = normal(rng);
  EXPECT_LT(relative_residual(k, linear_solve(k, rhs), rhs), 1e-12);
}

TEST(LinearSolve, NonsymmetricUsesLu) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> normal;
  const auto mesh = build_mesh_2d(6);
  auto a = assemble_stiffness(mesh);
  // skew perturbation on the existing pattern
  const auto& p = a.pattern();
  for (std::size_t i = 0; i < p.rows; ++i)
    for (auto k = p.row_offsets[i]; k < p.row_offsets[i + 1]; ++k)
      if (p.columns[k] > i) a.values()[k] += 0.3;
  ASSERT_GT(a.asymmetry(), 0.0);
  std::vector<double> rhs(a.rows());
  for (auto& v : rhs) v = normal(rng);
  EXPECT_LT(relative_residual(a, linear_solve(a, rhs), rhs), 1e-12);
}

TEST(LinearSolve, SingularTridiagonal) {
  std::vector<Triplet> t{{0, 0, 1.0}, {0, 1, 1.0}, {1, 0, 1.0}, {1, 1, 1.0}};
  const auto a = SparseMatrix::from_triplets(2, t);
  try {
    linear_solve(a, std::vector<double>{1.0, 2.0});
    FAIL() << "expected SingularJacobian";
  } catch (const SingularJacobian& e) {
    EXPECT_EQ(e.pivot_row(), 1u);
  }
}

TEST(LinearSolve, ZeroRowIsSingular) {
  std::vector<Triplet> t{{0, 0, 2.0}, {1, 1, 0.0}, {2, 2, 1.0}, {0, 2, 1.0}, {2, 0, 1.0}};
  const auto a = SparseMatrix::from_triplets(3, t);
  EXPECT_THROW(linear_solve(a, std::vector<double>{1.0, 1.0, 1.0}), SingularJacobian);
}

TEST(LinearSolve, SingularSparse) {
  // pure Neumann-like 2D matrix: rows sum to zero
  const auto mesh = build_mesh_2d(4);
  auto k = assemble_stiffness(mesh);
  const auto& p = k.pattern();
  for (std::size_t i = 0; i < p.rows; ++i) {
    double off = 0.0;
    for (auto q = p.row_offsets[i]; q < p.row_offsets[i + 1]; ++q)
      if (p.columns[q] != i) off += k.values()[q];
    for (auto q = p.row_offsets[i]; q < p.row_offsets[i + 1]; ++q)
      if (p.columns[q] == i) k.values()[q] = -off;
  }
  std::vector<double> rhs(k.rows(), 1.0);
  EXPECT_THROW(linear_solve(k, rhs), SingularJacobian);
}

TEST(LinearSolve, LengthMismatch) {
  const auto k = assemble_stiffness(build_mesh_1d(4));
  EXPECT_THROW(linear_solve(k, std::vector<double>{1.0}), InvalidInput);
}

TEST(LinearSolver, ReusesFactorization) {
  const auto mesh = build_mesh_2d(5);
  auto k = assemble_stiffness(mesh);
  LinearSolver solver;
  solver.factorize(k);
  const std::vector<double> rhs(k.rows(), 1.0);
  const auto x1 = solver.solve(rhs);
  k.scale(2.0);
  solver.factorize(k);
  const auto x2 = solver.solve(rhs);
  for (std::size_t i = 0; i < x1.size(); ++i) EXPECT_NEAR(x2[i], 0.5 * x1[i], 1e-14);
}

TEST(LinearSolver, SolveBeforeFactorize) {
  LinearSolver solver;
  EXPECT_THROW(solver.solve(std::vector<double>{}), InvalidInput);
}
