#pragma once

// P1 Galerkin assembly over interior DOFs. Boundary rows and columns are
// eliminated, which imposes the homogeneous Dirichlet condition exactly.

#include <cmath>
#include <cstddef>
#include <memory>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "fraccn/errors.hpp"
#include "fraccn/mesh.hpp"
#include "fraccn/sparse.hpp"

namespace fraccn {

/// Quadrature degree used for f(U), f'(U) and source integrals.
inline int default_load_degree(int dim) { return dim == 1 ? 5 : 4; }

namespace detail {

inline std::string where(const Point& x, int dim) {
  std::ostringstream os;
  os << "x = " << x[0];
  if (dim == 2) os << ", y = " << x[1];
  return os.str();
}

inline void check_finite(double v, const char* what, const Point& x, int dim) {
  if (!std::isfinite(v)) {
    throw NonFiniteValue(std::string(what) + " is not finite at " + where(x, dim));
  }
}

template <typename LocalFn>
SparseMatrix assemble_bilinear(const Mesh& mesh, std::shared_ptr<const SparsityPattern> pattern,
                               LocalFn&& local) {
  SparseMatrix a(pattern ? std::move(pattern) : build_pattern(mesh));
  const auto nv = mesh.vertices_per_element();
  for (std::size_t e = 0; e < mesh.elements.size(); ++e) {
    const auto map = element_map(mesh, e);
    const auto& v = mesh.elements[e].vertices;
    for (std::size_t i = 0; i < nv; ++i) {
      const auto di = mesh.interior_index[v[i]];
      if (di == kBoundaryNode) continue;
      for (std::size_t j = 0; j < nv; ++j) {
        const auto dj = mesh.interior_index[v[j]];
        if (dj == kBoundaryNode) continue;
        a.add(static_cast<std::size_t>(di), static_cast<std::size_t>(dj), local(e, map, i, j));
      }
    }
  }
  return a;
}

} // namespace detail

/// M_ij = int phi_i phi_j, exact P1 element integrals.
inline SparseMatrix assemble_mass(const Mesh& mesh,
                                  std::shared_ptr<const SparsityPattern> pattern = nullptr) {
  const double denom = mesh.dim == 1 ? 6.0 : 12.0;
  return detail::assemble_bilinear(mesh, std::move(pattern),
                                   [denom](std::size_t, const ElementMap& map, std::size_t i, std::size_t j) {
                                     return map.measure * (i == j ? 2.0 : 1.0) / denom;
                                   });
}

/// K_ij = int grad phi_i . grad phi_j, exact (gradients are constant per element).
inline SparseMatrix assemble_stiffness(const Mesh& mesh,
                                       std::shared_ptr<const SparsityPattern> pattern = nullptr) {
  return detail::assemble_bilinear(mesh, std::move(pattern),
                                   [](std::size_t, const ElementMap& map, std::size_t i, std::size_t j) {
                                     return map.measure * (map.grad[i][0] * map.grad[j][0] +
                                                           map.grad[i][1] * map.grad[j][1]);
                                   });
}

/// b_i = int F(x) phi_i(x) dx by element quadrature, where F is evaluated at
/// each quadrature point through fn(x, e, ref).
template <typename PointFn>
std::vector<double> assemble_functional(const Mesh& mesh, const QuadratureRule& rule, PointFn&& fn) {
  std::vector<double> b(mesh.num_dofs(), 0.0);
  const auto nv = mesh.vertices_per_element();
  for (std::size_t e = 0; e < mesh.elements.size(); ++e) {
    const auto map = element_map(mesh, e);
    const auto& v = mesh.elements[e].vertices;
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const auto& ref = rule.points[q];
      const auto x = map.to_physical(ref);
      const double value = fn(x, e, ref) * rule.weights[q] * map.det;
      const auto phi = shape_values(mesh.dim, ref);
      for (std::size_t a = 0; a < nv; ++a) {
        const auto d = mesh.interior_index[v[a]];
        if (d != kBoundaryNode) b[static_cast<std::size_t>(d)] += value * phi[a];
      }
    }
  }
  return b;
}

/// b_i = int f(U(x)) phi_i(x) dx for the P1 function U with coefficients `state`.
template <typename Nonlinearity>
std::vector<double> assemble_nonlinear_load(const Mesh& mesh, std::span<const double> state,
                                            Nonlinearity&& f, int degree = -1) {
  detail::require(state.size() == mesh.num_dofs(), "state length does not match mesh DOFs");
  const auto rule = reference_quadrature(mesh.dim, degree < 0 ? default_load_degree(mesh.dim) : degree);
  return assemble_functional(mesh, rule, [&](const Point& x, std::size_t e, const Point& ref) {
    const double value = f(evaluate_in_element(mesh, state, e, ref));
    detail::check_finite(value, "nonlinearity f(U)", x, mesh.dim);
    return value;
  });
}

/// b_i = int g(x, t) phi_i(x) dx.
template <typename Source>
std::vector<double> assemble_source(const Mesh& mesh, Source&& g, double t, int degree = -1) {
  const auto rule = reference_quadrature(mesh.dim, degree < 0 ? default_load_degree(mesh.dim) : degree);
  return assemble_functional(mesh, rule, [&](const Point& x, std::size_t, const Point&) {
    const double value = g(x, t);
    detail::check_finite(value, "source g(x, t)", x, mesh.dim);
    return value;
  });
}

/// W_ij = int c(U(x)) phi_i phi_j dx by element quadrature.
template <typename Coefficient>
SparseMatrix assemble_weighted_mass(const Mesh& mesh, std::shared_ptr<const SparsityPattern> pattern,
                                    std::span<const double> state, Coefficient&& c, int degree = -1) {
  detail::require(state.size() == mesh.num_dofs(), "state length does not match mesh DOFs");
  const auto rule = reference_quadrature(mesh.dim, degree < 0 ? default_load_degree(mesh.dim) : degree);
  SparseMatrix w(pattern ? std::move(pattern) : build_pattern(mesh));
  const auto nv = mesh.vertices_per_element();
  std::vector<double> cq(rule.points.size());
  for (std::size_t e = 0; e < mesh.elements.size(); ++e) {
    const auto map = element_map(mesh, e);
    const auto& v = mesh.elements[e].vertices;
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const double value = c(evaluate_in_element(mesh, state, e, rule.points[q]));
      detail::check_finite(value, "derivative f'(U)", map.to_physical(rule.points[q]), mesh.dim);
      cq[q] = value * rule.weights[q] * map.det;
    }
    for (std::size_t i = 0; i < nv; ++i) {
      const auto di = mesh.interior_index[v[i]];
      if (di == kBoundaryNode) continue;
      for (std::size_t j = 0; j < nv; ++j) {
        const auto dj = mesh.interior_index[v[j]];
        if (dj == kBoundaryNode) continue;
        double s = 0.0;
        for (std::size_t q = 0; q < rule.points.size(); ++q) {
          const auto phi = shape_values(mesh.dim, rule.points[q]);
          s += cq[q] * (phi[i] * phi[j]);
        }
        w.add(static_cast<std::size_t>(di), static_cast<std::size_t>(dj), s);
      }
    }
  }
  return w;
}

/// Newton Jacobian of the fractional Crank-Nicolson residual with respect to
/// the new coefficients:
///   J = dt^{-alpha} w_0 M + (1 - alpha/2) K - (1 - alpha/2) W(U^{n,alpha}),
/// W_ij = int f'(U^{n,alpha}) phi_i phi_j. The result shares M's pattern.
template <typename Derivative>
SparseMatrix assemble_jacobian(const SparseMatrix& mass, const SparseMatrix& stiffness,
                               const Mesh& mesh, std::span<const double> state_combo,
                               Derivative&& f_prime, double alpha, double dt, int degree = -1) {
  detail::require(dt > 0.0, "dt must be positive");
  const double theta = 1.0 - 0.5 * alpha;
  SparseMatrix j = mass;
  j.scale(std::pow(dt, -alpha)); // w_0 = 1
  j.add_scaled(theta, stiffness);
  const auto w = assemble_weighted_mass(mesh, mass.pattern_ptr(), state_combo,
                                        std::forward<Derivative>(f_prime), degree);
  j.add_scaled(-theta, w);
  return j;
}

} // namespace fraccn
