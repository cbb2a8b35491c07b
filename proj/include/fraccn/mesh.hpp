#pragma once

// Uniform P1 meshes of the unit interval and the unit square, reference
// element quadrature, and nodal-basis evaluation.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <ostream>
#include <span>
#include <vector>

#include "fraccn/errors.hpp"

namespace fraccn {

/// Physical coordinates. The second component is zero in 1D.
using Point = std::array<double, 2>;

inline constexpr std::ptrdiff_t kBoundaryNode = -1;

struct Element {
  std::array<std::size_t, 3> vertices{}; ///< only the first dim+1 entries are used
};

struct Mesh {
  int dim = 1;
  std::size_t subdivisions = 0; ///< cells per side
  double h = 0.0;
  std::vector<Point> nodes;
  /// node -> interior DOF index, or kBoundaryNode
  std::vector<std::ptrdiff_t> interior_index;
  /// interior DOF -> node
  std::vector<std::size_t> dof_nodes;
  std::vector<Element> elements;

  std::size_t num_dofs() const noexcept { return dof_nodes.size(); }
  std::size_t vertices_per_element() const noexcept { return static_cast<std::size_t>(dim) + 1; }
};

/// Uniform mesh of [0, 1] with m segments; interior DOFs numbered left to right.
inline Mesh build_mesh_1d(long long m) {
  detail::require(m >= 2, "1D mesh needs at least 2 subdivisions");
  Mesh mesh;
  mesh.dim = 1;
  mesh.subdivisions = static_cast<std::size_t>(m);
  mesh.h = 1.0 / static_cast<double>(m);
  const auto n = mesh.subdivisions;
  mesh.nodes.resize(n + 1);
  mesh.interior_index.assign(n + 1, kBoundaryNode);
  for (std::size_t i = 0; i <= n; ++i) {
    mesh.nodes[i] = {static_cast<double>(i) / static_cast<double>(n), 0.0};
    if (i > 0 && i < n) {
      mesh.interior_index[i] = static_cast<std::ptrdiff_t>(mesh.dof_nodes.size());
      mesh.dof_nodes.push_back(i);
    }
  }
  mesh.elements.resize(n);
  for (std::size_t e = 0; e < n; ++e) mesh.elements[e].vertices = {e, e + 1, 0};
  return mesh;
}

/// Uniform m x m grid on [0, 1]^2, every cell cut along its lower-left to
/// upper-right diagonal. Node (i, j) has index j (m + 1) + i. Cell (i, j)
/// owns elements 2 (j m + i) (below the diagonal) and 2 (j m + i) + 1.
inline Mesh build_mesh_2d(long long m) {
  detail::require(m >= 2, "2D mesh needs at least 2 subdivisions");
  Mesh mesh;
  mesh.dim = 2;
  mesh.subdivisions = static_cast<std::size_t>(m);
  mesh.h = 1.0 / static_cast<double>(m);
  const auto n = mesh.subdivisions;
  const auto node = [n](std::size_t i, std::size_t j) { return j * (n + 1) + i; };
  mesh.nodes.resize((n + 1) * (n + 1));
  mesh.interior_index.assign(mesh.nodes.size(), kBoundaryNode);
  for (std::size_t j = 0; j <= n; ++j) {
    for (std::size_t i = 0; i <= n; ++i) {
      mesh.nodes[node(i, j)] = {static_cast<double>(i) / static_cast<double>(n),
                                static_cast<double>(j) / static_cast<double>(n)};
      if (i > 0 && i < n && j > 0 && j < n) {
        mesh.interior_index[node(i, j)] = static_cast<std::ptrdiff_t>(mesh.dof_nodes.size());
        mesh.dof_nodes.push_back(node(i, j));
      }
    }
  }
  mesh.elements.reserve(2 * n * n);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      const auto n00 = node(i, j), n10 = node(i + 1, j), n01 = node(i, j + 1),
                 n11 = node(i + 1, j + 1);
      mesh.elements.push_back(Element{{n00, n10, n11}});
      mesh.elements.push_back(Element{{n00, n11, n01}});
    }
  }
  return mesh;
}

inline Mesh build_mesh(int dim, long long m) {
  detail::require(dim == 1 || dim == 2, "mesh dimension must be 1 or 2");
  return dim == 1 ? build_mesh_1d(m) : build_mesh_2d(m);
}

// ---------------------------------------------------------------------------
// Element geometry
// ---------------------------------------------------------------------------

/// Affine map from the reference element ([0,1] or the unit right triangle).
struct ElementMap {
  Point origin{};
  std::array<std::array<double, 2>, 2> jacobian{}; ///< columns are edge vectors
  double measure = 0.0;                            ///< signed length / area
  double det = 0.0;                                ///< Jacobian determinant of the map
  /// gradients of the P1 shape functions in physical coordinates
  std::array<std::array<double, 2>, 3> grad{};

  Point to_physical(const Point& ref) const {
    return {origin[0] + jacobian[0][0] * ref[0] + jacobian[0][1] * ref[1],
            origin[1] + jacobian[1][0] * ref[0] + jacobian[1][1] * ref[1]};
  }
};

inline ElementMap element_map(const Mesh& mesh, std::size_t e) {
  const auto& v = mesh.elements[e].vertices;
  ElementMap map;
  map.origin = mesh.nodes[v[0]];
  if (mesh.dim == 1) {
    const double len = mesh.nodes[v[1]][0] - mesh.nodes[v[0]][0];
    map.jacobian = {{{len, 0.0}, {0.0, 0.0}}};
    map.measure = len;
    map.det = len;
    map.grad = {{{-1.0 / len, 0.0}, {1.0 / len, 0.0}, {0.0, 0.0}}};
    return map;
  }
  const auto& p0 = mesh.nodes[v[0]];
  const auto& p1 = mesh.nodes[v[1]];
  const auto& p2 = mesh.nodes[v[2]];
  const double a = p1[0] - p0[0], b = p2[0] - p0[0];
  const double c = p1[1] - p0[1], d = p2[1] - p0[1];
  map.jacobian = {{{a, b}, {c, d}}};
  const double det = a * d - b * c;
  map.measure = 0.5 * det;
  map.det = det;
  // rows of J^{-1} are the gradients of the reference coordinates
  const std::array<double, 2> dxi = {d / det, -b / det};
  const std::array<double, 2> deta = {-c / det, a / det};
  map.grad = {{{-dxi[0] - deta[0], -dxi[1] - deta[1]}, dxi, deta}};
  return map;
}

/// P1 shape function values at a reference point.
inline std::array<double, 3> shape_values(int dim, const Point& ref) {
  if (dim == 1) return {1.0 - ref[0], ref[0], 0.0};
  return {1.0 - ref[0] - ref[1], ref[0], ref[1]};
}

// ---------------------------------------------------------------------------
// Quadrature
// ---------------------------------------------------------------------------

struct QuadratureRule {
  int dim = 1;
  int degree = 0;
  std::vector<Point> points; ///< reference coordinates
  std::vector<double> weights;
};

namespace detail {

// (P_n(x), P_n'(x)) by the three-term recurrence.
inline std::array<double, 2> legendre(int n, double x) {
  double p0 = 1.0, p1 = x;
  for (int j = 2; j <= n; ++j) {
    const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
    p0 = p1;
    p1 = p2;
  }
  return {p1, n * (x * p1 - p0) / (x * x - 1.0)};
}

} // namespace detail

/// n-point Gauss-Legendre rule on [0, 1], exact to degree 2n - 1.
inline QuadratureRule gauss_legendre(int n) {
  detail::require(n >= 1, "Gauss-Legendre rule needs at least one point");
  QuadratureRule rule;
  rule.dim = 1;
  rule.degree = 2 * n - 1;
  for (int k = 0; k < n; ++k) {
    double x = std::cos(std::numbers::pi * (k + 0.75) / (n + 0.5));
    for (int it = 0; it < 100; ++it) {
      const auto [p, dp] = detail::legendre(n, x);
      const double dx = p / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double dp = detail::legendre(n, x)[1];
    rule.points.push_back({0.5 * (1.0 - x), 0.0});
    rule.weights.push_back(1.0 / ((1.0 - x * x) * dp * dp));
  }
  return rule;
}

namespace detail {

inline void add_orbit3(QuadratureRule& rule, double a, double w) {
  const double b = 1.0 - 2.0 * a;
  rule.points.push_back({a, a});
  rule.points.push_back({b, a});
  rule.points.push_back({a, b});
  rule.weights.insert(rule.weights.end(), 3, w);
}

inline QuadratureRule triangle_rule(int degree) {
  QuadratureRule rule;
  rule.dim = 2;
  switch (degree) {
  case 0:
  case 1:
    rule.degree = 1;
    rule.points = {{1.0 / 3.0, 1.0 / 3.0}};
    rule.weights = {0.5};
    break;
  case 2:
    rule.degree = 2;
    add_orbit3(rule, 1.0 / 6.0, 1.0 / 6.0);
    break;
  case 3:
  case 4:
    // 6-point positive rule, exact to degree 4
    rule.degree = 4;
    add_orbit3(rule, 0.445948490915965, 0.5 * 0.223381589678011);
    add_orbit3(rule, 0.091576213509771, 0.5 * 0.109951743655322);
    break;
  case 5: {
    rule.degree = 5;
    const double s15 = std::sqrt(15.0);
    rule.points = {{1.0 / 3.0, 1.0 / 3.0}};
    rule.weights = {9.0 / 80.0};
    add_orbit3(rule, (6.0 - s15) / 21.0, (155.0 - s15) / 2400.0);
    add_orbit3(rule, (6.0 + s15) / 21.0, (155.0 + s15) / 2400.0);
    break;
  }
  default:
    throw InvalidInput("triangle quadrature supports degree <= 5");
  }
  return rule;
}

} // namespace detail

/// Rule on the reference element exact for total degree <= degree.
/// 1D: Gauss-Legendre on [0, 1], degree <= 9. 2D: symmetric positive rules on
/// the unit right triangle, degree <= 5.
inline QuadratureRule reference_quadrature(int dim, int degree) {
  detail::require(degree >= 0, "quadrature degree must be nonnegative");
  if (dim == 1) {
    detail::require(degree <= 9, "1D quadrature supports degree <= 9");
    return gauss_legendre(degree / 2 + 1);
  }
  detail::require(dim == 2, "quadrature dimension must be 1 or 2");
  return detail::triangle_rule(degree);
}

// ---------------------------------------------------------------------------
// Finite element functions
// ---------------------------------------------------------------------------

/// Element containing p and the reference coordinates of p in it.
struct Location {
  std::size_t element = 0;
  Point ref{};
};

inline Location locate(const Mesh& mesh, const Point& p) {
  const auto n = mesh.subdivisions;
  const auto cell = [n](double x, double& local) {
    const double scaled = x * static_cast<double>(n);
    auto idx = static_cast<std::ptrdiff_t>(std::floor(scaled));
    idx = std::clamp<std::ptrdiff_t>(idx, 0, static_cast<std::ptrdiff_t>(n) - 1);
    local = scaled - static_cast<double>(idx);
    return static_cast<std::size_t>(idx);
  };
  double s = 0.0, t = 0.0;
  const auto i = cell(p[0], s);
  if (mesh.dim == 1) return {i, {s, 0.0}};
  const auto j = cell(p[1], t);
  const auto base = 2 * (j * n + i);
  if (s >= t) return {base, {s - t, t}};
  return {base + 1, {s, t - s}};
}

/// Value of the P1 function with interior coefficients `coeffs` (zero on the
/// boundary) at reference point `ref` of element e.
inline double evaluate_in_element(const Mesh& mesh, std::span<const double> coeffs, std::size_t e,
                                  const Point& ref) {
  const auto phi = shape_values(mesh.dim, ref);
  double value = 0.0;
  for (std::size_t a = 0; a < mesh.vertices_per_element(); ++a) {
    const auto dof = mesh.interior_index[mesh.elements[e].vertices[a]];
    if (dof != kBoundaryNode) value += coeffs[static_cast<std::size_t>(dof)] * phi[a];
  }
  return value;
}

inline double evaluate(const Mesh& mesh, std::span<const double> coeffs, const Point& p) {
  const auto loc = locate(mesh, p);
  return evaluate_in_element(mesh, coeffs, loc.element, loc.ref);
}

/// Nodal interpolant restricted to interior nodes.
template <typename Fn>
std::vector<double> interpolate(const Mesh& mesh, Fn&& fn) {
  std::vector<double> coeffs(mesh.num_dofs());
  for (std::size_t k = 0; k < coeffs.size(); ++k) coeffs[k] = fn(mesh.nodes[mesh.dof_nodes[k]]);
  return coeffs;
}

/// Plain-text listing: a "nodes" header, one `index x [y]` line per node,
/// an "elements" header, one line of vertex indices per element.
inline void dump_mesh(const Mesh& mesh, std::ostream& out) {
  out << "nodes " << mesh.nodes.size() << '\n';
  for (std::size_t i = 0; i < mesh.nodes.size(); ++i) {
    out << i << ' ' << mesh.nodes[i][0];
    if (mesh.dim == 2) out << ' ' << mesh.nodes[i][1];
    out << '\n';
  }
  out << "elements " << mesh.elements.size() << '\n';
  for (const auto& el : mesh.elements) {
    for (std::size_t a = 0; a < mesh.vertices_per_element(); ++a) {
      out << (a ? " " : "") << el.vertices[a];
    }
    out << '\n';
  }
}

} // namespace fraccn
