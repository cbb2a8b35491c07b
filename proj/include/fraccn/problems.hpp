#pragma once

// Benchmark problems for  D_t^alpha u - Laplace(u) = f(u) + g(x, t)  with
// zero boundary and initial data.

#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fraccn/errors.hpp"
#include "fraccn/mesh.hpp"

namespace fraccn {

using ScalarFn = std::function<double(double)>;
using SpaceTimeFn = std::function<double(const Point&, double)>;

struct ProblemSpec {
  std::string name;
  int dim = 1;
  double alpha = 0.5;
  ScalarFn f;
  ScalarFn f_prime;
  SpaceTimeFn g; ///< manufactured source, possibly identically zero
  std::optional<SpaceTimeFn> exact;
};

namespace detail {

inline void require_open_order(double alpha) {
  require(alpha > 0.0 && alpha < 1.0, "problem order must lie in (0, 1)");
}

} // namespace detail

/// Time-fractional Fisher equation on [0, 1]: f(u) = u (1 - u),
/// exact solution t^4 sin(2 pi x).
inline ProblemSpec fisher_1d(double alpha) {
  detail::require_open_order(alpha);
  constexpr double two_pi = 2.0 * std::numbers::pi;
  const double caputo_coeff = 24.0 / std::tgamma(5.0 - alpha);
  ProblemSpec p;
  p.name = "fisher1d";
  p.dim = 1;
  p.alpha = alpha;
  p.f = [](double u) { return u * (1.0 - u); };
  p.f_prime = [](double u) { return 1.0 - 2.0 * u; };
  p.g = [alpha, caputo_coeff, two_pi](const Point& x, double t) {
    const double s = std::sin(two_pi * x[0]);
    const double t4 = t * t * t * t;
    return caputo_coeff * std::pow(t, 4.0 - alpha) * s + two_pi * two_pi * t4 * s -
           t4 * s * (1.0 - t4 * s);
  };
  p.exact = [two_pi](const Point& x, double t) { return t * t * t * t * std::sin(two_pi * x[0]); };
  return p;
}

/// Two-dimensional problem on the unit square with f(u) = u (1 - u)(u - 1),
/// exact solution t^3 (1 - x) sin(x) (1 - y) sin(y).
inline ProblemSpec huxley_2d(double alpha) {
  detail::require_open_order(alpha);
  const double caputo_coeff = 6.0 / std::tgamma(4.0 - alpha);
  ProblemSpec p;
  p.name = "huxley2d";
  p.dim = 2;
  p.alpha = alpha;
  p.f = [](double u) { return u * (1.0 - u) * (u - 1.0); };
  // d/du [-u (1 - u)^2]
  p.f_prime = [](double u) { return -(1.0 - u) * (1.0 - u) + 2.0 * u * (1.0 - u); };
  p.g = [alpha, caputo_coeff](const Point& x, double t) {
    const double sx = (1.0 - x[0]) * std::sin(x[0]);
    const double sy = (1.0 - x[1]) * std::sin(x[1]);
    const double t3 = t * t * t;
    const double prod = sx * sy;
    const double bracket = t3 * prod - 1.0;
    return caputo_coeff * std::pow(t, 3.0 - alpha) * prod +
           2.0 * t3 * (prod + std::cos(x[0]) * sy + sx * std::cos(x[1])) +
           t3 * prod * bracket * bracket;
  };
  p.exact = [](const Point& x, double t) {
    return t * t * t * (1.0 - x[0]) * std::sin(x[0]) * (1.0 - x[1]) * std::sin(x[1]);
  };
  return p;
}

/// f(u) = 5 + u (1 + u^3) with no source; the solution is not smooth in time
/// at t = 0 and has no closed form.
inline ProblemSpec nonsmooth_1d(double alpha) {
  detail::require_open_order(alpha);
  ProblemSpec p;
  p.name = "nonsmooth1d";
  p.dim = 1;
  p.alpha = alpha;
  p.f = [](double u) { return 5.0 + u * (1.0 + u * u * u); };
  p.f_prime = [](double u) { return 1.0 + 4.0 * u * u * u; };
  p.g = [](const Point&, double) { return 0.0; };
  return p;
}

inline std::vector<std::string> problem_names() { return {"fisher1d", "huxley2d", "nonsmooth1d"}; }

inline ProblemSpec make_problem(std::string_view name, double alpha) {
  if (name == "fisher1d") return fisher_1d(alpha);
  if (name == "huxley2d") return huxley_2d(alpha);
  if (name == "nonsmooth1d") return nonsmooth_1d(alpha);
  throw InvalidInput("unknown problem '" + std::string(name) + "'");
}

} // namespace fraccn
