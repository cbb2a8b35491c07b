#pragma once

// Self-checks behind `fraccn verify`: identities of the convolution weights,
// the coercivity inequality, the Newton Jacobian against finite differences,
// manufactured sources against a numerical Caputo derivative, and the alpha = 1
// step against a separately written Crank-Nicolson integrator.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fraccn/assembly.hpp"
#include "fraccn/mesh.hpp"
#include "fraccn/problems.hpp"
#include "fraccn/quadrature.hpp"
#include "fraccn/stepper.hpp"

namespace fraccn::verify {

struct Check {
  std::string name;
  bool passed = false;
  double measured = 0.0;  ///< worst observed value of the checked quantity
  double tolerance = 0.0;
  std::string detail;
};

inline const std::vector<double>& sample_orders() {
  static const std::vector<double> orders{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  return orders;
}

namespace oracle {

/// (-1)^n binom(-alpha, n) = prod_{l=1}^{n} (1 + (alpha - 1) / l).
inline double phi_closed_form(double alpha, long long n) {
  double p = 1.0;
  for (long long l = 1; l <= n; ++l) p *= 1.0 + (alpha - 1.0) / static_cast<double>(l);
  return p;
}

/// Caputo derivative (1/Gamma(1-a)) int_0^t (t-s)^{-a} u'(s) ds. The graded
/// substitution t - s = t w^q with q = 3/(1-a) turns the weakly singular
/// integral into t^{1-a} q int_0^1 w^2 u'(t (1 - w^q)) dw, which Gauss-Legendre
/// handles to near machine precision.
inline double caputo(const std::function<double(double)>& du, double t, double alpha,
                     int points = 64) {
  if (t == 0.0) return 0.0;
  const auto rule = gauss_legendre(points);
  const double q = 3.0 / (1.0 - alpha);
  double sum = 0.0;
  for (std::size_t k = 0; k < rule.points.size(); ++k) {
    const double w = rule.points[k][0];
    sum += rule.weights[k] * w * w * du(t * (1.0 - std::pow(w, q)));
  }
  return std::pow(t, 1.0 - alpha) * q * sum / std::tgamma(1.0 - alpha);
}

/// Fourth-order central difference of a scalar function.
inline double derivative(const std::function<double(double)>& fn, double x, double step = 1e-3) {
  return (fn(x - 2 * step) - 8 * fn(x - step) + 8 * fn(x + step) - fn(x + 2 * step)) / (12 * step);
}

inline double second_derivative(const std::function<double(double)>& fn, double x,
                                double step = 1e-3) {
  return (-fn(x - 2 * step) + 16 * fn(x - step) - 30 * fn(x) + 16 * fn(x + step) - fn(x + 2 * step)) /
         (12 * step * step);
}

/// Caputo(u) - Laplace(u) - f(u) - g at (x, t) with every derivative of the
/// exact solution taken numerically.
inline double pde_residual(const ProblemSpec& p, const Point& x, double t) {
  const auto& u = *p.exact;
  const auto in_time = [&](double s) {
    return derivative([&](double r) { return u(x, r); }, s);
  };
  double lap = second_derivative([&](double s) { return u(Point{s, x[1]}, t); }, x[0]);
  if (p.dim == 2) lap += second_derivative([&](double s) { return u(Point{x[0], s}, t); }, x[1]);
  const double value = u(x, t);
  return caputo(in_time, t, p.alpha) - lap - p.f(value) - p.g(x, t);
}

/// Dense Gaussian elimination with partial pivoting.
inline std::vector<double> dense_solve(std::vector<std::vector<double>> a, std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    for (std::size_t i = k + 1; i < n; ++i)
      if (std::abs(a[i][k]) > std::abs(a[piv][k])) piv = i;
    std::swap(a[k], a[piv]);
    std::swap(b[k], b[piv]);
    for (std::size_t i = k + 1; i < n; ++i) {
      const double l = a[i][k] / a[k][k];
      for (std::size_t j = k; j < n; ++j) a[i][j] -= l * a[k][j];
      b[i] -= l * b[k];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t j = i + 1; j < n; ++j) s -= a[i][j] * x[j];
    x[i] = s / a[i][i];
  }
  return x;
}

/// Classical Crank-Nicolson for u_t - u_xx = c u + s(t) x (1 - x) on [0, 1]
/// with P1 elements on m cells, written from the textbook stencils:
/// (M/dt + K/2 - cM/2) u^n = (M/dt - K/2 + cM/2) u^{n-1} + b(t_{n-1/2}).
inline std::vector<double> crank_nicolson_1d(std::size_t m, double dt, std::size_t steps, double c,
                                             const std::function<double(double)>& s) {
  const std::size_t n = m - 1;
  const double h = 1.0 / static_cast<double>(m);
  std::vector<std::vector<double>> mass(n, std::vector<double>(n, 0.0)), stiff = mass;
  for (std::size_t i = 0; i < n; ++i) {
    mass[i][i] = 2.0 * h / 3.0;
    stiff[i][i] = 2.0 / h;
    if (i + 1 < n) {
      mass[i][i + 1] = mass[i + 1][i] = h / 6.0;
      stiff[i][i + 1] = stiff[i + 1][i] = -1.0 / h;
    }
  }
  // int x (1 - x) phi_i = h x_i (1 - x_i) - h^3 / 6 for the hat at x_i
  std::vector<double> shape(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double xi = static_cast<double>(i + 1) * h;
    shape[i] = h * xi * (1.0 - xi) - h * h * h / 6.0;
  }
  std::vector<std::vector<double>> lhs(n, std::vector<double>(n)), rhs_op = lhs;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      lhs[i][j] = mass[i][j] / dt + 0.5 * stiff[i][j] - 0.5 * c * mass[i][j];
      rhs_op[i][j] = mass[i][j] / dt - 0.5 * stiff[i][j] + 0.5 * c * mass[i][j];
    }
  std::vector<double> u(n, 0.0);
  for (std::size_t k = 1; k <= steps; ++k) {
    std::vector<double> b(n, 0.0);
    const double sk = s((static_cast<double>(k) - 0.5) * dt);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) b[i] += rhs_op[i][j] * u[j];
      b[i] += sk * shape[i];
    }
    u = dense_solve(lhs, b);
  }
  return u;
}

} // namespace oracle

namespace detail {

inline Check finish(std::string name, double measured, double tolerance, bool passed,
                    std::string detail = {}) {
  return Check{std::move(name), passed, measured, tolerance, std::move(detail)};
}

inline std::string order_note(double alpha, long long n) {
  std::ostringstream os;
  os << "alpha = " << alpha << ", n = " << n;
  return os.str();
}

} // namespace detail

/// w_0 = 1, -1 < w_1 < w_2 < ... < 0, and g_n = sum_{i<=n} w_i positive and
/// strictly decreasing.
inline Check weight_properties(long long n_max = 1000) {
  std::string where;
  bool ok = true;
  for (double a : sample_orders()) {
    const auto t = gl_weights(a, n_max);
    if (t.w[0] != 1.0 || !(t.w[1] > -1.0)) ok = false;
    for (long long i = 1; i <= n_max && ok; ++i) {
      const auto k = static_cast<std::size_t>(i);
      if (!(t.w[k] < 0.0) || (k > 1 && !(t.w[k - 1] < t.w[k])) || !(t.g[k] > 0.0) ||
          !(t.g[k] < t.g[k - 1])) {
        ok = false;
        where = detail::order_note(a, i);
      }
    }
    if (!ok) break;
  }
  return detail::finish("weights: sign, monotonicity, g positivity", ok ? 0.0 : 1.0, 0.0, ok, where);
}

/// Recursion-generated phi_n against the binomial closed form.
inline Check phi_closed_form(long long n_max = 200, double tol = 1e-12) {
  double worst = 0.0;
  std::string where;
  for (double a : sample_orders()) {
    const auto phi = phi_sequence(a, n_max);
    for (long long n = 0; n <= n_max; ++n) {
      const double exact = oracle::phi_closed_form(a, n);
      const double rel = std::abs(phi[static_cast<std::size_t>(n)] - exact) / std::abs(exact);
      if (rel > worst) {
        worst = rel;
        where = detail::order_note(a, n);
      }
    }
  }
  return detail::finish("phi: closed form", worst, tol, worst <= tol, where);
}

/// sum_{i=j}^{n} phi_{n-i} g_{i-j} = 1 for 1 <= j <= n.
inline Check gronwall_identity(long long n_max = 200, double tol = 1e-12) {
  double worst = 0.0;
  std::string where;
  for (double a : sample_orders()) {
    const auto t = gl_weights(a, n_max);
    for (long long n = 1; n <= n_max; ++n)
      for (long long j = 1; j <= n; ++j) {
        double s = 0.0;
        for (long long i = j; i <= n; ++i)
          s += t.phi[static_cast<std::size_t>(n - i)] * t.g[static_cast<std::size_t>(i - j)];
        if (std::abs(s - 1.0) > worst) {
          worst = std::abs(s - 1.0);
          where = detail::order_note(a, n);
        }
      }
  }
  return detail::finish("phi: convolution identity with g", worst, tol, worst <= tol, where);
}

/// (1/Gamma(a)) sum_{i=1}^{n} phi_{n-i} <= n^a / Gamma(1+a) for n <= n2, and
/// (1/(Gamma(a) Gamma(1+(k-1)a))) sum_{i=1}^{n-1} phi_{n-i} i^{(k-1)a}
///   <= n^{ka} / Gamma(1+ka) for n <= n3, k <= 3.
/// `measured` is the largest ratio lhs / rhs.
inline Check weight_sum_bounds(long long n2 = 200, long long n3 = 100, int k_max = 3) {
  double worst = 0.0;
  std::string where;
  for (double a : sample_orders()) {
    const auto phi = phi_sequence(a, std::max(n2, n3));
    for (long long n = 1; n <= n2; ++n) {
      double s = 0.0;
      for (long long i = 1; i <= n; ++i) s += phi[static_cast<std::size_t>(n - i)];
      const double ratio = (s / std::tgamma(a)) / (std::pow(double(n), a) / std::tgamma(1.0 + a));
      if (ratio > worst) {
        worst = ratio;
        where = "sum bound, " + detail::order_note(a, n);
      }
    }
    for (int k = 1; k <= k_max; ++k)
      for (long long n = 1; n <= n3; ++n) {
        double s = 0.0;
        for (long long i = 1; i < n; ++i)
          s += phi[static_cast<std::size_t>(n - i)] * std::pow(double(i), (k - 1) * a);
        const double lhs = s / (std::tgamma(a) * std::tgamma(1.0 + (k - 1) * a));
        const double ratio = lhs / (std::pow(double(n), k * a) / std::tgamma(1.0 + k * a));
        if (ratio > worst) {
          worst = ratio;
          where = "weighted bound k = " + std::to_string(k) + ", " + detail::order_note(a, n);
        }
      }
  }
  return detail::finish("phi: sum bounds", worst, 1.0, worst <= 1.0, where);
}

/// <D e^k, (1-a/2) e^k + (a/2) e^{k-1}> - (1/2) D ||e^k||^2 >= -tol for random
/// vector sequences with e^0 = 0. `measured` is the smallest margin seen.
inline Check coercivity(std::uint64_t seed = 20240601, int sequences = 1000, double tol = 1e-12) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::uniform_int_distribution<int> length(1, 50), width(1, 8);
  const double orders[] = {0.2, 0.5, 0.8};
  double worst = std::numeric_limits<double>::infinity();
  std::string where;
  for (int s = 0; s < sequences; ++s) {
    const double a = orders[s % 3];
    const int n = length(rng), d = width(rng);
    const double dt = 1.0 / n;
    std::vector<std::vector<double>> e(n + 1, std::vector<double>(d, 0.0));
    // alternate white noise with smoother random walks
    for (int k = 1; k <= n; ++k)
      for (int c = 0; c < d; ++c) e[k][c] = (s % 2 ? e[k - 1][c] : 0.0) + normal(rng);
    const auto table = gl_weights(a, n);
    std::vector<double> norms(n + 1);
    for (int k = 0; k <= n; ++k) norms[k] = dot(e[k], e[k]);
    for (int k = 1; k <= n; ++k) {
      const std::span<const std::vector<double>> hist(e.data(), static_cast<std::size_t>(k) + 1);
      const auto de = discrete_frac_deriv(hist, table, dt);
      const auto combo = crank_nicolson_combo(e[k], e[k - 1], a);
      const double dn = discrete_frac_deriv(std::span<const double>(norms.data(), k + 1), table, dt);
      const double margin = dot(de, combo) - 0.5 * dn;
      if (margin < worst) {
        worst = margin;
        where = "sequence " + std::to_string(s) + ", k = " + std::to_string(k);
      }
    }
  }
  return detail::finish("coercivity inequality", worst, tol, worst >= -tol, where);
}

/// Assembled Newton Jacobian against central differences of the residual at
/// random states with random histories (Examples 1 and 2).
inline Check jacobian_fd(std::uint64_t seed = 7, int states = 20) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coeff(-1.0, 1.0), order(0.1, 0.9);
  double worst = 0.0;
  std::string where;
  for (int s = 0; s < states; ++s) {
    const bool two_d = s % 2 == 1;
    const double a = order(rng);
    const auto problem = two_d ? huxley_2d(a) : fisher_1d(a);
    const auto mesh = build_mesh(problem.dim, two_d ? 4 : 8);
    const auto ops = make_operators(mesh);
    SolverConfig config;
    config.alpha = a;
    config.dt = 0.05;
    config.n_steps = 20;
    const auto table = gl_weights(a, 4);
    History history(mesh.num_dofs());
    for (int k = 0; k < 2; ++k) {
      std::vector<double> b(mesh.num_dofs());
      for (auto& v : b) v = coeff(rng);
      history.push(std::move(b));
    }
    std::vector<double> beta(mesh.num_dofs());
    for (auto& v : beta) v = coeff(rng);
    const StepSystem system(mesh, ops, problem, config, table, history);
    const auto fd = finite_difference_jacobian([&](std::span<const double> b) { return system.residual(b); },
                                               beta, 1e-6);
    const double mismatch = jacobian_mismatch(system.jacobian(beta), fd);
    if (mismatch > worst) {
      worst = mismatch;
      where = problem.name + ", state " + std::to_string(s);
    }
  }
  return detail::finish("Jacobian vs finite differences", worst, kJacobianCheckTolerance,
                        worst < kJacobianCheckTolerance, where);
}

/// Manufactured sources of Examples 1 and 2 against the PDE applied to the
/// exact solution through a numerical Caputo derivative.
inline Check residual_oracle(std::uint64_t seed = 11, int points = 100, double tol = 1e-6) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0), order(0.1, 0.9);
  double worst = 0.0;
  std::string where;
  for (int k = 0; k < points; ++k) {
    for (int dim : {1, 2}) {
      const double a = order(rng);
      const auto p = dim == 1 ? fisher_1d(a) : huxley_2d(a);
      const Point x{unit(rng), dim == 2 ? unit(rng) : 0.0};
      const double t = 0.05 + 0.95 * unit(rng);
      const double r = std::abs(oracle::pde_residual(p, x, t));
      if (r > worst) {
        worst = r;
        std::ostringstream os;
        os << p.name << " at x = (" << x[0] << ", " << x[1] << "), t = " << t << ", alpha = " << a;
        where = os.str();
      }
    }
  }
  return detail::finish("manufactured sources vs Caputo oracle", worst, tol, worst < tol, where);
}

/// With alpha = 1 the scheme must reproduce classical Crank-Nicolson.
inline Check classical_limit(double tol = 1e-12) {
  constexpr std::size_t m = 16, steps = 40;
  constexpr double dt = 1.0 / steps, c = 0.75;
  const auto s = [](double t) { return 1.0 + 3.0 * t * t; };
  ProblemSpec p;
  p.name = "linear1d";
  p.dim = 1;
  p.alpha = 1.0;
  p.f = [c](double u) { return c * u; };
  p.f_prime = [c](double) { return c; };
  p.g = [s](const Point& x, double t) { return s(t) * x[0] * (1.0 - x[0]); };
  SolverConfig config;
  config.alpha = 1.0;
  config.dt = dt;
  config.n_steps = steps;
  const auto sim = run_simulation(build_mesh_1d(m), p, config);
  const auto expected = oracle::crank_nicolson_1d(m, dt, steps, c, s);
  double diff = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < expected.size(); ++i) {
    diff = std::max(diff, std::abs(sim.history.back()[i] - expected[i]));
    scale = std::max(scale, std::abs(expected[i]));
  }
  const double rel = diff / scale;
  return detail::finish("alpha = 1 equals Crank-Nicolson", rel, tol, rel < tol);
}

inline std::vector<Check> run_all() {
  return {weight_properties(), phi_closed_form(), gronwall_identity(), weight_sum_bounds(),
          coercivity(),        jacobian_fd(),     residual_oracle(),   classical_limit()};
}

} // namespace fraccn::verify
