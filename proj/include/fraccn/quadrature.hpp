#pragma once

// Grünwald-Letnikov convolution quadrature for the Riemann-Liouville
// derivative of order 0 < alpha <= 1, the complementary phi-sequence used to
// invert the weight convolution, and the Mittag-Leffler function.

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "fraccn/errors.hpp"

namespace fraccn {

/// Order of the time-fractional derivative, 0 < alpha <= 1.
///
/// alpha == 1 is the classical first derivative and is accepted so that the
/// weight generator and the stepper can be checked against backward
/// differences and Crank-Nicolson respectively. Problem definitions require
/// the open interval.
class FractionalOrder {
public:
  explicit FractionalOrder(double alpha) : alpha_(alpha) {
    if (!(alpha > 0.0 && alpha <= 1.0)) {
      throw InvalidInput("fractional order must lie in (0, 1], got " + std::to_string(alpha));
    }
  }

  double value() const noexcept { return alpha_; }
  bool is_classical() const noexcept { return alpha_ == 1.0; }

  friend bool operator==(FractionalOrder, FractionalOrder) = default;

private:
  double alpha_;
};

/// Precomputed GL weights w_i, partial sums g_i = w_0 + ... + w_i and the
/// phi-sequence, all indexed 0..n_max. Immutable once built.
struct WeightTable {
  FractionalOrder alpha;
  std::size_t n_max;
  std::vector<double> w;
  std::vector<double> g;
  std::vector<double> phi;
};

namespace detail {

// phi_0 = 1, phi_n = sum_{i=1}^{n} (g_{i-1} - g_i) phi_{n-i} = -sum_{i=1}^{n} w_i phi_{n-i}.
inline std::vector<double> phi_from_weights(std::span<const double> w) {
  std::vector<double> phi(w.size(), 0.0);
  if (phi.empty()) return phi;
  phi[0] = 1.0;
  for (std::size_t n = 1; n < w.size(); ++n) {
    double sum = 0.0;
    for (std::size_t i = 1; i <= n; ++i) sum -= w[i] * phi[n - i];
    phi[n] = sum;
  }
  return phi;
}

inline std::vector<double> recursive_weights(double alpha, std::size_t n_max) {
  std::vector<double> w(n_max + 1);
  w[0] = 1.0;
  for (std::size_t i = 1; i <= n_max; ++i) {
    w[i] = (1.0 - (alpha + 1.0) / static_cast<double>(i)) * w[i - 1];
  }
  return w;
}

} // namespace detail

/// Builds the weight table up to index n_max with the recursion
/// w_i = (1 - (alpha + 1) / i) w_{i-1}, w_0 = 1.
inline WeightTable gl_weights(FractionalOrder alpha, long long n_max) {
  detail::require(n_max >= 0, "n_max must be nonnegative");
  const auto n = static_cast<std::size_t>(n_max);
  auto w = detail::recursive_weights(alpha.value(), n);
  std::vector<double> g(n + 1);
  double acc = 0.0;
  for (std::size_t i = 0; i <= n; ++i) {
    acc += w[i];
    g[i] = acc;
  }
  auto phi = detail::phi_from_weights(w);
  return WeightTable{alpha, n, std::move(w), std::move(g), std::move(phi)};
}

inline WeightTable gl_weights(double alpha, long long n_max) {
  return gl_weights(FractionalOrder(alpha), n_max);
}

/// phi_0..phi_{n_max} by the convolution recursion. Requires 0 < alpha < 1.
inline std::vector<double> phi_sequence(double alpha, long long n_max) {
  detail::require(alpha > 0.0 && alpha < 1.0, "phi_sequence requires 0 < alpha < 1");
  detail::require(n_max >= 0, "n_max must be nonnegative");
  return detail::phi_from_weights(detail::recursive_weights(alpha, static_cast<std::size_t>(n_max)));
}

/// dt^{-alpha} * sum_{i=0}^{n} w_{n-i} u^i for a scalar history u^0..u^n.
inline double discrete_frac_deriv(std::span<const double> history, const WeightTable& table,
                                  double dt) {
  detail::require(!history.empty(), "history must contain at least u^0");
  detail::require(history.size() <= table.n_max + 1, "history longer than weight table");
  detail::require(dt > 0.0, "dt must be positive");
  const std::size_t n = history.size() - 1;
  double sum = 0.0;
  for (std::size_t i = 0; i <= n; ++i) sum += table.w[n - i] * history[i];
  return std::pow(dt, -table.alpha.value()) * sum;
}

/// Componentwise dt^{-alpha} * sum_{i=0}^{n} w_{n-i} u^i.
inline std::vector<double> discrete_frac_deriv(std::span<const std::vector<double>> history,
                                               const WeightTable& table, double dt) {
  detail::require(!history.empty(), "history must contain at least u^0");
  detail::require(history.size() <= table.n_max + 1, "history longer than weight table");
  detail::require(dt > 0.0, "dt must be positive");
  const std::size_t n = history.size() - 1;
  const std::size_t dim = history.front().size();
  std::vector<double> out(dim, 0.0);
  for (std::size_t i = 0; i <= n; ++i) {
    if (history[i].size() != dim) throw InvalidInput("history vectors differ in dimension");
    const double wi = table.w[n - i];
    for (std::size_t k = 0; k < dim; ++k) out[k] += wi * history[i][k];
  }
  const double scale = std::pow(dt, -table.alpha.value());
  for (auto& v : out) v *= scale;
  return out;
}

/// Increment form dt^{-alpha} * sum_{i=1}^{n} g_{n-i} (u^i - u^{i-1}).
/// Equal to discrete_frac_deriv when u^0 = 0, which is required here.
inline std::vector<double> discrete_frac_deriv_delta(std::span<const std::vector<double>> history,
                                                     const WeightTable& table, double dt) {
  detail::require(!history.empty(), "history must contain at least u^0");
  detail::require(history.size() <= table.n_max + 1, "history longer than weight table");
  detail::require(dt > 0.0, "dt must be positive");
  const std::size_t n = history.size() - 1;
  const std::size_t dim = history.front().size();
  for (double v : history.front()) {
    if (v != 0.0) throw InvalidInput("increment form requires a zero initial state");
  }
  std::vector<double> out(dim, 0.0);
  for (std::size_t i = 1; i <= n; ++i) {
    if (history[i].size() != dim) throw InvalidInput("history vectors differ in dimension");
    const double gi = table.g[n - i];
    for (std::size_t k = 0; k < dim; ++k) out[k] += gi * (history[i][k] - history[i - 1][k]);
  }
  const double scale = std::pow(dt, -table.alpha.value());
  for (auto& v : out) v *= scale;
  return out;
}

/// E_alpha(z) = sum_j z^j / Gamma(1 + j alpha) for real z >= 0.
///
/// Terms are summed until one drops below 1e-14 of the partial sum on the
/// decreasing tail. Throws NonConvergence after max_terms terms or on overflow.
inline double mittag_leffler(double alpha, double z, int max_terms = 10000) {
  detail::require(alpha > 0.0 && alpha <= 1.0, "Mittag-Leffler order must lie in (0, 1]");
  detail::require(z >= 0.0 && std::isfinite(z), "Mittag-Leffler argument must be finite and >= 0");
  if (z == 0.0) return 1.0;
  const double log_z = std::log(z);
  double sum = 1.0;
  double previous = 1.0;
  for (int j = 1; j < max_terms; ++j) {
    const double term = std::exp(j * log_z - std::lgamma(1.0 + j * alpha));
    sum += term;
    if (!std::isfinite(sum)) {
      throw NonConvergence("Mittag-Leffler series overflowed", sum, j);
    }
    if (term < 1e-14 * sum && term <= previous) return sum;
    previous = term;
  }
  throw NonConvergence("Mittag-Leffler series did not converge within the term cap", previous,
                       max_terms);
}

} // namespace fraccn
