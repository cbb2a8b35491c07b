#pragma once

// Fractional Crank-Nicolson time stepping. At step n the new coefficients
// beta solve H(beta) = 0 with
//
//   H(beta) = dt^{-a} M beta + K U^{n,a} - F(U^{n,a}) - G(t_{n-a/2})
//             + dt^{-a} M sum_{j=1}^{n-1} w_{n-j} beta^j,
//   U^{n,a} = (1 - a/2) beta + (a/2) beta^{n-1},
//
// where F and G are the nonlinear load and source vectors. Newton's method
// with the exact Jacobian and a sparse direct solve handles each step.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "fraccn/assembly.hpp"
#include "fraccn/errors.hpp"
#include "fraccn/linear_solver.hpp"
#include "fraccn/mesh.hpp"
#include "fraccn/problems.hpp"
#include "fraccn/quadrature.hpp"
#include "fraccn/sparse.hpp"

namespace fraccn {

struct SolverConfig {
  double alpha = 0.5;
  double dt = 1e-3;
  std::size_t n_steps = 1000;
  double newton_tol = 1e-7;
  int newton_max_iter = 25;
  /// compare the assembled Jacobian with central differences at every iterate
  bool fd_jacobian_check = false;
  /// quadrature degree for f(U), f'(U) and g; negative selects the default
  int load_degree = -1;

  double final_time() const { return dt * static_cast<double>(n_steps); }

  void validate() const {
    FractionalOrder{alpha};
    detail::require(dt > 0.0 && std::isfinite(dt), "dt must be positive");
    detail::require(n_steps >= 1, "n_steps must be at least 1");
    detail::require(newton_tol > 0.0, "newton_tol must be positive");
    detail::require(newton_max_iter >= 1, "newton_max_iter must be at least 1");
  }
};

/// Mass and stiffness matrices on one shared sparsity pattern.
struct Operators {
  std::shared_ptr<const SparsityPattern> pattern;
  SparseMatrix mass;
  SparseMatrix stiffness;
};

inline Operators make_operators(const Mesh& mesh) {
  auto pattern = build_pattern(mesh);
  return Operators{pattern, assemble_mass(mesh, pattern), assemble_stiffness(mesh, pattern)};
}

/// Coefficient vectors beta^0..beta^n; beta^0 is identically zero.
class History {
public:
  explicit History(std::size_t dofs) : states_{std::vector<double>(dofs, 0.0)} {}

  void push(std::vector<double> state) {
    detail::require(state.size() == dofs(), "state length does not match history");
    states_.push_back(std::move(state));
  }

  std::size_t size() const noexcept { return states_.size(); }
  std::size_t dofs() const noexcept { return states_.front().size(); }
  const std::vector<double>& operator[](std::size_t n) const { return states_[n]; }
  const std::vector<double>& back() const { return states_.back(); }
  std::span<const std::vector<double>> states() const noexcept { return states_; }

  friend bool operator==(const History&, const History&) = default;

private:
  std::vector<std::vector<double>> states_;
};

/// ||U||_{L2} of a P1 function via its mass matrix.
inline double l2_norm(const SparseMatrix& mass, std::span<const double> beta) {
  return std::sqrt(std::max(0.0, dot(beta, mass * beta)));
}

/// U^{n,alpha} = (1 - alpha/2) beta + (alpha/2) previous.
inline std::vector<double> crank_nicolson_combo(std::span<const double> beta,
                                                std::span<const double> previous, double alpha) {
  std::vector<double> out(beta.size());
  for (std::size_t i = 0; i < beta.size(); ++i)
    out[i] = (1.0 - 0.5 * alpha) * beta[i] + 0.5 * alpha * previous[i];
  return out;
}

/// Everything about step n that does not depend on the new coefficients.
class StepSystem {
public:
  StepSystem(const Mesh& mesh, const Operators& ops, const ProblemSpec& problem,
             const SolverConfig& config, const WeightTable& table, const History& history)
      : mesh_(mesh), ops_(ops), problem_(problem), config_(config),
        previous_(history.back()), scale_(std::pow(config.dt, -config.alpha)) {
    const std::size_t n = history.size();
    detail::require(n <= table.n_max, "weight table too short for this step");
    detail::require(mesh.num_dofs() == history.dofs(), "history does not match mesh");
    detail::require(mesh.dim == problem.dim, "mesh and problem dimensions differ");
    // sum_{j=1}^{n-1} w_{n-j} beta^j
    std::vector<double> memory(mesh.num_dofs(), 0.0);
    for (std::size_t j = 1; j < n; ++j) {
      const double wj = table.w[n - j];
      const auto& b = history[j];
      for (std::size_t i = 0; i < memory.size(); ++i) memory[i] += wj * b[i];
    }
    const auto mem = ops.mass * memory;
    const auto kprev = ops.stiffness * previous_;
    const double t_shift = (static_cast<double>(n) - 0.5 * config.alpha) * config.dt;
    const auto source = assemble_source(mesh, problem.g, t_shift, config.load_degree);
    constant_.resize(mesh.num_dofs());
    for (std::size_t i = 0; i < constant_.size(); ++i)
      constant_[i] = scale_ * mem[i] + 0.5 * config.alpha * kprev[i] - source[i];
  }

  std::vector<double> combo(std::span<const double> beta) const {
    return crank_nicolson_combo(beta, previous_, config_.alpha);
  }

  std::vector<double> residual(std::span<const double> beta) const {
    const double theta = 1.0 - 0.5 * config_.alpha;
    const auto mb = ops_.mass * beta;
    const auto kb = ops_.stiffness * beta;
    const auto load = assemble_nonlinear_load(mesh_, combo(beta), problem_.f, config_.load_degree);
    std::vector<double> h(beta.size());
    for (std::size_t i = 0; i < h.size(); ++i)
      h[i] = scale_ * mb[i] + theta * kb[i] - load[i] + constant_[i];
    return h;
  }

  SparseMatrix jacobian(std::span<const double> beta) const {
    return assemble_jacobian(ops_.mass, ops_.stiffness, mesh_, combo(beta), problem_.f_prime,
                             config_.alpha, config_.dt, config_.load_degree);
  }

  const std::vector<double>& previous() const noexcept { return previous_; }

private:
  const Mesh& mesh_;
  const Operators& ops_;
  const ProblemSpec& problem_;
  const SolverConfig& config_;
  std::vector<double> previous_;
  double scale_;
  std::vector<double> constant_;
};

/// H(beta) for the step that follows the last entry of `history`.
inline std::vector<double> residual(std::span<const double> beta, const History& history,
                                    const Mesh& mesh, const Operators& ops,
                                    const ProblemSpec& problem, const SolverConfig& config,
                                    const WeightTable& table) {
  return StepSystem(mesh, ops, problem, config, table, history).residual(beta);
}

/// Dense central-difference Jacobian, column j = dH/dbeta_j.
template <typename ResidualFn>
std::vector<std::vector<double>> finite_difference_jacobian(ResidualFn&& fn,
                                                            std::span<const double> beta,
                                                            double step = 1e-7) {
  const std::size_t n = beta.size();
  std::vector<std::vector<double>> jac(n, std::vector<double>(n, 0.0));
  std::vector<double> x(beta.begin(), beta.end());
  for (std::size_t j = 0; j < n; ++j) {
    const double saved = x[j];
    x[j] = saved + step;
    const auto plus = fn(x);
    x[j] = saved - step;
    const auto minus = fn(x);
    x[j] = saved;
    for (std::size_t i = 0; i < n; ++i) jac[i][j] = (plus[i] - minus[i]) / (2.0 * step);
  }
  return jac;
}

/// max |A - FD| / max(1, max |A|)
inline double jacobian_mismatch(const SparseMatrix& a, const std::vector<std::vector<double>>& fd) {
  const auto dense = a.to_dense();
  double diff = 0.0, scale = 1.0;
  for (std::size_t i = 0; i < dense.size(); ++i)
    for (std::size_t j = 0; j < dense.size(); ++j) {
      diff = std::max(diff, std::abs(dense[i][j] - fd[i][j]));
      scale = std::max(scale, std::abs(dense[i][j]));
    }
  return diff / scale;
}

inline constexpr double kJacobianCheckTolerance = 1e-5;

struct NewtonResult {
  std::vector<double> state;
  int iterations = 0;
  /// RMS residual before the first update and after each update
  std::vector<double> residual_history;
};

/// Newton iteration beta <- beta - J^{-1} H(beta). Stops once the RMS
/// residual is below tol and the RMS correction is below tol; when the last
/// applied correction is still large, the next correction is estimated with
/// the current factorization instead of taking another full step.
inline NewtonResult newton_solve(const StepSystem& system, std::vector<double> guess,
                                 const SolverConfig& config, LinearSolver& solver) {
  for (double v : guess) {
    if (!std::isfinite(v)) throw InvalidInput("Newton initial guess is not finite");
  }
  NewtonResult result;
  result.state = std::move(guess);
  auto h = system.residual(result.state);
  result.residual_history.push_back(rms(h));
  if (result.residual_history.back() < config.newton_tol) {
    // the guess may already solve the system; confirm with a correction estimate
    solver.factorize(system.jacobian(result.state));
    if (rms(solver.solve(h)) < config.newton_tol) return result;
  }
  for (int it = 1; it <= config.newton_max_iter; ++it) {
    const auto j = system.jacobian(result.state);
    if (config.fd_jacobian_check) {
      const auto fd = finite_difference_jacobian(
          [&](std::span<const double> b) { return system.residual(b); }, result.state);
      const double mismatch = jacobian_mismatch(j, fd);
      if (mismatch > kJacobianCheckTolerance) {
        throw SolverFailure("Jacobian disagrees with finite differences (relative mismatch " +
                            std::to_string(mismatch) + ")");
      }
    }
    solver.factorize(j);
    const auto delta = solver.solve(h);
    for (std::size_t i = 0; i < delta.size(); ++i) result.state[i] -= delta[i];
    h = system.residual(result.state);
    const double r = rms(h);
    result.residual_history.push_back(r);
    result.iterations = it;
    if (!std::isfinite(r)) break;
    if (r < config.newton_tol) {
      if (rms(delta) < config.newton_tol) return result;
      if (rms(solver.solve(h)) < config.newton_tol) return result;
    }
  }
  throw NonConvergence("Newton iteration did not converge in " +
                           std::to_string(config.newton_max_iter) + " iterations (residual " +
                           std::to_string(result.residual_history.back()) + ")",
                       result.residual_history.back(), result.iterations);
}

struct SimulationResult {
  History history;
  std::vector<int> newton_iterations; ///< per step, index 0 is step 1
  std::vector<std::vector<double>> residual_histories;
  /// max_n ||U^n||_{L2}
  double max_l2_norm = 0.0;
};

/// Runs n_steps steps from the zero initial state. Each step starts Newton
/// from the previous state. Failures are rethrown as StepFailure.
inline SimulationResult run_simulation(const Mesh& mesh, const ProblemSpec& problem,
                                       const SolverConfig& config) {
  config.validate();
  detail::require(mesh.dim == problem.dim, "mesh and problem dimensions differ");
  detail::require(std::abs(config.alpha - problem.alpha) < 1e-15,
                  "solver and problem fractional orders differ");
  const auto ops = make_operators(mesh);
  const auto table = gl_weights(config.alpha, static_cast<long long>(config.n_steps) + 1);
  SimulationResult out{History(mesh.num_dofs()), {}, {}, 0.0};
  LinearSolver solver;
  for (std::size_t n = 1; n <= config.n_steps; ++n) {
    try {
      const StepSystem system(mesh, ops, problem, config, table, out.history);
      auto step = newton_solve(system, out.history.back(), config, solver);
      out.max_l2_norm = std::max(out.max_l2_norm, l2_norm(ops.mass, step.state));
      out.newton_iterations.push_back(step.iterations);
      out.residual_histories.push_back(std::move(step.residual_history));
      out.history.push(std::move(step.state));
    } catch (const StepFailure&) {
      throw;
    } catch (const SolverFailure& e) {
      throw StepFailure("step " + std::to_string(n) + ": " + e.what(), n);
    }
  }
  return out;
}

} // namespace fraccn
