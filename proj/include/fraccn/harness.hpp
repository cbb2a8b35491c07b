#pragma once

// Convergence studies: L2 errors at the final time, observed rates between
// consecutive refinements, reference solutions for problems without a closed
// form, and CSV output.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <exception>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "fraccn/errors.hpp"
#include "fraccn/mesh.hpp"
#include "fraccn/problems.hpp"
#include "fraccn/stepper.hpp"

namespace fraccn {

/// Quadrature degree for L2 error integrals.
inline int default_error_degree(int dim) { return dim == 1 ? 9 : 5; }

/// ||U_h - u(., t)||_{L2} by element quadrature of (U_h - u)^2.
template <typename Exact>
double l2_error(const Mesh& mesh, std::span<const double> state, Exact&& exact, double t,
                int degree = -1) {
  detail::require(state.size() == mesh.num_dofs(), "state length does not match mesh DOFs");
  const auto rule = reference_quadrature(mesh.dim, degree < 0 ? default_error_degree(mesh.dim) : degree);
  double sum = 0.0;
  for (std::size_t e = 0; e < mesh.elements.size(); ++e) {
    const auto map = element_map(mesh, e);
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const auto& ref = rule.points[q];
      const double diff = evaluate_in_element(mesh, state, e, ref) - exact(map.to_physical(ref), t);
      sum += rule.weights[q] * map.det * diff * diff;
    }
  }
  return std::sqrt(sum);
}

/// L2 distance between a coarse P1 function and a reference P1 function on a
/// nested refinement, integrated on the reference mesh.
inline double l2_error_vs_reference(const Mesh& coarse_mesh, std::span<const double> coarse_state,
                                    const Mesh& ref_mesh, std::span<const double> ref_state,
                                    int degree = -1) {
  detail::require(coarse_mesh.dim == ref_mesh.dim, "meshes differ in dimension");
  detail::require(coarse_state.size() == coarse_mesh.num_dofs() &&
                      ref_state.size() == ref_mesh.num_dofs(),
                  "state lengths do not match meshes");
  if (ref_mesh.subdivisions % coarse_mesh.subdivisions != 0) {
    throw InvalidInput("reference mesh is not a nested refinement of the coarse mesh");
  }
  return l2_error(
      ref_mesh, ref_state,
      [&](const Point& x, double) { return evaluate(coarse_mesh, coarse_state, x); }, 0.0, degree);
}

/// log(e1 / e2) / log(s1 / s2)
inline double observed_rate(double e1, double s1, double e2, double s2) {
  detail::require(e1 > 0.0 && e2 > 0.0, "errors must be positive");
  detail::require(s1 > 0.0 && s2 > 0.0, "step sizes must be positive");
  detail::require(s1 != s2, "step sizes must differ");
  return std::log(e1 / e2) / std::log(s1 / s2);
}

enum class Axis { spatial, temporal };

inline std::string to_string(Axis a) { return a == Axis::spatial ? "spatial" : "temporal"; }

inline Axis parse_axis(const std::string& s) {
  if (s == "spatial") return Axis::spatial;
  if (s == "temporal") return Axis::temporal;
  throw InvalidInput("axis must be 'spatial' or 'temporal', got '" + s + "'");
}

/// One refinement level: m cells per side and n time steps on [0, T].
struct GridPoint {
  std::size_t subdivisions = 0;
  std::size_t steps = 0;
};

/// Tunables that a config file may override.
struct StudyOptions {
  double final_time = 1.0;
  double newton_tol = 1e-7;
  int newton_max_iter = 25;
  int load_degree_1d = 5;
  int load_degree_2d = 4;
  int error_degree_1d = 9;
  int error_degree_2d = 5;
  unsigned threads = 0; ///< 0 selects hardware concurrency
  std::string cache_dir = ".fraccn_cache";

  int load_degree(int dim) const { return dim == 1 ? load_degree_1d : load_degree_2d; }
  int error_degree(int dim) const { return dim == 1 ? error_degree_1d : error_degree_2d; }

  SolverConfig solver_config(double alpha, int dim, std::size_t steps) const {
    SolverConfig c;
    c.alpha = alpha;
    c.n_steps = steps;
    c.dt = final_time / static_cast<double>(steps);
    c.newton_tol = newton_tol;
    c.newton_max_iter = newton_max_iter;
    c.load_degree = load_degree(dim);
    return c;
  }
};

/// Parses `key = value` lines; blank lines and `#` comments are ignored.
inline StudyOptions parse_options(std::istream& in, StudyOptions opts = {}) {
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
    };
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw InvalidInput("config line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    try {
      if (key == "T" || key == "final_time") opts.final_time = std::stod(value);
      else if (key == "newton_tol") opts.newton_tol = std::stod(value);
      else if (key == "newton_max_iter") opts.newton_max_iter = std::stoi(value);
      else if (key == "load_degree_1d") opts.load_degree_1d = std::stoi(value);
      else if (key == "load_degree_2d") opts.load_degree_2d = std::stoi(value);
      else if (key == "error_degree_1d") opts.error_degree_1d = std::stoi(value);
      else if (key == "error_degree_2d") opts.error_degree_2d = std::stoi(value);
      else if (key == "threads") opts.threads = static_cast<unsigned>(std::stoul(value));
      else if (key == "cache_dir") opts.cache_dir = value;
      else throw InvalidInput("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    } catch (const std::logic_error& e) {
      if (dynamic_cast<const InvalidInput*>(&e)) throw;
      throw InvalidInput("config line " + std::to_string(lineno) + ": bad value '" + value + "'");
    }
  }
  detail::require(opts.final_time > 0.0, "final time must be positive");
  return opts;
}

inline StudyOptions load_options(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open config file " + path.string());
  return parse_options(in);
}

// ---------------------------------------------------------------------------
// Reference solutions
// ---------------------------------------------------------------------------

struct ReferenceSolution {
  int dim = 1;
  std::size_t subdivisions = 0;
  std::size_t steps = 0;
  double alpha = 0.0;
  std::vector<double> values; ///< final-time interior coefficients
};

inline constexpr char kReferenceMagic[8] = {'F', 'C', 'N', 'R', 'E', 'F', '0', '1'};

// Layout: magic[8], u32 dim, u32 rows (= 1), u64 cols, f64 alpha, f64 h, f64 dt,
// then rows * cols f64 values, row-major, native byte order.
inline void write_reference(std::ostream& out, const ReferenceSolution& ref, double final_time) {
  const std::uint32_t dim = static_cast<std::uint32_t>(ref.dim), rows = 1;
  const std::uint64_t cols = ref.values.size();
  const double h = 1.0 / static_cast<double>(ref.subdivisions);
  const double dt = final_time / static_cast<double>(ref.steps);
  out.write(kReferenceMagic, sizeof kReferenceMagic);
  out.write(reinterpret_cast<const char*>(&dim), sizeof dim);
  out.write(reinterpret_cast<const char*>(&rows), sizeof rows);
  out.write(reinterpret_cast<const char*>(&cols), sizeof cols);
  out.write(reinterpret_cast<const char*>(&ref.alpha), sizeof ref.alpha);
  out.write(reinterpret_cast<const char*>(&h), sizeof h);
  out.write(reinterpret_cast<const char*>(&dt), sizeof dt);
  out.write(reinterpret_cast<const char*>(ref.values.data()),
            static_cast<std::streamsize>(cols * sizeof(double)));
}

inline ReferenceSolution read_reference(std::istream& in, double final_time) {
  char magic[8];
  std::uint32_t dim = 0, rows = 0;
  std::uint64_t cols = 0;
  double alpha = 0.0, h = 0.0, dt = 0.0;
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kReferenceMagic, sizeof magic) != 0) {
    throw InvalidInput("not a reference solution file (bad magic)");
  }
  in.read(reinterpret_cast<char*>(&dim), sizeof dim);
  in.read(reinterpret_cast<char*>(&rows), sizeof rows);
  in.read(reinterpret_cast<char*>(&cols), sizeof cols);
  in.read(reinterpret_cast<char*>(&alpha), sizeof alpha);
  in.read(reinterpret_cast<char*>(&h), sizeof h);
  in.read(reinterpret_cast<char*>(&dt), sizeof dt);
  if (!in || rows != 1 || (dim != 1 && dim != 2) || !(h > 0.0) || !(dt > 0.0)) {
    throw InvalidInput("corrupt reference solution header");
  }
  ReferenceSolution ref;
  ref.dim = static_cast<int>(dim);
  ref.subdivisions = static_cast<std::size_t>(std::llround(1.0 / h));
  ref.steps = static_cast<std::size_t>(std::llround(final_time / dt));
  ref.alpha = alpha;
  ref.values.resize(cols);
  in.read(reinterpret_cast<char*>(ref.values.data()), static_cast<std::streamsize>(cols * sizeof(double)));
  if (!in) throw InvalidInput("truncated reference solution file");
  return ref;
}

inline std::filesystem::path reference_path(const StudyOptions& opts, const std::string& problem,
                                            double alpha, std::size_t m, std::size_t steps) {
  std::ostringstream name;
  name << problem << "_a" << alpha << "_m" << m << "_n" << steps << "_T" << opts.final_time << ".fcnref";
  return std::filesystem::path(opts.cache_dir) / name.str();
}

/// Loads the reference run from the cache directory, computing and storing it
/// on a miss. An empty cache_dir disables caching.
inline ReferenceSolution reference_solution(const std::string& problem, double alpha, std::size_t m,
                                            std::size_t steps, const StudyOptions& opts) {
  const auto spec = make_problem(problem, alpha);
  std::optional<std::filesystem::path> path;
  if (!opts.cache_dir.empty()) {
    path = reference_path(opts, problem, alpha, m, steps);
    if (std::ifstream in(*path, std::ios::binary); in) {
      auto ref = read_reference(in, opts.final_time);
      if (ref.dim == spec.dim && ref.subdivisions == m && ref.steps == steps && ref.alpha == alpha) {
        return ref;
      }
    }
  }
  const auto mesh = build_mesh(spec.dim, static_cast<long long>(m));
  const auto sim = run_simulation(mesh, spec, opts.solver_config(alpha, spec.dim, steps));
  ReferenceSolution ref{spec.dim, m, steps, alpha, sim.history.back()};
  if (path) {
    std::filesystem::create_directories(path->parent_path());
    const auto tmp = std::filesystem::path(path->string() + ".tmp");
    {
      std::ofstream out(tmp, std::ios::binary);
      write_reference(out, ref, opts.final_time);
    }
    std::filesystem::rename(tmp, *path);
  }
  return ref;
}

// ---------------------------------------------------------------------------
// Studies
// ---------------------------------------------------------------------------

struct ConvergenceRow {
  double h = 0.0;
  double dt = 0.0;
  double l2_error = 0.0;
  std::optional<double> rate;
  int newton_iters_max = 0;
  double runtime_s = 0.0;
  double max_l2_norm = 0.0; ///< max_n ||U^n|| over the run
};

struct ConvergenceReport {
  std::string problem;
  double alpha = 0.0;
  Axis axis = Axis::spatial;
  std::vector<ConvergenceRow> rows;
};

/// Reference run used by problems without an exact solution.
struct ReferenceSpec {
  std::size_t subdivisions = 256;
  std::size_t steps = 1024;
};

/// Fixed mesh for the default 2D temporal study.
inline constexpr std::size_t kDesk2dTemporalSubdivisions = 64;

/// Refinement grid used for the published tables. `levels` rows starting at
/// the coarsest published level; `full` selects the published fixed meshes
/// for the temporal studies instead of the cheaper defaults.
inline std::vector<GridPoint> standard_grid(const std::string& problem, Axis axis, int levels,
                                            bool full = false) {
  detail::require(levels >= 1 && levels <= 12, "levels must lie in [1, 12]");
  std::vector<GridPoint> grid;
  for (int k = 0; k < levels; ++k) {
    const std::size_t pow2 = std::size_t{1} << k;
    if (problem == "fisher1d") {
      grid.push_back(axis == Axis::spatial ? GridPoint{4 * pow2, 1000}
                                           : GridPoint{full ? 5000u : 512u, 4 * pow2});
    } else if (problem == "huxley2d") {
      grid.push_back(axis == Axis::spatial
                         ? GridPoint{4 * pow2, 1000}
                         : GridPoint{full ? 525u : kDesk2dTemporalSubdivisions, 2 * pow2});
    } else if (problem == "nonsmooth1d") {
      grid.push_back(axis == Axis::spatial ? GridPoint{4 * pow2, 1024} : GridPoint{256, 8 * pow2});
    } else {
      throw InvalidInput("unknown problem '" + problem + "'");
    }
  }
  return grid;
}

inline void write_csv_header(std::ostream& out) {
  out << "problem,alpha,axis,h,dt,l2_error,rate,newton_iters_max,runtime_s\n";
}

inline void write_csv_row(std::ostream& out, const ConvergenceReport& report, const ConvergenceRow& row) {
  std::ostringstream line;
  line.precision(10);
  line << report.problem << ',' << report.alpha << ',' << to_string(report.axis) << ',' << row.h << ','
       << row.dt << ',' << row.l2_error << ',';
  if (row.rate) line << *row.rate;
  line << ',' << row.newton_iters_max << ',' << row.runtime_s << '\n';
  out << line.str();
}

inline void write_csv(std::ostream& out, const ConvergenceReport& report) {
  write_csv_header(out);
  for (const auto& row : report.rows) write_csv_row(out, report, row);
}

/// Runs one simulation per grid point on a bounded worker pool and assembles
/// the report in grid order. For problems without an exact solution the error
/// is measured against `reference` (computed or loaded from the cache).
inline ConvergenceReport run_study(const std::string& problem, double alpha, Axis axis,
                                   const std::vector<GridPoint>& grid, const StudyOptions& opts = {},
                                   std::ostream* sink = nullptr,
                                   std::optional<ReferenceSpec> reference = std::nullopt) {
  detail::require(!grid.empty(), "study grid is empty");
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (axis == Axis::temporal) {
      detail::require(grid[i].subdivisions == grid[0].subdivisions, "temporal study needs a fixed mesh");
    } else {
      detail::require(grid[i].steps == grid[0].steps, "spatial study needs a fixed time step");
    }
  }
  const auto spec = make_problem(problem, alpha);

  std::optional<ReferenceSolution> ref;
  std::optional<Mesh> ref_mesh;
  if (!spec.exact) {
    const auto rs = reference.value_or(ReferenceSpec{});
    ref = reference_solution(problem, alpha, rs.subdivisions, rs.steps, opts);
    ref_mesh = build_mesh(spec.dim, static_cast<long long>(rs.subdivisions));
  }

  std::vector<ConvergenceRow> rows(grid.size());
  std::vector<std::exception_ptr> errors(grid.size());
  const auto run_point = [&](std::size_t k) {
    const auto start = std::chrono::steady_clock::now();
    const auto& gp = grid[k];
    const auto mesh = build_mesh(spec.dim, static_cast<long long>(gp.subdivisions));
    const auto config = opts.solver_config(alpha, spec.dim, gp.steps);
    const auto sim = run_simulation(mesh, spec, config);
    ConvergenceRow row;
    row.h = mesh.h;
    row.dt = config.dt;
    if (spec.exact) {
      row.l2_error = l2_error(mesh, sim.history.back(), *spec.exact, config.final_time(),
                              opts.error_degree(spec.dim));
    } else {
      row.l2_error = l2_error_vs_reference(mesh, sim.history.back(), *ref_mesh, ref->values,
                                           opts.error_degree(spec.dim));
    }
    row.newton_iters_max = *std::max_element(sim.newton_iterations.begin(), sim.newton_iterations.end());
    row.max_l2_norm = sim.max_l2_norm;
    row.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    rows[k] = row;
  };

  unsigned workers = opts.threads ? opts.threads : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, static_cast<unsigned>(grid.size()));
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t k = next++; k < grid.size(); k = next++) {
      try {
        run_point(k);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
  }

  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (!errors[k]) continue;
    std::ostringstream where;
    where << "grid point " << k << " (h = 1/" << grid[k].subdivisions << ", " << grid[k].steps << " steps): ";
    try {
      std::rethrow_exception(errors[k]);
    } catch (const SolverFailure& e) {
      throw SolverFailure(where.str() + e.what());
    } catch (const InvalidInput& e) {
      throw InvalidInput(where.str() + e.what());
    }
  }

  ConvergenceReport report{problem, alpha, axis, std::move(rows)};
  for (std::size_t k = 1; k < report.rows.size(); ++k) {
    const auto& a = report.rows[k - 1];
    const auto& b = report.rows[k];
    report.rows[k].rate = axis == Axis::spatial ? observed_rate(a.l2_error, a.h, b.l2_error, b.h)
                                                : observed_rate(a.l2_error, a.dt, b.l2_error, b.dt);
  }
  if (sink) write_csv(*sink, report);
  return report;
}

} // namespace fraccn
