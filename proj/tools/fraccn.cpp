// fraccn: convergence studies, single runs and self-checks from the shell.
// Exit codes: 0 success, 1 solver failure, 2 invalid input.

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "fraccn/fraccn.hpp"

namespace {

using namespace fraccn;

/// Accepts "1/32", "0.03125" or "1e-3".
double parse_number(const std::string& text) {
  const auto slash = text.find('/');
  std::size_t used = 0;
  try {
    if (slash == std::string::npos) {
      const double v = std::stod(text, &used);
      if (used != text.size()) throw std::invalid_argument(text);
      return v;
    }
    const double num = std::stod(text.substr(0, slash), &used);
    if (used != slash) throw std::invalid_argument(text);
    const auto rest = text.substr(slash + 1);
    const double den = std::stod(rest, &used);
    if (used != rest.size() || den == 0.0) throw std::invalid_argument(text);
    return num / den;
  } catch (const std::logic_error&) {
    throw InvalidInput("cannot parse number '" + text + "'");
  }
}

/// Number of equal pieces of `length` with size `step`; must be a whole number.
std::size_t pieces(double length, double step, const char* what) {
  if (!(step > 0.0) || !std::isfinite(step)) throw InvalidInput(std::string(what) + " must be positive");
  const double n = length / step;
  const double rounded = std::round(n);
  if (rounded < 1.0 || std::abs(n - rounded) > 1e-9 * std::max(1.0, n)) {
    throw InvalidInput(std::string(what) + " must divide " + std::to_string(length) + " evenly");
  }
  return static_cast<std::size_t>(rounded);
}

StudyOptions options_from(const std::string& config_path) {
  return config_path.empty() ? StudyOptions{} : load_options(config_path);
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot open " + path + " for writing");
  return out;
}

struct StudyArgs {
  std::string problem, axis = "spatial", out, config;
  double alpha = 0.5;
  int levels = 4;
  bool full = false;
};

int study(const StudyArgs& a) {
  const auto opts = options_from(a.config);
  const auto axis = parse_axis(a.axis);
  make_problem(a.problem, a.alpha); // validates name and order
  const auto grid = standard_grid(a.problem, axis, a.levels, a.full);
  const auto report = run_study(a.problem, a.alpha, axis, grid, opts);
  if (a.out.empty() || a.out == "-") {
    write_csv(std::cout, report);
  } else {
    auto out = open_output(a.out);
    write_csv(out, report);
    std::cerr << "wrote " << report.rows.size() << " rows to " << a.out << '\n';
  }
  return 0;
}

struct RunArgs {
  std::string problem, h = "1/32", dt = "1e-3", dump_solution, dump_mesh, config;
  double alpha = 0.5;
};

int run(const RunArgs& a) {
  const auto opts = options_from(a.config);
  const auto problem = make_problem(a.problem, a.alpha);
  const auto m = pieces(1.0, parse_number(a.h), "h");
  const auto steps = pieces(opts.final_time, parse_number(a.dt), "dt");
  const auto mesh = build_mesh(problem.dim, static_cast<long long>(m));
  const auto config = opts.solver_config(a.alpha, problem.dim, steps);
  const auto sim = run_simulation(mesh, problem, config);
  const auto& state = sim.history.back();

  int iters = 0;
  for (int k : sim.newton_iterations) iters = std::max(iters, k);
  std::cout << std::setprecision(10) << "problem " << problem.name << ", alpha " << a.alpha << ", h 1/" << m
            << ", dt " << config.dt << ", steps " << steps << '\n'
            << "dofs " << mesh.num_dofs() << ", max Newton iterations " << iters << '\n'
            << "max_n ||U^n||_L2 " << sim.max_l2_norm << '\n';
  if (problem.exact) {
    std::cout << "L2 error at T " << l2_error(mesh, state, *problem.exact, config.final_time(),
                                              opts.error_degree(problem.dim))
              << '\n';
  }

  if (!a.dump_solution.empty()) {
    auto out = open_output(a.dump_solution);
    out << (problem.dim == 1 ? "node_index,x,value\n" : "node_index,x,y,value\n");
    out << std::setprecision(17);
    for (std::size_t i = 0; i < mesh.nodes.size(); ++i) {
      const auto d = mesh.interior_index[i];
      const double v = d == kBoundaryNode ? 0.0 : state[static_cast<std::size_t>(d)];
      out << i << ',' << mesh.nodes[i][0];
      if (problem.dim == 2) out << ',' << mesh.nodes[i][1];
      out << ',' << v << '\n';
    }
  }
  if (!a.dump_mesh.empty()) {
    auto out = open_output(a.dump_mesh);
    dump_mesh(mesh, out);
  }
  return 0;
}

int verify_all() {
  bool ok = true;
  for (const auto& c : verify::run_all()) {
    ok = ok && c.passed;
    std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << "  [worst " << std::setprecision(4) << c.measured
              << ", limit " << c.tolerance << "]";
    if (!c.detail.empty()) std::cout << "  at " << c.detail;
    std::cout << '\n';
  }
  return ok ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fractional Crank-Nicolson Galerkin solver for time-fractional nonlinear diffusion"};
  app.require_subcommand(1);
  // subcommands inherit this; a short -h would collide with run --h
  app.set_help_flag("--help", "print this help and exit");

  StudyArgs sa;
  auto* s = app.add_subcommand("study", "convergence study on the standard refinement grid");
  s->add_option("--problem", sa.problem, "fisher1d, huxley2d or nonsmooth1d")->required();
  s->add_option("--alpha", sa.alpha, "fractional order in (0, 1)")->required();
  s->add_option("--axis", sa.axis, "spatial or temporal");
  s->add_option("--levels", sa.levels, "number of refinement levels");
  s->add_option("--out", sa.out, "CSV output path (stdout if omitted)");
  s->add_flag("--full", sa.full, "use the fine published meshes for temporal studies");
  s->add_option("--config", sa.config, "key = value overrides");

  RunArgs ra;
  auto* r = app.add_subcommand("run", "single simulation to the final time");
  r->add_option("--problem", ra.problem, "fisher1d, huxley2d or nonsmooth1d")->required();
  r->add_option("--alpha", ra.alpha, "fractional order in (0, 1)")->required();
  r->add_option("--h", ra.h, "mesh size, e.g. 1/32");
  r->add_option("--dt", ra.dt, "time step, e.g. 1e-3 or 1/64");
  r->add_option("--dump-solution", ra.dump_solution, "write node_index,x[,y],value at the final time");
  r->add_option("--dump-mesh", ra.dump_mesh, "write nodes and elements");
  r->add_option("--config", ra.config, "key = value overrides");

  app.add_subcommand("verify", "run the property and oracle checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (s->parsed()) return study(sa);
    if (r->parsed()) return run(ra);
    return verify_all();
  } catch (const InvalidInput& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const SolverFailure& e) {
    std::cerr << "solver failure: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
