// Acceptance suite. Each criterion prints its individual checks followed by a
// single "CRITERION n: PASS|FAIL" line; the exit status is nonzero if any
// selected criterion fails.
//
//   acceptance [--criterion N] [--cache DIR]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fraccn/fraccn.hpp"

namespace {

using namespace fraccn;

struct Published {
  std::vector<double> errors; ///< may be empty when only rates are compared
  std::vector<double> rates;
};

// Printed values, keyed by problem, axis and order.
const std::map<std::string, Published>& tables() {
  static const std::map<std::string, Published> t{
      {"fisher1d/spatial/0.4", {{2.2133e-1, 5.7425e-2, 1.4472e-2, 3.6255e-3}, {1.9465, 1.9884, 1.9970}}},
      {"fisher1d/spatial/0.6", {{2.2030e-1, 5.7033e-2, 1.4365e-2, 3.5983e-3}, {1.9496, 1.9892, 1.9972}}},
      {"fisher1d/temporal/0.4", {{3.6934e-2, 9.7834e-3, 2.5125e-3, 6.3642e-4}, {1.9165, 1.9612, 1.9811}}},
      {"fisher1d/temporal/0.6", {{4.9862e-2, 1.3009e-2, 3.3145e-3, 8.3614e-4}, {1.9384, 1.9726, 1.9870}}},
      {"huxley2d/spatial/0.4", {{5.3226e-3, 1.3998e-3, 3.5447e-4, 8.8910e-5}, {1.9269, 1.9815, 1.9952}}},
      {"huxley2d/spatial/0.6", {{5.2790e-3, 1.3860e-3, 3.5079e-4, 8.7980e-5}, {1.9294, 1.9822, 1.9954}}},
      {"huxley2d/temporal/0.4", {{3.1544e-3, 8.2884e-4, 2.1292e-4, 5.4130e-5}, {1.9282, 1.9608, 1.9758}}},
      {"huxley2d/temporal/0.6", {{4.3171e-3, 1.1080e-3, 2.8199e-4, 7.1315e-5}, {1.9621, 1.9743, 1.9833}}},
      {"nonsmooth1d/spatial/0.4", {{5.2126e-3, 1.3412e-3, 3.3647e-4, 8.3254e-5}, {1.9585, 1.9949, 2.0149}}},
      {"nonsmooth1d/spatial/0.6", {{5.0108e-3, 1.2902e-3, 3.2370e-4, 8.0095e-5}, {1.9575, 1.9948, 2.0149}}},
      {"nonsmooth1d/temporal/0.4", {{5.3833e-4, 2.8059e-4, 1.4107e-4, 6.8939e-5}, {0.9400, 0.9921, 1.0330}}},
      {"nonsmooth1d/temporal/0.6", {{3.5785e-4, 2.0541e-4, 1.0762e-4, 5.3618e-5}, {0.8009, 0.9325, 1.0052}}},
  };
  return t;
}

// Upper bounds for max_n ||U^n||_L2, pinned from the first reference run of
// every table configuration (observed 0.7065, 0.03027, 0.4922).
const std::map<std::string, double> kNormBound{
    {"fisher1d", 0.71}, {"huxley2d", 0.0305}, {"nonsmooth1d", 0.50}};

class Criterion {
public:
  Criterion(int id, std::string title, double time_limit_s)
      : id_(id), title_(std::move(title)), limit_(time_limit_s), start_(std::chrono::steady_clock::now()) {
    std::printf("== criterion %d: %s\n", id_, title_.c_str());
  }

  void check(bool ok, const std::string& line) {
    std::printf("  [%s] %s\n", ok ? "pass" : "FAIL", line.c_str());
    ok_ = ok_ && ok;
    ++total_;
    failed_ += ok ? 0 : 1;
  }

  bool finish() {
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    char buf[128];
    std::snprintf(buf, sizeof buf, "runtime %.1f s (limit %.0f s)", secs, limit_);
    check(secs <= limit_, buf);
    std::printf("CRITERION %d: %s  %s (%d of %d checks failed)\n", id_, ok_ ? "PASS" : "FAIL", title_.c_str(),
                failed_, total_);
    std::fflush(stdout);
    return ok_;
  }

private:
  int id_;
  std::string title_;
  double limit_;
  std::chrono::steady_clock::time_point start_;
  bool ok_ = true;
  int total_ = 0, failed_ = 0;
};

std::string fmt(const char* f, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

class Runner {
public:
  explicit Runner(StudyOptions opts) : opts_(std::move(opts)) {}

  const ConvergenceReport& study(const std::string& problem, double alpha, Axis axis, bool full = false) {
    const auto key = problem + "/" + to_string(axis) + "/" + fmt("%.1f", alpha) + (full ? "/full" : "");
    auto it = cache_.find(key);
    if (it == cache_.end()) {
      const auto grid = standard_grid(problem, axis, 4, full);
      it = cache_.emplace(key, run_study(problem, alpha, axis, grid, opts_)).first;
    }
    return it->second;
  }

  std::vector<const ConvergenceReport*> all_reports() const {
    std::vector<const ConvergenceReport*> out;
    for (const auto& [k, r] : cache_) out.push_back(&r);
    return out;
  }

private:
  StudyOptions opts_;
  std::map<std::string, ConvergenceReport> cache_;
};

const Published& published(const std::string& problem, Axis axis, double alpha) {
  return tables().at(problem + "/" + to_string(axis) + "/" + fmt("%.1f", alpha));
}

std::string label(const ConvergenceReport& r, std::size_t k) {
  return r.axis == Axis::spatial ? fmt("%s a=%.1f h=1/%.0f", r.problem.c_str(), r.alpha, 1.0 / r.rows[k].h)
                                 : fmt("%s a=%.1f dt=1/%.0f", r.problem.c_str(), r.alpha, 1.0 / r.rows[k].dt);
}

void compare_rates(Criterion& c, const ConvergenceReport& r, double tol) {
  const auto& p = published(r.problem, r.axis, r.alpha);
  for (std::size_t k = 1; k < r.rows.size(); ++k) {
    const double got = *r.rows[k].rate, want = p.rates[k - 1];
    c.check(std::abs(got - want) <= tol,
            fmt("%s rate %.4f vs %.4f (|diff| %.4f, tol %.2f)", label(r, k).c_str(), got, want,
                std::abs(got - want), tol));
  }
}

void compare_errors(Criterion& c, const ConvergenceReport& r, double rel_tol) {
  const auto& p = published(r.problem, r.axis, r.alpha);
  for (std::size_t k = 0; k < r.rows.size(); ++k) {
    const double got = r.rows[k].l2_error, want = p.errors[k];
    const double rel = std::abs(got - want) / want;
    c.check(rel <= rel_tol, fmt("%s error %.4e vs %.4e (rel %.1f%%, tol %.0f%%)", label(r, k).c_str(), got, want,
                                100 * rel, 100 * rel_tol));
  }
}

bool criterion1(Runner& run) {
  Criterion c(1, "Example 1 spatial table, errors within 2% and rates within 0.02", 120);
  for (double a : {0.4, 0.6}) {
    const auto& r = run.study("fisher1d", a, Axis::spatial);
    compare_errors(c, r, 0.02);
    compare_rates(c, r, 0.02);
  }
  return c.finish();
}

bool criterion2(Runner& run) {
  Criterion c(2, "Example 1 temporal table, rates within 0.05 at h=1/512, errors within 2% at h=2e-4", 300);
  for (double a : {0.4, 0.6}) compare_rates(c, run.study("fisher1d", a, Axis::temporal), 0.05);
  for (double a : {0.4, 0.6}) compare_errors(c, run.study("fisher1d", a, Axis::temporal, true), 0.02);
  return c.finish();
}

bool criterion3(Runner& run) {
  Criterion c(3, "Example 2 tables, spatial rates within 0.02, temporal rates within 0.07 at h=1/64", 900);
  for (double a : {0.4, 0.6}) compare_rates(c, run.study("huxley2d", a, Axis::spatial), 0.02);
  for (double a : {0.4, 0.6}) compare_rates(c, run.study("huxley2d", a, Axis::temporal), 0.07);
  return c.finish();
}

bool criterion4(Runner& run) {
  Criterion c(4, "Example 3 tables against the cached reference, spatial 0.05, temporal 0.07", 600);
  for (double a : {0.4, 0.6}) compare_rates(c, run.study("nonsmooth1d", a, Axis::spatial), 0.05);
  for (double a : {0.4, 0.6}) compare_rates(c, run.study("nonsmooth1d", a, Axis::temporal), 0.07);
  return c.finish();
}

bool criterion5() {
  Criterion c(5, "property suite", 180);
  for (const auto& v : verify::run_all()) {
    c.check(v.passed, fmt("%s: worst %.3g, limit %.3g%s%s", v.name.c_str(), v.measured, v.tolerance,
                          v.detail.empty() ? "" : " at ", v.detail.c_str()));
  }
  return c.finish();
}

bool criterion6() {
  Criterion c(6, "t^3 discrete derivative at the shifted point, rate 2.0 +- 0.1", 60);
  for (double a : {0.2, 0.4, 0.6, 0.8}) {
    std::vector<double> err;
    for (int p = 4; p <= 9; ++p) {
      const int n = 1 << p;
      const double dt = 1.0 / n;
      const auto t = gl_weights(a, n);
      std::vector<double> u(n + 1);
      for (int i = 0; i <= n; ++i) u[i] = std::pow(i * dt, 3);
      const double t_eval = 1.0 - 0.5 * a * dt;
      const double exact = 6.0 / std::tgamma(4.0 - a) * std::pow(t_eval, 3.0 - a);
      err.push_back(std::abs(discrete_frac_deriv(u, t, dt) - exact));
    }
    for (std::size_t k = 1; k < err.size(); ++k) {
      const double rate = std::log2(err[k - 1] / err[k]);
      c.check(std::abs(rate - 2.0) <= 0.1,
              fmt("a=%.1f dt=2^-%zu error %.3e rate %.4f", a, k + 4, err[k], rate));
    }
  }
  return c.finish();
}

bool criterion7(Runner& run) {
  Criterion c(7, "max_n ||U^n||_L2 below the pinned bound for every table run", 900);
  for (const char* p : {"fisher1d", "huxley2d", "nonsmooth1d"})
    for (double a : {0.4, 0.6})
      for (Axis axis : {Axis::spatial, Axis::temporal}) run.study(p, a, axis);
  for (double a : {0.4, 0.6}) run.study("fisher1d", a, Axis::temporal, true);
  for (const auto* r : run.all_reports()) {
    const double bound = kNormBound.at(r->problem);
    for (std::size_t k = 0; k < r->rows.size(); ++k) {
      c.check(r->rows[k].max_l2_norm <= bound, fmt("%s %s max norm %.5f <= %.4f", label(*r, k).c_str(),
                                                   to_string(r->axis).c_str(), r->rows[k].max_l2_norm, bound));
    }
  }
  return c.finish();
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  int only = 0;
  std::string cache = ".fraccn_cache";
  app.add_option("--criterion", only, "run a single criterion (1-7); 0 runs all");
  app.add_option("--cache", cache, "reference solution cache directory");
  CLI11_PARSE(app, argc, argv);

  StudyOptions opts;
  opts.cache_dir = cache;
  Runner run(opts);
  const std::vector<std::function<bool()>> criteria{
      [&] { return criterion1(run); }, [&] { return criterion2(run); }, [&] { return criterion3(run); },
      [&] { return criterion4(run); }, [] { return criterion5(); },      [] { return criterion6(); },
      [&] { return criterion7(run); }};
  if (only < 0 || only > static_cast<int>(criteria.size())) {
    std::fprintf(stderr, "criterion must lie in [0, %zu]\n", criteria.size());
    return 2;
  }
  bool ok = true;
  try {
    for (std::size_t i = 0; i < criteria.size(); ++i)
      if (only == 0 || only == static_cast<int>(i + 1)) ok = criteria[i]() && ok;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "acceptance aborted: %s\n", e.what());
    return 1;
  }
  return ok ? 0 : 1;
}
