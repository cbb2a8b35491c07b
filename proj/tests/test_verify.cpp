#include <gtest/gtest.h>

#include "fraccn/verify.hpp"

using namespace fraccn;

TEST(Verify, EveryCheckPasses) {
  for (const auto& c : verify::run_all()) {
    EXPECT_TRUE(c.passed) << c.name << ": worst " << c.measured << " (limit " << c.tolerance << ") " << c.detail;
  }
}

TEST(Verify, CoercivityMarginIsNonnegative) {
  EXPECT_GE(verify::coercivity(99, 300).measured, -1e-12);
}

TEST(Verify, WeightSumBoundsAreTight) {
  // the largest ratio approaches but stays below one
  const auto c = verify::weight_sum_bounds();
  EXPECT_GT(c.measured, 0.5);
  EXPECT_LE(c.measured, 1.0);
}

TEST(Verify, ClassicalOracleDetectsDifferentScheme) {
  // the independent integrator must disagree with a deliberately wrong source time
  const auto a = verify::oracle::crank_nicolson_1d(8, 0.1, 5, 0.5, [](double t) { return t; });
  const auto b = verify::oracle::crank_nicolson_1d(8, 0.1, 5, 0.5, [](double t) { return t + 0.05; });
  double diff = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) diff = std::max(diff, std::abs(a[i] - b[i]));
  EXPECT_GT(diff, 1e-6);
}

TEST(Verify, GronwallBoundWithMittagLeffler) {
  // a^n from D a^n = mu1 a^n + mu2 a^{n-1} + b with equality satisfies the
  // Mittag-Leffler bound for small dt
  const double alpha = 0.5, mu1 = 0.5, mu2 = 0.25, b = 1.0;
  const int n_steps = 200;
  const double dt = 1.0 / n_steps;
  const auto t = gl_weights(alpha, n_steps);
  std::vector<double> a(n_steps + 1, 0.0);
  const double s = std::pow(dt, -alpha);
  for (int n = 1; n <= n_steps; ++n) {
    double mem = 0.0;
    for (int j = 0; j < n; ++j) mem += t.w[n - j] * a[j];
    a[n] = (b + mu2 * a[n - 1] - s * mem) / (s - mu1);
    const double tn = n * dt;
    const double mu = mu1 + mu2 / alpha;
    const double bound = 2.0 * (std::pow(tn, alpha) / alpha * b) *
                         mittag_leffler(alpha, 2.0 * std::tgamma(alpha) * mu * std::pow(tn, alpha));
    ASSERT_LE(a[n], bound) << "n = " << n;
  }
}
