#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "fraccn/problems.hpp"
#include "fraccn/verify.hpp"

using namespace fraccn;

TEST(Problems, DerivativeMatchesFiniteDifference) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  const double eps = 1e-6;
  for (const auto& name : problem_names()) {
    const auto p = make_problem(name, 0.5);
    for (int k = 0; k < 200; ++k) {
      const double x = u(rng);
      const double fd = (p.f(x + eps) - p.f(x - eps)) / (2 * eps);
      EXPECT_LT(std::abs(p.f_prime(x) - fd), 1e-6) << name << " at " << x;
    }
  }
}

TEST(Problems, ExactSolutionsVanishInitiallyAndOnBoundary) {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (const auto& p : {fisher_1d(0.3), huxley_2d(0.7)}) {
    for (int k = 0; k < 50; ++k) {
      const Point x{unit(rng), p.dim == 2 ? unit(rng) : 0.0};
      const double t = unit(rng);
      EXPECT_EQ((*p.exact)(x, 0.0), 0.0);
      EXPECT_NEAR((*p.exact)(Point{0.0, x[1]}, t), 0.0, 1e-15);
      EXPECT_NEAR((*p.exact)(Point{1.0, x[1]}, t), 0.0, 1e-15);
      if (p.dim == 2) {
        EXPECT_NEAR((*p.exact)(Point{x[0], 0.0}, t), 0.0, 1e-15);
        EXPECT_NEAR((*p.exact)(Point{x[0], 1.0}, t), 0.0, 1e-15);
      }
    }
  }
}

TEST(Fisher, Values) {
  const auto p = fisher_1d(0.4);
  EXPECT_EQ(p.dim, 1);
  EXPECT_NEAR((*p.exact)(Point{0.25, 0.0}, 1.0), 1.0, 1e-15);
  EXPECT_EQ(p.f(0.5), 0.25);
  EXPECT_EQ(p.f_prime(0.0), 1.0);
}

TEST(Huxley, Roots) {
  const auto p = huxley_2d(0.6);
  EXPECT_EQ(p.dim, 2);
  EXPECT_EQ(p.f(0.0), 0.0);
  EXPECT_EQ(p.f(1.0), 0.0);
}

TEST(Nonsmooth, Values) {
  const auto p = nonsmooth_1d(0.4);
  EXPECT_EQ(p.f(0.0), 5.0);
  EXPECT_EQ(p.f_prime(1.0), 5.0);
  EXPECT_EQ(p.f(-1.0), 5.0);
  EXPECT_FALSE(p.exact.has_value());
  EXPECT_EQ(p.g(Point{0.3, 0.0}, 0.5), 0.0);
}

TEST(Problems, RejectBadOrderAndName) {
  EXPECT_THROW(fisher_1d(1.0), InvalidInput);
  EXPECT_THROW(huxley_2d(0.0), InvalidInput);
  EXPECT_THROW(nonsmooth_1d(-0.5), InvalidInput);
  EXPECT_THROW(make_problem("burgers", 0.5), InvalidInput);
}

TEST(CaputoOracle, PowerFunction) {
  // Caputo t^p = Gamma(p+1)/Gamma(p+1-a) t^{p-a}
  for (double a : {0.2, 0.5, 0.9})
    for (double p : {1.0, 3.0, 4.0}) {
      const double t = 0.7;
      const double exact = std::tgamma(p + 1) / std::tgamma(p + 1 - a) * std::pow(t, p - a);
      const double num = verify::oracle::caputo([p](double s) { return p * std::pow(s, p - 1); }, t, a);
      EXPECT_NEAR(num, exact, 1e-10 * exact) << "alpha " << a << ", p " << p;
    }
}

TEST(Sources, ConsistentWithExactSolutions) {
  std::mt19937_64 rng(14);
  std::uniform_real_distribution<double> unit(0.0, 1.0), order(0.1, 0.9);
  for (int k = 0; k < 100; ++k) {
    const double t = 0.02 + 0.98 * unit(rng);
    const auto p1 = fisher_1d(order(rng));
    EXPECT_LT(std::abs(verify::oracle::pde_residual(p1, Point{unit(rng), 0.0}, t)), 1e-6);
    const auto p2 = huxley_2d(order(rng));
    EXPECT_LT(std::abs(verify::oracle::pde_residual(p2, Point{unit(rng), unit(rng)}, t)), 1e-6);
  }
}
