#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "shiftbp/genfun.hpp"

using namespace shiftbp;

TEST(UVector, ClosureAndValidation) {
  const auto u = UVector::geometric(0.1, 0.8, 5);
  EXPECT_EQ(u.size(), 5u);
  EXPECT_DOUBLE_EQ(u(1), 0.1);
  EXPECT_NEAR(u(5), 0.1 * std::pow(0.8, 4), 1e-18);
  EXPECT_NEAR(u(9), 0.1 * std::pow(0.8, 8), 1e-18);
  EXPECT_THROW(UVector({0.5}, 0.0), std::invalid_argument);
  EXPECT_THROW(UVector({1.5}, 0.5), std::invalid_argument);
  EXPECT_THROW(UVector({}, 0.5), std::invalid_argument);
  const auto c = UVector::constant(0.4, 3);
  EXPECT_EQ(c(100), 0.4);
  EXPECT_EQ(u.prepended(0.2)(2), 0.1);
  EXPECT_EQ(u.shifted_left()(1), u(2));
  EXPECT_EQ(u.window(4, 3), (std::vector<double>{u(4), u(5), u(6)}));
}

TEST(EvalF1, Examples) {
  const auto law = oracle::lstar();
  EXPECT_DOUBLE_EQ(eval_F1(law, std::vector<double>{1, 1}), 1.0);
  EXPECT_DOUBLE_EQ(eval_F1(law, std::vector<double>{0, 0}), 0.3);
  EXPECT_NEAR(eval_F1(law, std::vector<double>{0.6, 0.6}), 0.6, 1e-15);
  EXPECT_THROW(eval_F1(law, std::vector<double>{1.0}), std::invalid_argument);
}

TEST(EvalT, Examples) {
  const auto law = oracle::lstar();
  const auto c = UVector::constant(0.4, 10), z = UVector::constant(0.0, 10);
  for (std::size_t i : {1u, 5u, 50u}) {
    EXPECT_NEAR(eval_T(law, c, i), 0.4, 1e-15);
    EXPECT_EQ(eval_T(law, z, i), 0.0);
  }
  const UVector v({0.3, 0.11875, 0.1}, 0.5);
  EXPECT_NEAR(eval_T(law, v, 2), 0.11875, 1e-15);
}

TEST(EvalT, MatchesSpaceOracle) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (int c = 0; c < 50; ++c) {
    const auto law = oracle::random_law(rng, 5);
    std::vector<double> h(12);
    for (auto& x : h) x = u01(rng);
    const UVector u(h, 1.0);
    for (std::size_t i = 1; i + law.max_displacement() <= 13; ++i)
      EXPECT_NEAR(eval_T(law, u, i), oracle::T(law, h, i - 1), 1e-14);
  }
}

TEST(Residuals, ConstantFixedPoint) {
  const auto r = residuals(oracle::lstar(), UVector::constant(0.4, 40));
  EXPECT_EQ(r.res.size(), 38u);
  EXPECT_LE(r.sup_window, 1e-15);
}

// res = u - T(u); for L* on a geometric seed with ratio 0.8 the linear terms
// cancel and res_j = +u_{j+1}^2 / 2. That cancellation leaves a rounding floor
// of a few ulps of u_j, which dominates once u_j is small.
TEST(Residuals, GeometricSeedQuadraticRemainder) {
  const auto law = oracle::lstar();
  const auto u = UVector::geometric(0.1, 0.8, 60);
  const auto r = residuals(law, u);
  double sq = 0.0;
  for (std::size_t j = 1; j <= r.res.size(); ++j) {
    const double uj = 0.1 * std::pow(0.8, static_cast<double>(j - 1));
    const double expect = 0.5 * std::pow(0.8 * uj, 2);
    EXPECT_NEAR(r.res[j - 1], expect, 1e-13 * expect + 8.0 * std::numeric_limits<double>::epsilon() * uj) << j;
    sq += r.res[j - 1] * r.res[j - 1];
  }
  EXPECT_NEAR(r.l2_window, std::sqrt(sq), 1e-18);
  EXPECT_GT(r.tail_estimate, 0.0);
  EXPECT_LT(r.tail_estimate, r.res.back());
}

TEST(Residuals, NeedsHeadLongerThanK) {
  EXPECT_THROW(residuals(oracle::lstar(), UVector::constant(0.1, 2)), std::invalid_argument);
}

TEST(JoffeE, Examples) {
  const auto law = oracle::lstar();
  const auto s = moments(law);
  EXPECT_NEAR(joffe_E(law, s, 1, 1, std::vector<double>{0.3}), 0.0, 1e-12);
  EXPECT_NEAR(joffe_E(law, s, 2, 2, std::vector<double>{0.7, 0.1}), 0.1, 1e-10);
  EXPECT_EQ(joffe_E(law, s, 2, 1, std::vector<double>{0.7, 0.1}), 0.0);
  EXPECT_THROW(joffe_E(law, s, 2, 3, std::vector<double>{0.1, 0.1}), std::invalid_argument);
}

TEST(JoffeIdentity, Examples) {
  const auto law = oracle::lstar();
  const auto s = moments(law);
  const auto a = joffe_identity_check(law, s, std::vector<double>{0.2, 0.1}, 1e-8);
  EXPECT_TRUE(a.pass);
  EXPECT_LE(a.max_deviation, 1e-10);
  const auto z = joffe_identity_check(law, s, std::vector<double>{0.0, 0.0}, 1e-8);
  EXPECT_TRUE(z.pass);
  EXPECT_EQ(z.max_deviation, 0.0);
  EXPECT_TRUE(joffe_identity_check(law, s, std::vector<double>{0.4, 0.4}, 1e-8).pass);
}

TEST(JoffeIdentity, RandomLaws) {
  std::mt19937_64 rng(22);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (int l = 0; l < 20; ++l) {
    const auto law = oracle::random_law(rng, 4);
    const auto s = moments(law);
    for (int c = 0; c < 20; ++c) {
      std::vector<double> u(static_cast<std::size_t>(law.max_displacement()));
      for (auto& x : u) x = u01(rng);
      const auto r = joffe_identity_check(law, s, u, 1e-8);
      EXPECT_TRUE(r.pass) << serialize(law) << " dev " << r.max_deviation;
    }
  }
}

TEST(Quadrature, SimpsonExactOnCubics) {
  EXPECT_NEAR(adaptive_simpson([](double x) { return x * x * x; }, 0.0, 1.0), 0.25, 1e-15);
}

TEST(Quadrature, ThrowsWhenDepthExhausted) {
  SimpsonOptions o;
  o.abs_tol = 1e-14;
  o.max_depth = 2;
  EXPECT_THROW(adaptive_simpson([](double x) { return std::sqrt(x); }, 0.0, 1.0, o), QuadratureError);
}

TEST(RatioDiag, Examples) {
  const auto s = moments(oracle::lstar());
  const auto d = ratio_diag(s, UVector::geometric(0.3, 0.8, 30), 1, 20);
  for (std::size_t i = 1; i <= 20; ++i) {
    EXPECT_NEAR(d.alpha_at(i), 0.8, 1e-14);
    EXPECT_NEAR(d.U_at(i), 1.0, 1e-14);
  }
  const auto c = ratio_diag(s, UVector::constant(0.2, 10), 1, 5);
  for (std::size_t i = 1; i <= 5; ++i) {
    EXPECT_EQ(c.alpha_at(i), 1.0);
    EXPECT_NEAR(c.U_at(i), s.M, 1e-15);
  }
  EXPECT_THROW(ratio_diag(s, UVector::constant(0.0, 10), 1, 5), std::invalid_argument);
}

TEST(GenfunProperties, Domination) {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (int c = 0; c < 100; ++c) {
    const auto law = oracle::random_law(rng, 5);
    const auto s = moments(law);
    std::vector<double> h(12);
    h[0] = u01(rng);
    for (std::size_t j = 1; j < h.size(); ++j) h[j] = h[j - 1] * (0.2 + 0.8 * u01(rng));
    const UVector u(h, 0.2 + 0.8 * u01(rng));
    for (std::size_t i = 1; i <= h.size(); ++i) EXPECT_LE(eval_T(law, u, i), s.M * u(i) * (1 + 1e-12) + 1e-300);
  }
}

TEST(GenfunProperties, MonotoneAndSupWindowContinuity) {
  std::mt19937_64 rng(24);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (int c = 0; c < 100; ++c) {
    const auto law = oracle::random_law(rng, 5);
    const auto s = moments(law);
    const auto K = static_cast<std::size_t>(law.max_displacement());
    std::vector<double> a(10), b(10);
    for (std::size_t j = 0; j < a.size(); ++j) {
      a[j] = u01(rng);
      b[j] = std::min(1.0, a[j] + 0.3 * u01(rng));
    }
    const UVector ua(a, 1.0), ub(b, 1.0);
    for (std::size_t i = 1; i + K - 1 <= a.size(); ++i) {
      const double ta = eval_T(law, ua, i), tb = eval_T(law, ub, i);
      EXPECT_LE(ta, tb + 1e-15);
      double sup = 0.0;
      for (std::size_t j = i; j < i + K; ++j) sup = std::max(sup, std::abs(a[j - 1] - b[j - 1]));
      EXPECT_LE(std::abs(ta - tb), s.M * sup + 1e-15);
    }
  }
}

// T maps a geometric ratio-gamma seed to a strictly decreasing vector whose
// ratios approach gamma monotonically.
TEST(GenfunProperties, GammaClassPreserved) {
  std::mt19937_64 rng(25);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (int c = 0; c < 20; ++c) {
    const auto law = oracle::random_supercritical(rng, 4);
    const auto s = moments(law);
    const double gamma = require_gamma(s).value;
    const double q = solve_q(s).value;
    const auto u = UVector::geometric((1.0 - q) * (0.1 + 0.8 * u01(rng)), gamma, 80);
    std::vector<double> img(70);
    for (std::size_t i = 1; i <= img.size(); ++i) img[i - 1] = eval_T(law, u, i);
    double prev_gap = 1.0;
    for (std::size_t i = 0; i + 1 < img.size(); ++i) {
      EXPECT_LT(img[i + 1], img[i]);
      const double gap = std::abs(img[i + 1] / img[i] - gamma);
      if (gap > 1e-12) EXPECT_LE(gap, prev_gap * (1 + 1e-9)) << i;
      prev_gap = gap;
    }
  }
}

TEST(DiagnosticsCsv, Columns) {
  const auto law = oracle::lstar();
  std::ostringstream os;
  write_diagnostics_csv(os, law, moments(law), UVector::geometric(0.1, 0.8, 10));
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, "i,u_i,s_i,residual_i,alpha_i,U_i");
  int rows = 0;
  while (std::getline(is, line)) ++rows;
  EXPECT_EQ(rows, 8);
}
