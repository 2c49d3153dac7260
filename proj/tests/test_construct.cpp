#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "shiftbp/construct.hpp"

using namespace shiftbp;

namespace {

struct LStarFixture : ::testing::Test {
  static const Candidate& base() {
    static const Candidate c = [] {
      const auto law = oracle::lstar();
      return construct_fixed_point(law, moments(law));
    }();
    return c;
  }
  OffspringLaw law = oracle::lstar();
  MomentSummary s = moments(law);
};

double l2(const std::vector<double>& head, const TailSeed& seed, std::size_t m) {
  double sq = std::pow(seed.tail_norm(m), 2);
  for (double v : head) sq += v * v;
  return std::sqrt(sq);
}

}  // namespace

TEST_F(LStarFixture, EtaRatioApproachesInverseGamma) {
  const TailSeed seed{0.5, 0.8, 1};
  const auto st = eta_ladder(law, s, seed, 30, 1);
  EXPECT_NEAR(st.eta[0] / seed.x(30), 1.25, 1e-3);
  EXPECT_LE(st.residuals[0], 1e-13);
}

TEST_F(LStarFixture, LadderIncreasingAndDecreasingInN) {
  const TailSeed seed = default_seed(s);
  const std::size_t N0 = detect_N0(law, s, seed);
  for (std::size_t n = std::max<std::size_t>(N0, 5); n < N0 + 40; n += 7) {
    const auto a = eta_ladder(law, s, seed, n, 5), b = eta_ladder(law, s, seed, n + 1, 5);
    EXPECT_GT(a.eta[0], seed.x(n));
    for (std::size_t i = 1; i < 5; ++i) EXPECT_GT(a.eta[i], a.eta[i - 1]);
    for (std::size_t i = 0; i < 5; ++i) EXPECT_LT(b.eta[i], a.eta[i]);
    for (double r : a.residuals) EXPECT_LE(r, 1e-13);
  }
}

TEST_F(LStarFixture, DetectN0StableAndValid) {
  const TailSeed seed = default_seed(s);
  const std::size_t a = detect_N0(law, s, seed, 200), b = detect_N0(law, s, seed, 300);
  EXPECT_EQ(a, b);
  for (std::size_t n = a; n <= 200; ++n) EXPECT_GT(eta1(law, seed, n), seed.x(n)) << n;
}

TEST_F(LStarFixture, DetectN0NotFoundForAggressiveSeed) {
  const TailSeed seed{0.99, 0.8, 1};
  EXPECT_THROW(detect_N0(law, s, seed, 1), NotFound);
}

TEST(ConstructRegime, NonSupercriticalRefused) {
  for (const auto& law : {oracle::lsub(), oracle::critical()}) {
    const auto s = moments(law);
    const TailSeed seed{0.1, 0.5, 1};
    EXPECT_THROW(eta_ladder(law, s, seed, 10, 1), RegimeError);
    EXPECT_THROW(detect_N0(law, s, seed), RegimeError);
    EXPECT_THROW(lemma8_scan(law, s, seed), RegimeError);
    EXPECT_THROW(construct_fixed_point(law, s), RegimeError);
  }
}

TEST_F(LStarFixture, ScanNormsAndMonotonicity) {
  const TailSeed seed = default_seed(s);
  ScanParams p;
  p.m_max = 300;
  const auto r = lemma8_scan(law, s, seed, p);
  ASSERT_GE(r.crossings.size(), 10u);
  std::size_t prev_k = 0, prev_m = 0;
  for (const auto& c : r.crossings) {
    EXPECT_GT(c.norm, r.y0);
    EXPECT_LT(c.norm, r.y0 + 1.0);
    EXPECT_LE(c.norm_below, r.y0);
    EXPECT_GT(c.k, prev_k);
    EXPECT_GT(c.m, prev_m);
    prev_k = c.k;
    prev_m = c.m;
    EXPECT_NEAR(l2(c.head, seed, c.m), c.norm, 1e-14);
  }
  // ||y[k,m]|| increases in k at fixed m and decreases in m at fixed k.
  for (std::size_t m : {20u, 60u}) {
    const auto st = eta_ladder(law, s, seed, m, 30), st2 = eta_ladder(law, s, seed, m + 1, 30);
    for (std::size_t k = 1; k < 30; ++k) {
      const std::vector<double> hk(st.eta.begin(), st.eta.begin() + static_cast<std::ptrdiff_t>(k));
      const std::vector<double> hk1(st.eta.begin(), st.eta.begin() + static_cast<std::ptrdiff_t>(k + 1));
      const std::vector<double> next(st2.eta.begin(), st2.eta.begin() + static_cast<std::ptrdiff_t>(k));
      EXPECT_LT(l2(hk, seed, m), l2(hk1, seed, m));
      EXPECT_LT(l2(next, seed, m + 1), l2(hk, seed, m));
    }
  }
}

TEST_F(LStarFixture, ConvergedCandidate) {
  const Candidate& c = base();
  ASSERT_TRUE(c.converged);
  EXPECT_LE(c.sup_residual(), 1e-8);
  EXPECT_GT(c.u(1), 0.0);
  EXPECT_LT(c.u(1), 0.4);
  double d0 = 0.0, dq = 0.0;
  for (std::size_t j = 1; j <= c.u.size(); ++j) {
    d0 = std::max(d0, std::abs(c.u(j)));
    dq = std::max(dq, std::abs(c.u(j) - 0.4));
  }
  EXPECT_GE(d0, 0.01);
  EXPECT_GE(dq, 0.01);
  EXPECT_NEAR(c.u.tail_ratio(), 0.8, 1e-12);
}

TEST_F(LStarFixture, RatioAsymptoticsAndBounds) {
  const Candidate& c = base();
  const std::size_t n = c.window();
  const double lower = (1.0 - s.M1()) / (s.M - s.M1());
  EXPECT_NEAR(lower, 0.8, 1e-15);
  for (std::size_t i = 1; i <= n; ++i) {
    EXPECT_GE(c.ratio.alpha_at(i), lower - 1e-12) << i;
    EXPECT_LE(c.ratio.alpha_at(i), 1.0) << i;
  }
  for (std::size_t i = n / 2; i <= n; ++i) {
    EXPECT_NEAR(c.ratio.alpha_at(i), 0.8, 1e-3) << i;
    EXPECT_NEAR(c.ratio.U_at(i), 1.0, 1e-6) << i;
  }
}

// In s-space r = 1 - u: every coordinate is below 1 and sup r = 1.
TEST_F(LStarFixture, BoundedAwayFromExtinctionVectors) {
  const Candidate& c = base();
  for (std::size_t j = 1; j <= c.u.size(); ++j) EXPECT_GT(c.u(j), 0.0);  // r < 1
  EXPECT_GT(1.0 - c.u(c.u.size()), 1.0 - 1e-12);
}

TEST_F(LStarFixture, UnattainableToleranceIsReportedNotFaked) {
  ConstructParams p;
  p.conv_tol = 1e-30;
  p.scan.m_max = 200;
  const Candidate c = construct_fixed_point(law, s, p);
  EXPECT_FALSE(c.converged);
  EXPECT_FALSE(c.provenance.trace.empty());
}

TEST_F(LStarFixture, PrependFamily) {
  const Candidate& b = base();
  const auto f = family(law, s, b, 20, Direction::Prepend);
  ASSERT_EQ(f.members.size(), 20u);
  EXPECT_TRUE(f.all_ordered());
  double prev = b.u(1);
  for (const auto& m : f.members) {
    EXPECT_TRUE(m.converged);
    EXPECT_LE(m.sup_residual(), 1e-8);
    EXPECT_GT(m.u(1), prev);
    EXPECT_LT(m.u(1), 0.4);
    prev = m.u(1);
  }
}

TEST_F(LStarFixture, ShiftLeftAndInversePair) {
  const Candidate& b = base();
  const auto sh = family(law, s, b, 1, Direction::ShiftLeft);
  ASSERT_EQ(sh.members.size(), 1u);
  EXPECT_TRUE(sh.all_ordered());
  EXPECT_LE(sh.members[0].sup_residual(), 1e-8);
  for (std::size_t j = 1; j + 1 <= b.u.size(); ++j) EXPECT_EQ(sh.members[0].u(j), b.u(j + 1));

  const auto back = family(law, s, sh.members[0], 1, Direction::Prepend);
  for (std::size_t j = 1; j <= 64; ++j) EXPECT_NEAR(back.members[0].u(j), b.u(j), 1e-9) << j;
  const auto fwd = family(law, s, b, 1, Direction::Prepend);
  const auto undo = family(law, s, fwd.members[0], 1, Direction::ShiftLeft);
  for (std::size_t j = 1; j <= 64; ++j) EXPECT_EQ(undo.members[0].u(j), b.u(j));
}

TEST_F(LStarFixture, FamilyRequiresConvergedBase) {
  Candidate c = base();
  c.converged = false;
  EXPECT_THROW(family(law, s, c, 1, Direction::Prepend), ValidationError);
}

TEST(ConstructOracle, LadderMatchesPicard) {
  std::mt19937_64 rng(31);
  for (int l = 0; l < 10; ++l) {
    const auto law = oracle::random_supercritical(rng, 4);
    const auto s = moments(law);
    const TailSeed seed = default_seed(s);
    const std::size_t n = 25, depth = 12;
    const auto st = eta_ladder(law, s, seed, n, depth);
    std::vector<double> tail(static_cast<std::size_t>(law.max_displacement()) + 2);
    for (std::size_t t = 0; t < tail.size(); ++t) tail[t] = seed.x(n + t);
    const auto pic = oracle::picard(law, depth, tail);
    for (std::size_t i = 0; i < depth; ++i) EXPECT_NEAR(pic[i], st.eta[depth - 1 - i], 1e-9) << serialize(law);
  }
}

// Deeper heads amplify rounding geometrically, so there the two solvers are
// only compared through the equations they both claim to satisfy.
TEST(ConstructOracle, DeepLadderSolvesPinnedSystem) {
  std::mt19937_64 rng(31);
  for (int l = 0; l < 10; ++l) {
    const auto law = oracle::random_supercritical(rng, 4);
    const auto s = moments(law);
    const TailSeed seed = default_seed(s);
    const std::size_t n = 25, depth = 30;
    const auto st = eta_ladder(law, s, seed, n, depth);
    std::vector<double> u(st.eta.rbegin(), st.eta.rend());
    for (std::size_t t = 0; t < static_cast<std::size_t>(law.max_displacement()) + 2; ++t) u.push_back(seed.x(n + t));
    for (std::size_t i = 0; i < depth; ++i) {
      EXPECT_NEAR(u[i], oracle::T(law, u, i), 1e-14) << serialize(law);
      if (i + 1 < depth) EXPECT_GT(u[i], u[i + 1]);
    }
  }
}
