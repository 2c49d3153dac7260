#pragma once

// Self-check suite run by `shiftbp verify`. Every item is a randomized or
// closed-form property of the law at hand; checks that need gamma are
// reported as skipped outside the supercritical regime.

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "shiftbp/construct.hpp"
#include "shiftbp/genfun.hpp"
#include "shiftbp/law.hpp"
#include "shiftbp/roots.hpp"

namespace shiftbp {

enum class CheckStatus { Pass, Fail, Skipped };

inline const char* to_string(CheckStatus s) {
  switch (s) {
    case CheckStatus::Pass: return "pass";
    case CheckStatus::Fail: return "fail";
    default: return "skipped";
  }
}

struct CheckItem {
  std::string name;
  CheckStatus status = CheckStatus::Pass;
  std::string detail;
};

struct VerifyReport {
  std::vector<CheckItem> items;

  bool failed() const {
    return std::any_of(items.begin(), items.end(), [](const CheckItem& c) { return c.status == CheckStatus::Fail; });
  }
};

struct VerifyOptions {
  int cases = 100;
  std::uint64_t seed = 20240611;
  double joffe_tol = 1e-8;
};

// Head coordinates of a pinned-tail fixed point by plain Jacobi sweeps
// u_i <- T^(i)(u) from u = 0 (monotone increasing iterates). `tail` holds the
// pinned coordinates that follow the head.
inline std::vector<double> picard_head(const OffspringLaw& law, std::size_t depth, const std::vector<double>& tail,
                                       int max_sweeps = 200000) {
  const auto K = static_cast<std::size_t>(law.max_displacement());
  std::vector<double> u(depth + tail.size(), 0.0), next;
  std::copy(tail.begin(), tail.end(), u.begin() + static_cast<std::ptrdiff_t>(depth));
  std::vector<double> w(K);
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    next = u;
    double change = 0.0;
    for (std::size_t i = 0; i < depth; ++i) {
      for (std::size_t t = 0; t < K; ++t) w[t] = u[i + t];
      next[i] = T1(law, w);
      change = std::max(change, std::abs(next[i] - u[i]));
    }
    u.swap(next);
    if (change <= 1e-16) break;
  }
  u.resize(depth);
  return u;
}

namespace detail {

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

}  // namespace detail

inline VerifyReport run_verify(const OffspringLaw& law, const MomentSummary& s, VerifyOptions opt = {}) {
  VerifyReport rep;
  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const auto K = static_cast<std::size_t>(s.K());
  const bool super = s.supercritical();
  auto add = [&](std::string name, bool ok, std::string detail) {
    rep.items.push_back({std::move(name), ok ? CheckStatus::Pass : CheckStatus::Fail, std::move(detail)});
  };
  auto skip = [&](std::string name) {
    rep.items.push_back({std::move(name), CheckStatus::Skipped, "requires M > 1"});
  };

  {
    const auto ar = check_assumptions(law, s);
    add("a1_fast_matches_oracle", ar.a1 == ar.a1_oracle, ar.a1 ? "M1>0 and M2>0" : ar.a1_witness);
  }

  {
    double worst = 0.0;
    for (int c = 0; c < opt.cases; ++c) {
      std::vector<double> u(K);
      for (auto& x : u) x = unif(rng);
      worst = std::max(worst, joffe_identity_check(law, s, u, opt.joffe_tol).max_deviation);
    }
    add("joffe_identity", worst <= opt.joffe_tol, "max deviation " + detail::fmt(worst));
  }

  const RootResult q = solve_q(s);
  if (super)
    add("q_residual", q.residual <= 1e-12 && q.value > 0.0 && q.value < 1.0,
        "q = " + detail::fmt(q.value) + ", |F0(q)-q| = " + detail::fmt(q.residual));
  else
    add("q_residual", q.value == 1.0, "q = 1 outside the supercritical regime");

  if (const auto g = solve_gamma(s))
    add("gamma_residual", g->residual <= 1e-12,
        "gamma = " + detail::fmt(g->value) + ", |G(gamma)-1| = " + detail::fmt(g->residual));
  else
    skip("gamma_residual");

  {
    int bad = 0;
    double worst = 0.0;
    for (int c = 0; c < opt.cases; ++c) {
      std::vector<double> h(K + 8);
      h[0] = 1e-6 + unif(rng) * (1.0 - 1e-6);
      for (std::size_t j = 1; j < h.size(); ++j) h[j] = h[j - 1] * (0.3 + 0.7 * unif(rng));
      const UVector u(h, 0.3 + 0.7 * unif(rng));
      for (std::size_t i = 1; i <= h.size(); ++i) {
        const double excess = eval_T(law, u, i) - s.M * u(i);
        worst = std::max(worst, excess);
        if (excess > 1e-15 + 1e-12 * u(i)) ++bad;
      }
    }
    add("domination", bad == 0, std::to_string(bad) + " violations, max T-Mu " + detail::fmt(worst));
  }

  {
    int bad = 0;
    for (int c = 0; c < opt.cases; ++c) {
      std::vector<double> a(K + 4), b(K + 4);
      for (std::size_t j = 0; j < a.size(); ++j) {
        a[j] = unif(rng);
        b[j] = std::min(1.0, a[j] + 0.2 * unif(rng));
      }
      const UVector ua(a, 1.0), ub(b, 1.0);
      for (std::size_t i = 1; i <= a.size(); ++i)
        if (eval_T(law, ua, i) > eval_T(law, ub, i) + 1e-15) ++bad;
    }
    add("T_monotone", bad == 0, std::to_string(bad) + " violations");
  }

  if (s.M1() < 1.0) {
    int bad = 0;
    for (int c = 0; c < opt.cases; ++c) {
      std::vector<double> lo(K > 1 ? K - 1 : 1), hi(lo.size());
      for (std::size_t j = 0; j < lo.size(); ++j) {
        lo[j] = 0.9 * unif(rng);
        hi[j] = lo[j] + (j == 0 ? 1e-3 + 0.099 * unif(rng) : 0.1 * unif(rng));
      }
      const double rl = solve_prepend(law, lo).value, rh = solve_prepend(law, hi).value;
      const bool strict = K >= 2 && s.M_at(2) > 0.0;
      if (strict ? !(rh > rl) : !(rh >= rl)) ++bad;
    }
    add("prepend_monotone", bad == 0, std::to_string(bad) + " violations");

    double worst = 0.0;
    for (int c = 0; c < opt.cases; ++c) {
      std::vector<double> tail(K > 1 ? K - 1 : 1);
      for (auto& x : tail) x = unif(rng);
      const double b = solve_prepend(law, tail).value;
      std::vector<double> w(K);
      std::copy_n(tail.begin(), K - 1, w.begin() + 1);
      double u = 0.0;
      for (int it = 0; it < 1'000'000; ++it) {
        w[0] = u;
        const double nu = T1(law, w);
        if (std::abs(nu - u) <= 1e-17) {
          u = nu;
          break;
        }
        u = nu;
      }
      worst = std::max(worst, std::abs(u - b));
    }
    add("prepend_iteration_vs_bisection", worst <= 1e-11, "max gap " + detail::fmt(worst));
  }

  if (!super) {
    for (const char* n : {"eta_ratio_inverse_gamma", "residual_decay_gamma2", "ladder_vs_picard"}) skip(n);
    return rep;
  }

  const double gamma = require_gamma(s).value;
  const TailSeed seed = default_seed(s);
  {
    double prev = std::numeric_limits<double>::infinity();
    bool mono = true;
    std::string d;
    for (std::size_t n : {50u, 100u, 200u}) {
      const double dev = std::abs(eta1(law, seed, n) / seed.x(n) - 1.0 / gamma);
      if (dev > prev && dev > 1e-12) mono = false;
      prev = dev;
      d += "n=" + std::to_string(n) + ":" + detail::fmt(dev) + " ";
    }
    add("eta_ratio_inverse_gamma", mono && prev <= 1e-3, d);
  }

  {
    int bad = 0;
    const double one_minus_q = 1.0 - q.value;
    for (int c = 0; c < opt.cases; ++c) {
      const double A = one_minus_q * (0.05 + 0.9 * unif(rng));
      const auto j = static_cast<std::size_t>(std::ceil(std::log(1e-4 / A) / std::log(gamma))) + 1;
      const UVector u = UVector::geometric(A, gamma, j + K + 4);
      const double r0 = u(j) - eval_T(law, u, j), r1 = u(j + 1) - eval_T(law, u, j + 1);
      if (!(std::abs(r1 / r0 - gamma * gamma) <= 1e-3 * gamma * gamma)) ++bad;
    }
    add("residual_decay_gamma2", bad == 0, std::to_string(bad) + " violations");
  }

  {
    const std::size_t depth = 12, n = 30;
    const LadderState st = eta_ladder(law, s, seed, n, depth);
    std::vector<double> tail(K + 2);
    for (std::size_t t = 0; t < tail.size(); ++t) tail[t] = seed.x(n + t);
    const auto pic = picard_head(law, depth, tail);
    double worst = 0.0;
    for (std::size_t i = 0; i < depth; ++i) worst = std::max(worst, std::abs(pic[i] - st.eta[depth - 1 - i]));
    add("ladder_vs_picard", worst <= 1e-9, "max gap " + detail::fmt(worst));
  }
  return rep;
}

}  // namespace shiftbp
