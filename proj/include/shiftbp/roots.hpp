#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "shiftbp/error.hpp"
#include "shiftbp/law.hpp"

namespace shiftbp {

struct RootResult {
  double value = 0.0;
  int iterations = 0;
  double bracket_width_final = 0.0;
  double residual = 0.0;  // |equation(value)|
};

struct BisectOptions {
  double width = 1e-14;  // relative to max(|endpoint|) once the bracket is away from 0
  int max_iterations = 200;
};

// Bisection for a function that is >= 0 at lo and <= 0 at hi with a single
// sign change in between. No derivatives are used.
template <class Fn>
RootResult bisect_decreasing(Fn&& f, double lo, double hi, BisectOptions opt = {}) {
  double flo = f(lo), fhi = f(hi);
  if (flo < 0.0 || fhi > 0.0) throw BracketError("bisection: root not bracketed");
  if (flo == 0.0) return {lo, 0, hi - lo, 0.0};
  if (fhi == 0.0) return {hi, 0, hi - lo, 0.0};
  int it = 0;
  while (it < opt.max_iterations) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (hi - lo <= opt.width * std::max(std::abs(lo), std::abs(hi))) break;
    ++it;
    const double fm = f(mid);
    if (fm == 0.0) {
      lo = hi = mid;
      break;
    }
    (fm > 0.0 ? lo : hi) = mid;
  }
  const double flo2 = std::abs(f(lo)), fhi2 = std::abs(f(hi));
  const double value = flo2 <= fhi2 ? lo : hi;
  return {value, it, hi - lo, std::min(flo2, fhi2)};
}

// Horner evaluation of sum_n c[n] s^n.
inline double polyval(std::span<const double> c, double s) {
  double v = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) v = v * s + *it;
  return v;
}

// Global extinction probability q: root of F0(s) = s in (0,1) when M > 1,
// otherwise 1.
inline RootResult solve_q(const MomentSummary& s) {
  if (!s.supercritical()) return {1.0, 0, 0.0, 0.0};
  // F0(s) - s is positive on [0,q) and negative on (q,1). At s = 1 it is
  // zero up to rounding, so the upper endpoint is pinned to the negative side.
  auto f = [&](double x) { return polyval(s.f0_coeffs, x) - x; };
  auto g = [&](double x) { return x >= 1.0 ? -std::numeric_limits<double>::min() : f(x); };
  RootResult r = bisect_decreasing(g, 0.0, 1.0);
  r.residual = std::abs(f(r.value));
  return r;
}

// G(s) = sum_i M_i s^{i-1}.
inline double G(const MomentSummary& s, double x) { return polyval(s.Mk, x); }

// Decay rate gamma: root of G = 1 in (0,1). Empty when M <= 1 (or M_1 >= 1),
// where gamma is undefined.
inline std::optional<RootResult> solve_gamma(const MomentSummary& s) {
  if (!s.supercritical() || !(s.M1() < 1.0)) return std::nullopt;
  auto f = [&](double x) { return 1.0 - G(s, x); };
  RootResult r = bisect_decreasing(f, 0.0, 1.0);
  r.residual = std::abs(f(r.value));
  return r;
}

inline RootResult require_gamma(const MomentSummary& s) {
  auto g = solve_gamma(s);
  if (!g) throw RegimeError("decay rate gamma undefined: law is not supercritical (M <= 1)");
  return *g;
}

// 1 - prod_k (1-u_k)^{c_k}, accurate when every u_k is tiny.
inline double survival_term(std::span<const int> counts, std::span<const double> u) {
  double log_s = 0.0;
  for (std::size_t k = 0; k < counts.size(); ++k)
    if (counts[k] != 0) log_s += counts[k] * std::log1p(-u[k]);
  return -std::expm1(log_s);
}

// T^(1)(u) = 1 - F^(1)(1 - u) on a window u_1..u_K of survival coordinates.
inline double T1(const OffspringLaw& law, std::span<const double> window) {
  double t = 0.0;
  for (const auto& e : law.entries())
    if (!e.is_zero()) t += e.prob * survival_term(e.counts, window);
  return t;
}

// Solves u = T^(1)(u, tail) for the leading coordinate, where tail holds
// coordinates 2..K (at least K-1 values, each in [0,1]). The map is concave
// and increasing in u with slope at most M_1 < 1, so the root lies in
// [T(0,tail), T(0,tail)/(1-M_1)]; bisecting that bracket keeps relative
// precision even for roots near 1e-300.
inline RootResult solve_prepend(const OffspringLaw& law, std::span<const double> tail) {
  const int K = law.max_displacement();
  if (tail.size() + 1 < static_cast<std::size_t>(K))
    throw std::invalid_argument("solve_prepend: tail shorter than K-1 coordinates");
  std::vector<double> window(static_cast<std::size_t>(K));
  std::copy_n(tail.begin(), K - 1, window.begin() + 1);
  auto f = [&](double u) {
    window[0] = u;
    return T1(law, window) - u;
  };
  const double M1 = law.mean_at(1);
  if (!(M1 < 1.0)) throw BracketError("solve_prepend: requires M_1 < 1");
  const double t0 = f(0.0);
  if (t0 == 0.0) return {0.0, 0, 0.0, 0.0};
  if (t0 < 0.0) throw BracketError("solve_prepend: T(0, tail) < 0");
  double hi = std::min(1.0, t0 / (1.0 - M1) * (1.0 + 1e-9));
  if (f(hi) > 0.0) hi = 1.0;
  if (f(hi) > 0.0) throw BracketError("solve_prepend: no sign change on [0,1]");
  return bisect_decreasing(f, t0, hi);
}

}  // namespace shiftbp
