#pragma once

// The generating operator in survival coordinates u = 1 - s:
// T^(i)(u) = 1 - F^(1)(1 - u_{i..i+K-1}). Infinite vectors are represented
// by a finite head plus a geometric tail closure.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <ostream>
#include <span>
#include <vector>

#include "shiftbp/error.hpp"
#include "shiftbp/law.hpp"
#include "shiftbp/roots.hpp"

namespace shiftbp {

class UVector {
 public:
  UVector() = default;
  UVector(std::vector<double> head, double tail_ratio) : head_(std::move(head)), rho_(tail_ratio) {
    if (head_.empty()) throw std::invalid_argument("UVector: empty head");
    if (!(rho_ > 0.0 && rho_ <= 1.0)) throw std::invalid_argument("UVector: tail ratio must lie in (0,1]");
    for (double v : head_)
      if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("UVector: coordinates must lie in [0,1]");
  }

  static UVector constant(double value, std::size_t n) { return UVector(std::vector<double>(n, value), 1.0); }

  // u^(j) = amplitude * ratio^(j-1), head of length n, closed with the same ratio.
  static UVector geometric(double amplitude, double ratio, std::size_t n) {
    std::vector<double> h(n);
    for (std::size_t j = 0; j < n; ++j) h[j] = amplitude * std::pow(ratio, static_cast<double>(j));
    return UVector(std::move(h), ratio);
  }

  // 1-based coordinate; beyond the head the geometric closure applies.
  double operator()(std::size_t j) const {
    if (j >= 1 && j <= head_.size()) return head_[j - 1];
    return head_.back() * std::pow(rho_, static_cast<double>(j - head_.size()));
  }

  std::size_t size() const { return head_.size(); }
  double tail_ratio() const { return rho_; }
  std::span<const double> head() const { return head_; }

  // Coordinates i..i+len-1.
  std::vector<double> window(std::size_t i, std::size_t len) const {
    std::vector<double> w(len);
    for (std::size_t t = 0; t < len; ++t) w[t] = (*this)(i + t);
    return w;
  }

  UVector prepended(double value) const {
    std::vector<double> h;
    h.reserve(head_.size() + 1);
    h.push_back(value);
    h.insert(h.end(), head_.begin(), head_.end());
    return UVector(std::move(h), rho_);
  }

  UVector shifted_left() const {
    if (head_.size() < 2) throw std::invalid_argument("UVector: cannot shift a length-1 head");
    return UVector(std::vector<double>(head_.begin() + 1, head_.end()), rho_);
  }

 private:
  std::vector<double> head_;
  double rho_ = 1.0;
};

// F^(1)(s) evaluated exactly as a finite polynomial in s-space.
inline double eval_F1(const OffspringLaw& law, std::span<const double> s) {
  if (s.size() < static_cast<std::size_t>(law.max_displacement()))
    throw std::invalid_argument("eval_F1: window shorter than K");
  double v = 0.0;
  for (const auto& e : law.entries()) {
    double term = e.prob;
    for (std::size_t k = 0; k < e.counts.size(); ++k)
      for (int c = 0; c < e.counts[k]; ++c) term *= s[k];
    v += term;
  }
  return v;
}

inline double eval_T(const OffspringLaw& law, const UVector& u, std::size_t i) {
  if (i < 1) throw std::invalid_argument("eval_T: index is 1-based");
  const auto w = u.window(i, static_cast<std::size_t>(law.max_displacement()));
  return T1(law, w);
}

// ---- residuals ------------------------------------------------------------

struct ResidualReport {
  std::vector<double> res;  // res[i-1] = u^(i) - T^(i)(u), i = 1..N-K
  double l2_window = 0.0;
  double sup_window = 0.0;
  double tail_estimate = 0.0;  // l2 mass of residuals beyond the window
};

// Window is 1..N-K so that no reported residual reads the tail closure.
// The tail estimate sums W further residuals and extrapolates their decay.
inline ResidualReport residuals(const OffspringLaw& law, const UVector& u, std::size_t W = 32) {
  const auto K = static_cast<std::size_t>(law.max_displacement());
  if (u.size() <= K) throw std::invalid_argument("residuals: head must be longer than K");
  ResidualReport r;
  const std::size_t n = u.size() - K;
  r.res.resize(n);
  double sq = 0.0;
  for (std::size_t i = 1; i <= n; ++i) {
    const double d = u(i) - eval_T(law, u, i);
    r.res[i - 1] = d;
    sq += d * d;
    r.sup_window = std::max(r.sup_window, std::abs(d));
  }
  r.l2_window = std::sqrt(sq);

  double tail_sq = 0.0, prev = 0.0, last = 0.0;
  for (std::size_t i = n + 1; i <= n + W; ++i) {
    const double d = u(i) - eval_T(law, u, i);
    tail_sq += d * d;
    prev = last;
    last = d;
  }
  if (W >= 2 && prev != 0.0) {
    const double ratio = std::abs(last / prev);
    if (ratio < 1.0) tail_sq += last * last * ratio * ratio / (1.0 - ratio * ratio);
  }
  r.tail_estimate = std::sqrt(tail_sq);
  return r;
}

// ---- ratio diagnostics ----------------------------------------------------

struct RatioDiagnostics {
  std::size_t first = 1;    // window i = first..last
  std::size_t last = 0;
  std::vector<double> alpha;  // alpha[i-first] = u^(i+1)/u^(i)
  std::vector<double> U;      // U[i-first] = sum_k M_k prod_{l=1}^{k-1} alpha_{i+l-1}

  double alpha_at(std::size_t i) const { return alpha[i - first]; }
  double U_at(std::size_t i) const { return U[i - first]; }
};

inline RatioDiagnostics ratio_diag(const MomentSummary& s, const UVector& u, std::size_t first, std::size_t last) {
  if (first < 1 || last < first) throw std::invalid_argument("ratio_diag: bad window");
  const int K = s.K();
  RatioDiagnostics d;
  d.first = first;
  d.last = last;
  // Ratios are needed up to index last+K-2 for U.
  std::vector<double> ratios;
  for (std::size_t i = first; i + 1 <= last + static_cast<std::size_t>(K); ++i) {
    const double ui = u(i);
    if (!(ui > 0.0)) throw std::invalid_argument("ratio_diag: u must be positive on the window");
    ratios.push_back(u(i + 1) / ui);
  }
  for (std::size_t i = first; i <= last; ++i) {
    const std::size_t off = i - first;
    d.alpha.push_back(ratios[off]);
    double U = 0.0, prod = 1.0;
    for (int k = 1; k <= K; ++k) {
      U += s.M_at(k) * prod;
      if (k < K) prod *= ratios[off + static_cast<std::size_t>(k - 1)];
    }
    d.U.push_back(U);
  }
  return d;
}

// ---- Joffe decomposition ---------------------------------------------------

struct SimpsonOptions {
  double abs_tol = 1e-10;
  int max_depth = 40;
};

namespace detail {

template <class Fn>
double simpson_step(Fn& f, double a, double b, double fa, double fm, double fb, double whole, double tol,
                    int depth, bool& ok) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  if (depth <= 0) {
    ok = false;
    return left + right + delta / 15.0;
  }
  return simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, ok) +
         simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, ok);
}

}  // namespace detail

// Adaptive Simpson on [a,b]; throws QuadratureError if max_depth is exhausted.
template <class Fn>
double adaptive_simpson(Fn&& f, double a, double b, SimpsonOptions opt = {}) {
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  bool ok = true;
  const double v = detail::simpson_step(f, a, b, fa, fm, fb, whole, opt.abs_tol, opt.max_depth, ok);
  if (!ok) throw QuadratureError("adaptive Simpson: tolerance unreachable at max depth");
  return v;
}

// E_{k,j}(1-u) = sum over entries with max displacement k of
//   P/h_k * c_j * [1 - int_0^1 prod_l (1-u_l x)^{c_l} / (1-u_j x) dx].
// The c_j factor means (1-u_j x) always divides the product, so each
// integrand is a polynomial in x.
inline double joffe_E(const OffspringLaw& law, const MomentSummary& s, int k, int j, std::span<const double> u,
                      SimpsonOptions opt = {}) {
  if (k < 1 || k > law.max_displacement() || j < 1 || j > k) throw std::invalid_argument("joffe_E: bad (k, j)");
  if (u.size() < static_cast<std::size_t>(k)) throw std::invalid_argument("joffe_E: window shorter than k");
  const double hk = s.h[static_cast<std::size_t>(k)];
  if (!(hk > 0.0)) throw std::invalid_argument("joffe_E: h_k must be positive");
  double E = 0.0;
  for (const auto& e : law.entries()) {
    int last = 0;
    for (int t = 1; t <= law.max_displacement(); ++t)
      if (e.counts[static_cast<std::size_t>(t - 1)] > 0) last = t;
    const int cj = e.counts[static_cast<std::size_t>(j - 1)];
    if (last != k || cj == 0) continue;
    auto integrand = [&](double x) {
      double p = 1.0;
      for (int l = 1; l <= k; ++l) {
        const int power = e.counts[static_cast<std::size_t>(l - 1)] - (l == j ? 1 : 0);
        const double base = 1.0 - u[static_cast<std::size_t>(l - 1)] * x;
        for (int t = 0; t < power; ++t) p *= base;
      }
      return p;
    };
    // Per-entry tolerance keeps the weighted sum within opt.abs_tol.
    SimpsonOptions local = opt;
    local.abs_tol = opt.abs_tol / std::max(1.0, static_cast<double>(cj) * law.entries().size());
    const double I = adaptive_simpson(integrand, 0.0, 1.0, local);
    E += e.prob / hk * cj * (1.0 - I);
  }
  return E;
}

// f_k(s_1..s_k): offspring pgf conditioned on max displacement k.
inline double eval_fk(const OffspringLaw& law, const MomentSummary& s, int k, std::span<const double> sv) {
  const double hk = s.h[static_cast<std::size_t>(k)];
  double v = 0.0;
  for (const auto& e : law.entries()) {
    int last = 0;
    for (int t = 1; t <= law.max_displacement(); ++t)
      if (e.counts[static_cast<std::size_t>(t - 1)] > 0) last = t;
    if (last != k) continue;
    double term = e.prob / hk;
    for (int l = 0; l < k; ++l)
      for (int c = 0; c < e.counts[static_cast<std::size_t>(l)]; ++c) term *= sv[static_cast<std::size_t>(l)];
    v += term;
  }
  return v;
}

struct JoffeCheck {
  bool pass = true;
  double max_deviation = 0.0;
};

// Checks 1 - f_k(1-u) = sum_j (a_{k,j} - E_{k,j}(1-u)) u_j for every k with h_k > 0.
inline JoffeCheck joffe_identity_check(const OffspringLaw& law, const MomentSummary& s, std::span<const double> u,
                                       double tol) {
  const int K = law.max_displacement();
  if (u.size() < static_cast<std::size_t>(K)) throw std::invalid_argument("joffe_identity_check: window shorter than K");
  std::vector<double> sv(static_cast<std::size_t>(K));
  for (int l = 0; l < K; ++l) sv[static_cast<std::size_t>(l)] = 1.0 - u[static_cast<std::size_t>(l)];
  JoffeCheck out;
  for (int k = 1; k <= K; ++k) {
    if (!(s.h[static_cast<std::size_t>(k)] > 0.0)) continue;
    const double lhs = 1.0 - eval_fk(law, s, k, sv);
    double rhs = 0.0;
    for (int j = 1; j <= k; ++j)
      rhs += (s.a[static_cast<std::size_t>(k - 1)][static_cast<std::size_t>(j - 1)] - joffe_E(law, s, k, j, u)) *
             u[static_cast<std::size_t>(j - 1)];
    out.max_deviation = std::max(out.max_deviation, std::abs(lhs - rhs));
  }
  out.pass = out.max_deviation <= tol;
  return out;
}

// ---- CSV export -------------------------------------------------------------

// Columns: i, u_i, s_i, residual_i, alpha_i, U_i over the residual window.
inline void write_diagnostics_csv(std::ostream& os, const OffspringLaw& law, const MomentSummary& s, const UVector& u) {
  const auto rep = residuals(law, u);
  const std::size_t n = rep.res.size();
  std::vector<double> alpha(n, std::numeric_limits<double>::quiet_NaN()), U = alpha;
  if (n >= 1 && u(n + static_cast<std::size_t>(s.K())) > 0.0) {
    const auto d = ratio_diag(s, u, 1, n);
    alpha = d.alpha;
    U = d.U;
  }
  const auto old = os.precision(17);
  os << "i,u_i,s_i,residual_i,alpha_i,U_i\n";
  for (std::size_t i = 1; i <= n; ++i)
    os << i << ',' << u(i) << ',' << 1.0 - u(i) << ',' << rep.res[i - 1] << ',' << alpha[i - 1] << ',' << U[i - 1]
       << '\n';
  os.precision(old);
}

}  // namespace shiftbp
