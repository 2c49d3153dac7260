#pragma once

// Numerical construction of non-trivial fixed points of T. A geometric seed
// x^(j) = A gamma^j is fixed; eta_n^[i] prepends i scalar fixed-point solves
// in front of the seed tail x_{n->inf}. Norm-crossing vectors
// y[k,m] = (eta_m^[k], ..., eta_m^[1], x^(m), x^(m+1), ...) are scanned over
// an increasing schedule of tail starts m, and their heads converge to a
// fixed point whose coordinates decay at ratio gamma.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "shiftbp/error.hpp"
#include "shiftbp/genfun.hpp"
#include "shiftbp/law.hpp"
#include "shiftbp/roots.hpp"

namespace shiftbp {

inline constexpr double kFixedPointResidualTol = 1e-8;

struct TailSeed {
  double amplitude = 0.0;  // A in (0,1)
  double ratio = 0.0;      // gamma
  std::size_t start = 1;   // x^(j) defined for j >= start

  double x(std::size_t j) const { return amplitude * std::pow(ratio, static_cast<double>(j)); }
  // l2 norm of x_{n->inf}.
  double tail_norm(std::size_t n) const { return x(n) / std::sqrt(1.0 - ratio * ratio); }
};

// A = (1-q)/2, ratio gamma.
inline TailSeed default_seed(const MomentSummary& s) {
  const double gamma = require_gamma(s).value;
  const double q = solve_q(s).value;
  return {0.5 * (1.0 - q), gamma, 1};
}

namespace detail {

inline void require_supercritical(const MomentSummary& s) {
  if (!s.supercritical()) throw RegimeError("fixed-point construction requires M > 1");
  if (!(s.M1() < 1.0)) throw RegimeError("fixed-point construction requires M_1 < 1");
}

// Builds eta_n^[1..depth]. `reversed` holds the current vector back to
// front: x^(n+K-2), ..., x^(n), eta^[1], eta^[2], ...
class LadderBuilder {
 public:
  LadderBuilder(const OffspringLaw& law, const TailSeed& seed, std::size_t n)
      : law_(law), K_(static_cast<std::size_t>(law.max_displacement())), tail_(K_ > 1 ? K_ - 1 : 0) {
    for (std::size_t t = K_ - 1; t >= 1; --t) reversed_.push_back(seed.x(n + t - 1));
  }

  RootResult next() {
    for (std::size_t t = 0; t + 1 < K_; ++t) tail_[t] = reversed_[reversed_.size() - 1 - t];
    RootResult r = solve_prepend(law_, tail_);
    reversed_.push_back(r.value);
    return r;
  }

 private:
  const OffspringLaw& law_;
  std::size_t K_;
  std::vector<double> tail_;
  std::vector<double> reversed_;
};

}  // namespace detail

struct LadderState {
  std::size_t n = 0;
  std::vector<double> eta;        // eta[i-1] = eta_n^[i]
  std::vector<double> residuals;  // scalar solver residuals

  // (eta^[depth], ..., eta^[1], x^(n), ..., x^(n+extra-1)) with ratio-gamma closure.
  UVector vector(const TailSeed& seed, std::size_t extra) const {
    std::vector<double> h(eta.rbegin(), eta.rend());
    for (std::size_t t = 0; t < extra; ++t) h.push_back(seed.x(n + t));
    return UVector(std::move(h), seed.ratio);
  }
};

inline LadderState eta_ladder(const OffspringLaw& law, const MomentSummary& s, const TailSeed& seed, std::size_t n,
                              std::size_t depth) {
  detail::require_supercritical(s);
  if (depth < 1) throw std::invalid_argument("eta_ladder: depth must be >= 1");
  if (n < seed.start) throw std::invalid_argument("eta_ladder: n precedes the seed start");
  LadderState st;
  st.n = n;
  detail::LadderBuilder b(law, seed, n);
  for (std::size_t i = 0; i < depth; ++i) {
    const RootResult r = b.next();
    st.eta.push_back(r.value);
    st.residuals.push_back(r.residual);
  }
  return st;
}

inline double eta1(const OffspringLaw& law, const TailSeed& seed, std::size_t n) {
  return detail::LadderBuilder(law, seed, n).next().value;
}

// Smallest n such that eta_n^[1] > x^(n) for every n' in [n, n_max].
inline std::size_t detect_N0(const OffspringLaw& law, const MomentSummary& s, const TailSeed& seed,
                             std::size_t n_max = 200) {
  detail::require_supercritical(s);
  std::optional<std::size_t> n0;
  for (std::size_t n = n_max; n >= seed.start; --n) {
    if (!(eta1(law, seed, n) > seed.x(n))) break;
    n0 = n;
    if (n == 0) break;
  }
  if (!n0) throw NotFound("detect_N0: eta_n^[1] <= x^(n) at n_max = " + std::to_string(n_max) +
                          "; shrink the seed amplitude");
  return *n0;
}

struct ScanParams {
  std::optional<double> y0;         // default ||x_{N0->inf}||
  std::optional<std::size_t> N0;    // default detect_N0(seed, n0_max)
  std::size_t n0_max = 200;
  std::size_t step = 5;             // J(n) = N0 + n*step
  std::optional<std::size_t> m_start;  // default N0 + step
  std::size_t m_max = 1000;
  std::size_t prepend_cap = 100000;
};

struct Crossing {
  std::size_t m = 0;            // tail start
  std::size_t k = 0;            // prepend count
  double norm = 0.0;            // ||y[k,m]||
  double norm_below = 0.0;      // ||y[k-1,m]||
  std::vector<double> head;     // eta_m^[k], ..., eta_m^[1]

  UVector vector(const TailSeed& seed, std::size_t length) const {
    std::vector<double> h(head);
    for (std::size_t t = 0; h.size() < length; ++t) h.push_back(seed.x(m + t));
    return UVector(std::move(h), seed.ratio);
  }
  double coordinate(const TailSeed& seed, std::size_t j) const {
    return j <= head.size() ? head[j - 1] : seed.x(m + (j - head.size() - 1));
  }
};

// Produces norm-crossing vectors one tail start at a time: for each m the
// smallest k with ||y[k,m]|| > y0, where k must exceed the previous crossing
// (m is advanced until ||y[k_prev, m]|| <= y0 when needed).
class CrossingScanner {
 public:
  CrossingScanner(const OffspringLaw& law, const MomentSummary& s, TailSeed seed, ScanParams p)
      : law_(law), seed_(seed), p_(p) {
    detail::require_supercritical(s);
    if (p_.step < 1) throw std::invalid_argument("scan step must be >= 1");
    N0_ = p_.N0 ? *p_.N0 : detect_N0(law, s, seed_, p_.n0_max);
    y0_ = p_.y0 ? *p_.y0 : seed_.tail_norm(N0_);
    m_ = p_.m_start ? *p_.m_start : N0_ + p_.step;
  }

  double y0() const { return y0_; }
  std::size_t N0() const { return N0_; }

  // Empty once the schedule passes m_max. Throws NotFound if prepend_cap is
  // reached without a crossing.
  std::optional<Crossing> next() {
    while (m_ <= p_.m_max) {
      const std::size_t m = m_;
      const double tail_sq = std::pow(seed_.tail_norm(m), 2);
      detail::LadderBuilder b(law_, seed_, m);
      Crossing c;
      c.m = m;
      double sq = tail_sq;
      std::vector<double> eta;
      while (true) {
        if (eta.size() >= p_.prepend_cap)
          throw NotFound("norm-crossing scan: prepend cap " + std::to_string(p_.prepend_cap) + " reached at m = " +
                         std::to_string(m));
        const double below = std::sqrt(sq);
        const double e = b.next().value;
        eta.push_back(e);
        sq += e * e;
        if (std::sqrt(sq) > y0_) {
          c.norm_below = below;
          break;
        }
      }
      c.k = eta.size();
      c.norm = std::sqrt(sq);
      if (c.k <= k_prev_) {
        ++m_;  // ||y[k_prev, m]|| > y0 still: move the tail further out
        continue;
      }
      c.head.assign(eta.rbegin(), eta.rend());
      k_prev_ = c.k;
      m_ = m + p_.step;
      return c;
    }
    return std::nullopt;
  }

 private:
  const OffspringLaw& law_;
  TailSeed seed_;
  ScanParams p_;
  std::size_t N0_ = 0;
  double y0_ = 0.0;
  std::size_t m_ = 0;
  std::size_t k_prev_ = 0;
};

struct ScanResult {
  double y0 = 0.0;
  std::size_t N0 = 0;
  std::vector<Crossing> crossings;
};

inline ScanResult lemma8_scan(const OffspringLaw& law, const MomentSummary& s, const TailSeed& seed,
                              ScanParams p = {}) {
  CrossingScanner sc(law, s, seed, p);
  ScanResult r{sc.y0(), sc.N0(), {}};
  while (auto c = sc.next()) r.crossings.push_back(std::move(*c));
  return r;
}

// ---- candidates -------------------------------------------------------------

struct Provenance {
  std::string origin = "scan";  // scan | prepend | shift_left
  double amplitude = 0.0;
  double ratio = 0.0;
  double y0 = 0.0;
  std::size_t N0 = 0;
  std::size_t step = 0;
  std::size_t tail_start = 0;     // m of the final crossing
  std::size_t prepend_count = 0;  // k of the final crossing, adjusted by family moves
  std::size_t crossings = 0;
  double conv_tol = 0.0;
  std::vector<double> trace;      // successive head differences
};

struct Candidate {
  UVector u;
  ResidualReport residual;
  RatioDiagnostics ratio;
  Provenance provenance;
  bool converged = false;

  double sup_residual() const { return residual.sup_window; }
  // Residual window 1..N-K.
  std::size_t window() const { return residual.res.size(); }
};

// Fills residual and ratio diagnostics over the residual window.
inline void evaluate_candidate(const OffspringLaw& law, const MomentSummary& s, Candidate& c) {
  c.residual = residuals(law, c.u);
  const std::size_t n = c.residual.res.size();
  if (n >= 1 && c.u(n + static_cast<std::size_t>(s.K())) > 0.0) c.ratio = ratio_diag(s, c.u, 1, n);
}

inline bool within_open_interval(const Candidate& c, double one_minus_q) {
  return c.u(1) > 0.0 && c.u(1) < one_minus_q;
}

struct ConstructParams {
  std::optional<TailSeed> seed;
  ScanParams scan;
  double conv_tol = 1e-10;
  std::size_t compare_width = 32;
  std::size_t horizon = 0;  // 0: max(200, N0 + 8K)
};

// Runs the norm-crossing scan until two successive crossing vectors agree to
// conv_tol on the first compare_width coordinates and the packaged vector
// passes the residual bound. When the schedule is exhausted first the last
// candidate is returned with converged == false.
inline Candidate construct_fixed_point(const OffspringLaw& law, const MomentSummary& s, ConstructParams p = {}) {
  detail::require_supercritical(s);
  const TailSeed seed = p.seed ? *p.seed : default_seed(s);
  const double one_minus_q = 1.0 - solve_q(s).value;
  const auto K = static_cast<std::size_t>(s.K());
  const std::size_t W = std::max<std::size_t>(p.compare_width, 1);

  CrossingScanner sc(law, s, seed, p.scan);
  const std::size_t horizon = p.horizon ? p.horizon : std::max<std::size_t>(200, sc.N0() + 8 * K);

  Provenance prov;
  prov.amplitude = seed.amplitude;
  prov.ratio = seed.ratio;
  prov.y0 = sc.y0();
  prov.N0 = sc.N0();
  prov.step = p.scan.step;
  prov.conv_tol = p.conv_tol;

  auto package = [&](const Crossing& c, bool converged) {
    Candidate cand;
    cand.u = c.vector(seed, std::max(horizon, c.k + 8 * K));
    prov.tail_start = c.m;
    prov.prepend_count = c.k;
    cand.provenance = prov;
    evaluate_candidate(law, s, cand);
    cand.converged = converged && cand.sup_residual() <= kFixedPointResidualTol && within_open_interval(cand, one_minus_q);
    return cand;
  };

  std::optional<Crossing> prev;
  while (auto c = sc.next()) {
    ++prov.crossings;
    if (prev) {
      double diff = 0.0;
      for (std::size_t j = 1; j <= W; ++j)
        diff = std::max(diff, std::abs(c->coordinate(seed, j) - prev->coordinate(seed, j)));
      prov.trace.push_back(diff);
      if (diff < p.conv_tol) {
        Candidate cand = package(*c, true);
        if (cand.converged) return cand;
      }
    }
    prev = std::move(c);
  }
  if (!prev) throw NotFound("norm-crossing scan produced no crossing below m_max");
  return package(*prev, false);
}

// ---- countable family -------------------------------------------------------

enum class Direction { Prepend, ShiftLeft };

inline const char* to_string(Direction d) { return d == Direction::Prepend ? "prepend" : "shift_left"; }

struct FamilyReport {
  Direction direction = Direction::Prepend;
  std::vector<Candidate> members;
  // ordered[i]: member i strictly above (prepend) / below (shift_left) its
  // predecessor (the base for i == 0) on the comparison window.
  std::vector<bool> ordered;

  bool all_ordered() const { return std::all_of(ordered.begin(), ordered.end(), [](bool b) { return b; }); }
};

inline bool strictly_below(const UVector& a, const UVector& b, std::size_t W) {
  for (std::size_t j = 1; j <= W; ++j)
    if (!(a(j) < b(j))) return false;
  return true;
}

inline FamilyReport family(const OffspringLaw& law, const MomentSummary& s, const Candidate& base, std::size_t count,
                           Direction dir, std::size_t compare_width = 32) {
  if (!base.converged) throw ValidationError("family: base candidate is not converged");
  const double one_minus_q = 1.0 - solve_q(s).value;
  const auto K = static_cast<std::size_t>(s.K());
  FamilyReport rep;
  rep.direction = dir;
  rep.members.reserve(count);
  const Candidate* prev = &base;
  for (std::size_t i = 1; i <= count; ++i) {
    Candidate c;
    c.provenance = prev->provenance;
    if (dir == Direction::Prepend) {
      const auto tail = prev->u.window(1, K - 1);
      c.u = prev->u.prepended(solve_prepend(law, tail).value);
      c.provenance.origin = "prepend";
      ++c.provenance.prepend_count;
    } else {
      if (prev->u.size() <= 2 * K) throw ValidationError("family: head too short to shift further");
      c.u = prev->u.shifted_left();
      c.provenance.origin = "shift_left";
      if (c.provenance.prepend_count > 0) --c.provenance.prepend_count;
    }
    evaluate_candidate(law, s, c);
    if (!(c.sup_residual() <= kFixedPointResidualTol))
      throw ValidationError("family member " + std::to_string(i) + " residual " + std::to_string(c.sup_residual()) +
                            " exceeds tolerance");
    if (!within_open_interval(c, one_minus_q))
      throw ValidationError("family member " + std::to_string(i) + " leaves (0, 1-q)");
    c.converged = true;
    const std::size_t W = std::min({compare_width, c.u.size(), prev->u.size()});
    rep.ordered.push_back(dir == Direction::Prepend ? strictly_below(prev->u, c.u, W) : strictly_below(c.u, prev->u, W));
    rep.members.push_back(std::move(c));
    prev = &rep.members.back();
  }
  return rep;
}

}  // namespace shiftbp
