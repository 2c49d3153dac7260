#pragma once

// Monte Carlo simulation of the branching random walk. Each trial owns an
// RNG stream derived from (seed, trial_index), so results do not depend on
// how trials are sharded across threads.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <map>
#include <random>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "shiftbp/error.hpp"
#include "shiftbp/law.hpp"

namespace shiftbp {

// ---- random streams -----------------------------------------------------------

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// xoshiro256** seeded through splitmix64.
class Xoshiro256 {
 public:
  using result_type = std::uint64_t;

  explicit Xoshiro256(std::uint64_t seed) {
    for (auto& w : s_) w = splitmix64(seed);
  }

  // Stream for one trial: a counter-based split of (seed, index).
  static Xoshiro256 for_trial(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t st = seed;
    const std::uint64_t a = splitmix64(st);
    std::uint64_t st2 = a ^ (index * 0xd1342543de82ef95ULL + 0x632be59bd9b4e019ULL);
    return Xoshiro256(splitmix64(st2));
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform in [0,1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  std::uint64_t s_[4];
};

// ---- discrete sampling ---------------------------------------------------------

// Categorical distribution over a small support. Single draws use CDF
// inversion; bulk draws for many particles use a multinomial split into
// conditional binomials, which has the same distribution.
class Categorical {
 public:
  explicit Categorical(std::vector<double> probs) : p_(std::move(probs)), cdf_(p_.size()) {
    double acc = 0.0;
    for (std::size_t i = 0; i < p_.size(); ++i) cdf_[i] = acc += p_[i];
  }

  std::size_t size() const { return p_.size(); }

  template <class Rng>
  std::size_t draw(Rng& rng) const {
    const double u = rng.uniform() * cdf_.back();
    for (std::size_t i = 0; i + 1 < cdf_.size(); ++i)
      if (u < cdf_[i]) return i;
    return cdf_.size() - 1;
  }

  // out[i] = number of the n draws landing on category i.
  template <class Rng>
  void draw_counts(std::int64_t n, Rng& rng, std::vector<std::int64_t>& out) const {
    out.assign(p_.size(), 0);
    if (n <= kPerDrawLimit) {
      for (std::int64_t t = 0; t < n; ++t) ++out[draw(rng)];
      return;
    }
    double rest = cdf_.back();
    for (std::size_t i = 0; i + 1 < p_.size() && n > 0; ++i) {
      const double pi = std::clamp(p_[i] / rest, 0.0, 1.0);
      std::binomial_distribution<std::int64_t> bin(n, pi);
      out[i] = bin(rng);
      n -= out[i];
      rest -= p_[i];
      if (!(rest > 0.0)) break;
    }
    out.back() += n;
  }

  static constexpr std::int64_t kPerDrawLimit = 16;

 private:
  std::vector<double> p_;
  std::vector<double> cdf_;
};

// ---- populations -----------------------------------------------------------------

struct Population {
  std::map<std::int64_t, std::int64_t> counts;  // type -> particle count
  int generation = 0;
  std::int64_t total = 0;

  static Population single(std::int64_t type) {
    Population p;
    p.counts[type] = 1;
    p.total = 1;
    return p;
  }
  bool empty() const { return total == 0; }
  std::int64_t min_type() const { return counts.empty() ? 0 : counts.begin()->first; }
  std::int64_t max_type() const { return counts.empty() ? 0 : counts.rbegin()->first; }
};

// One generation: every particle independently draws an offspring entry; a
// type-i parent's counts[k-1] children get type i+k-1.
template <class Rng>
Population step(const Population& pop, const OffspringLaw& law, const Categorical& entries, Rng& rng) {
  Population next;
  next.generation = pop.generation + 1;
  std::vector<std::int64_t> draws;
  const auto law_entries = law.entries();
  for (const auto& [type, count] : pop.counts) {
    entries.draw_counts(count, rng, draws);
    for (std::size_t e = 0; e < draws.size(); ++e) {
      if (draws[e] == 0) continue;
      const auto& c = law_entries[e].counts;
      for (std::size_t k = 0; k < c.size(); ++k)
        if (c[k] > 0) next.counts[type + static_cast<std::int64_t>(k)] += draws[e] * c[k];
    }
  }
  for (const auto& kv : next.counts) next.total += kv.second;
  return next;
}

inline Categorical entry_sampler(const OffspringLaw& law) {
  std::vector<double> p;
  for (const auto& e : law.entries()) p.push_back(e.prob);
  return Categorical(std::move(p));
}

// ---- typesets and configuration -----------------------------------------------------

struct GlobalTypeset {};
struct FiniteRange {
  std::int64_t lo = 1, hi = 1;
};
struct Arithmetic {
  std::int64_t residue = 0, modulus = 1;  // types t with t mod modulus == residue
};
using TypesetSpec = std::variant<GlobalTypeset, FiniteRange, Arithmetic>;

inline std::string to_string(const TypesetSpec& t) {
  if (std::holds_alternative<GlobalTypeset>(t)) return "global";
  if (const auto* f = std::get_if<FiniteRange>(&t)) return "finite:" + std::to_string(f->lo) + ".." + std::to_string(f->hi);
  const auto& a = std::get<Arithmetic>(t);
  return "mod:" + std::to_string(a.residue) + "," + std::to_string(a.modulus);
}

// Parses global | finite:lo..hi | mod:r,m.
inline TypesetSpec parse_typeset(const std::string& s) {
  if (s == "global") return GlobalTypeset{};
  try {
    if (s.rfind("finite:", 0) == 0) {
      const auto body = s.substr(7);
      const auto dots = body.find("..");
      if (dots == std::string::npos) throw ValidationError("finite typeset needs lo..hi");
      FiniteRange f{std::stoll(body.substr(0, dots)), std::stoll(body.substr(dots + 2))};
      if (f.lo < 1 || f.hi < f.lo) throw ValidationError("finite typeset needs 1 <= lo <= hi");
      return f;
    }
    if (s.rfind("mod:", 0) == 0) {
      const auto body = s.substr(4);
      const auto comma = body.find(',');
      if (comma == std::string::npos) throw ValidationError("mod typeset needs r,m");
      Arithmetic a{std::stoll(body.substr(0, comma)), std::stoll(body.substr(comma + 1))};
      if (a.modulus < 1 || a.residue < 0 || a.residue >= a.modulus)
        throw ValidationError("mod typeset needs m >= 1 and 0 <= r < m");
      return a;
    }
  } catch (const std::logic_error&) {
    throw ValidationError("unparsable typeset '" + s + "'");
  }
  throw ValidationError("unknown typeset '" + s + "' (expected global, finite:lo..hi or mod:r,m)");
}

struct SimConfig {
  std::int64_t trials = 1000;
  std::uint64_t seed = 0;
  int max_generations = 500;
  std::int64_t max_population = 1'000'000;
  TypesetSpec typeset = GlobalTypeset{};
  std::int64_t initial_type = 1;
  unsigned threads = 0;  // 0: SHIFTBP_THREADS or hardware concurrency

  void validate() const {
    if (trials < 1) throw ValidationError("trials must be >= 1");
    if (max_generations < 1 || max_population < 1) throw ValidationError("simulation caps must be positive");
    if (initial_type < 1) throw ValidationError("initial type must be >= 1");
  }
};

// ---- trials ------------------------------------------------------------------------

struct TrialOutcome {
  enum class Kind { ExtinctAt, LocalExtinct, Survived };
  Kind kind = Kind::ExtinctAt;
  int generation = 0;  // generation at which the outcome was decided

  bool extinct() const { return kind != Kind::Survived; }
};

// Sampler for the total offspring count (the projected single-type law).
struct TotalSampler {
  std::vector<std::int64_t> sizes;
  Categorical dist{std::vector<double>{1.0}};

  explicit TotalSampler(const MomentSummary& s) {
    std::vector<double> p;
    for (std::size_t n = 0; n < s.f0_coeffs.size(); ++n)
      if (s.f0_coeffs[n] > 0.0) {
        sizes.push_back(static_cast<std::int64_t>(n));
        p.push_back(s.f0_coeffs[n]);
      }
    dist = Categorical(std::move(p));
  }

  template <class Rng>
  std::int64_t next_total(std::int64_t parents, Rng& rng, std::vector<std::int64_t>& scratch) const {
    dist.draw_counts(parents, rng, scratch);
    std::int64_t children = 0;
    for (std::size_t i = 0; i < scratch.size(); ++i) children += scratch[i] * sizes[i];
    return children;
  }
};

// Per-run sampling tables, built once and shared by all trials.
struct TrialContext {
  const OffspringLaw& law;
  Categorical entries;
  TotalSampler totals;

  explicit TrialContext(const OffspringLaw& l) : law(l), entries(entry_sampler(l)), totals(moments(l, 1)) {}
};

// Outcome rules:
//  Global       extinct when the population empties, survived when a cap is
//               hit. Only the total size matters, so totals are simulated
//               directly (same outcome distribution as the typed walk).
//  FiniteRange  only particles of type <= hi are followed (types never
//               decrease); local extinction once none remain after some
//               escaped above hi, global extinction if none ever escaped.
//  Arithmetic   the typed walk runs until some particle reaches a type of
//               the set above the initial type; from then on only totals
//               matter. Survived when a cap is hit after that witness,
//               local extinction when a cap is hit without it.
inline TrialOutcome run_trial(const TrialContext& ctx, const SimConfig& cfg, std::uint64_t trial_index) {
  auto rng = Xoshiro256::for_trial(cfg.seed, trial_index);
  const auto* range = std::get_if<FiniteRange>(&cfg.typeset);
  const auto* arith = std::get_if<Arithmetic>(&cfg.typeset);
  bool typed = !std::holds_alternative<GlobalTypeset>(cfg.typeset);
  bool escaped = false, witnessed = false;
  Population pop = Population::single(cfg.initial_type);
  std::vector<std::int64_t> scratch;

  while (true) {
    if (pop.empty())
      return {escaped ? TrialOutcome::Kind::LocalExtinct : TrialOutcome::Kind::ExtinctAt, pop.generation};
    if (pop.generation >= cfg.max_generations || pop.total >= cfg.max_population) {
      if (arith && !witnessed) return {TrialOutcome::Kind::LocalExtinct, pop.generation};
      return {TrialOutcome::Kind::Survived, pop.generation};
    }
    if (!typed) {
      pop.total = ctx.totals.next_total(pop.total, rng, scratch);
      ++pop.generation;
      continue;
    }
    pop = step(pop, ctx.law, ctx.entries, rng);
    if (range) {
      auto it = pop.counts.upper_bound(range->hi);
      if (it != pop.counts.end()) {
        escaped = true;
        for (auto j = it; j != pop.counts.end(); ++j) pop.total -= j->second;
        pop.counts.erase(it, pop.counts.end());
      }
    } else if (arith) {
      for (const auto& [type, count] : pop.counts)
        if (type > cfg.initial_type && type % arith->modulus == arith->residue) {
          witnessed = true;
          typed = false;
          pop.counts.clear();
          break;
        }
    }
  }
}

inline TrialOutcome run_trial(const OffspringLaw& law, const SimConfig& cfg, std::uint64_t trial_index) {
  return run_trial(TrialContext(law), cfg, trial_index);
}

// ---- aggregation -------------------------------------------------------------------

struct OutcomeCounts {
  std::int64_t extinct = 0;        // global extinction
  std::int64_t survived = 0;       // censored at a cap
  std::int64_t local_extinct = 0;  // local extinction while the population was alive

  std::int64_t trials() const { return extinct + survived + local_extinct; }
  void add(const TrialOutcome& o) {
    switch (o.kind) {
      case TrialOutcome::Kind::ExtinctAt: ++extinct; break;
      case TrialOutcome::Kind::LocalExtinct: ++local_extinct; break;
      case TrialOutcome::Kind::Survived: ++survived; break;
    }
  }
  OutcomeCounts& operator+=(const OutcomeCounts& o) {
    extinct += o.extinct;
    survived += o.survived;
    local_extinct += o.local_extinct;
    return *this;
  }
  friend bool operator==(const OutcomeCounts&, const OutcomeCounts&) = default;
};

struct Interval {
  double lo = 0.0, hi = 1.0;
};

inline constexpr double kZ95 = 1.959963984540054;

inline Interval wilson_interval(std::int64_t successes, std::int64_t n, double z = kZ95) {
  if (n <= 0) return {0.0, 1.0};
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(successes) / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double center = (p + z2 / (2.0 * nn)) / denom;
  const double half = z / denom * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn));
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

struct ExtinctionEstimate {
  double p_hat = 0.0;
  Interval wilson_ci_95;
  OutcomeCounts counts;
  bool censored = false;  // some trial was stopped by a cap
  SimConfig config;
};

inline unsigned worker_count(const SimConfig& cfg) {
  unsigned n = cfg.threads;
  if (n == 0) {
    if (const char* env = std::getenv("SHIFTBP_THREADS")) n = static_cast<unsigned>(std::strtoul(env, nullptr, 10));
    if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
  }
  return n;
}

// Trials [first, last) of the configured run.
inline OutcomeCounts simulate_shard(const OffspringLaw& law, const SimConfig& cfg, std::uint64_t first,
                                    std::uint64_t last) {
  const TrialContext ctx(law);
  OutcomeCounts c;
  for (std::uint64_t t = first; t < last; ++t) c.add(run_trial(ctx, cfg, t));
  return c;
}

inline ExtinctionEstimate summarize(const OutcomeCounts& c, const SimConfig& cfg) {
  ExtinctionEstimate est;
  est.counts = c;
  est.config = cfg;
  const std::int64_t n = c.trials();
  const std::int64_t ext = c.extinct + c.local_extinct;
  est.p_hat = n > 0 ? static_cast<double>(ext) / static_cast<double>(n) : 0.0;
  est.wilson_ci_95 = wilson_interval(ext, n);
  est.censored = c.survived > 0;
  return est;
}

inline ExtinctionEstimate estimate_extinction(const OffspringLaw& law, const SimConfig& cfg) {
  cfg.validate();
  const auto total = static_cast<std::uint64_t>(cfg.trials);
  const unsigned workers = std::min<std::uint64_t>(worker_count(cfg), total);
  OutcomeCounts sum;
  if (workers <= 1) {
    sum = simulate_shard(law, cfg, 0, total);
  } else {
    std::vector<OutcomeCounts> parts(workers);
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        parts[w] = simulate_shard(law, cfg, total * w / workers, total * (w + 1) / workers);
      });
    for (auto& t : pool) t.join();
    for (const auto& p : parts) sum += p;
  }
  return summarize(sum, cfg);
}

}  // namespace shiftbp
