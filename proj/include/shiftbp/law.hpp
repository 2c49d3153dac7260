#pragma once

// Shift-invariant offspring laws: a type-i parent has counts[k-1] children of
// type i+k-1. Everything downstream (moments, generating functions, the
// simulator) is derived from the finite entry list held here.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "shiftbp/error.hpp"

namespace shiftbp {

inline constexpr double kProbSumTolerance = 1e-12;
inline constexpr int kDefaultTruncation = 64;
// M is compared against 1 with this slack so that laws that are critical in
// exact arithmetic (M == 1 up to rounding) are never classified as supercritical.
inline constexpr double kCriticalSlack = 1e-12;

struct OffspringEntry {
  std::vector<int> counts;  // counts[k-1]: children at displacement k
  double prob = 0.0;

  int total() const { return std::accumulate(counts.begin(), counts.end(), 0); }
  bool is_zero() const { return total() == 0; }
};

class OffspringLaw {
 public:
  // Canonicalizes (pads counts to length K, sorts lexicographically) and
  // validates. Throws ValidationError on any contract violation; never
  // renormalizes.
  static OffspringLaw make(std::string name, std::vector<OffspringEntry> entries) {
    if (entries.empty()) throw ValidationError("law has no offspring entries");
    int K = 0;
    for (const auto& e : entries) {
      if (!(e.prob > 0.0) || e.prob > 1.0 || !std::isfinite(e.prob))
        throw ValidationError("entry probability must lie in (0,1], got " + std::to_string(e.prob));
      for (int c : e.counts)
        if (c < 0) throw ValidationError("negative offspring count");
      int last = 0;
      for (std::size_t k = 0; k < e.counts.size(); ++k)
        if (e.counts[k] > 0) last = static_cast<int>(k) + 1;
      K = std::max(K, last);
    }
    if (K == 0) throw ValidationError("law never produces offspring (A2: P(|Z_1|>1) = 0)");

    for (auto& e : entries) e.counts.resize(static_cast<std::size_t>(K), 0);
    std::sort(entries.begin(), entries.end(),
              [](const OffspringEntry& a, const OffspringEntry& b) { return a.counts < b.counts; });
    for (std::size_t i = 1; i < entries.size(); ++i)
      if (entries[i].counts == entries[i - 1].counts)
        throw ValidationError("duplicate offspring entry " + counts_string(entries[i].counts));

    double sum = 0.0;
    for (const auto& e : entries) sum += e.prob;
    if (std::abs(sum - 1.0) > kProbSumTolerance) {
      std::ostringstream os;
      os << std::setprecision(17) << "probabilities sum to " << sum << ", not 1";
      throw ValidationError(os.str());
    }
    if (!entries.front().is_zero())
      throw ValidationError("law lacks the all-zero offspring entry (A2 requires P(0) > 0)");

    OffspringLaw law;
    law.name_ = std::move(name);
    law.entries_ = std::move(entries);
    law.K_ = K;
    return law;
  }

  const std::string& name() const { return name_; }
  std::span<const OffspringEntry> entries() const { return entries_; }
  // Maximal displacement K (>= 1).
  int max_displacement() const { return K_; }

  // Mean number of children at displacement k (1-based); zero beyond K.
  double mean_at(int k) const {
    if (k < 1 || k > K_) return 0.0;
    double m = 0.0;
    for (const auto& e : entries_) m += e.prob * e.counts[static_cast<std::size_t>(k - 1)];
    return m;
  }

  friend bool operator==(const OffspringLaw& a, const OffspringLaw& b) {
    if (a.name_ != b.name_ || a.K_ != b.K_ || a.entries_.size() != b.entries_.size()) return false;
    for (std::size_t i = 0; i < a.entries_.size(); ++i)
      if (a.entries_[i].counts != b.entries_[i].counts || a.entries_[i].prob != b.entries_[i].prob)
        return false;
    return true;
  }

  static std::string counts_string(const std::vector<int>& c) {
    std::string s = "(";
    for (std::size_t i = 0; i < c.size(); ++i) s += (i ? "," : "") + std::to_string(c[i]);
    return s + ")";
  }

 private:
  std::string name_;
  std::vector<OffspringEntry> entries_;
  int K_ = 0;
};

// Row-major dense square matrix, 1-based accessors.
struct SquareMatrix {
  std::size_t n = 0;
  std::vector<double> data;

  double operator()(std::size_t i, std::size_t k) const { return data[(i - 1) * n + (k - 1)]; }
  double& operator()(std::size_t i, std::size_t k) { return data[(i - 1) * n + (k - 1)]; }
};

struct MomentSummary {
  std::vector<double> h;               // h[0..K]; h[k] = P(max displacement == k)
  std::vector<std::vector<double>> a;  // a[k-1][j-1] = a_{k,j}, 1 <= j <= k; zero row when h_k == 0
  std::vector<double> Mk;              // Mk[i-1] = M_i
  double M = 0.0;
  std::vector<double> f0_coeffs;       // f0_coeffs[n] = P(total offspring == n)
  SquareMatrix mean_matrix_truncated;  // m_{ik} = M_{k-i+1}

  int K() const { return static_cast<int>(Mk.size()); }
  double M_at(int i) const { return (i >= 1 && i <= K()) ? Mk[static_cast<std::size_t>(i - 1)] : 0.0; }
  double M1() const { return M_at(1); }
  bool supercritical() const { return M > 1.0 + kCriticalSlack; }
};

inline MomentSummary moments(const OffspringLaw& law, int n_trunc = kDefaultTruncation) {
  const int K = law.max_displacement();
  MomentSummary s;
  s.h.assign(static_cast<std::size_t>(K) + 1, 0.0);
  s.a.assign(static_cast<std::size_t>(K), {});
  for (int k = 1; k <= K; ++k) s.a[static_cast<std::size_t>(k - 1)].assign(static_cast<std::size_t>(k), 0.0);
  s.Mk.assign(static_cast<std::size_t>(K), 0.0);

  int max_total = 0;
  for (const auto& e : law.entries()) max_total = std::max(max_total, e.total());
  s.f0_coeffs.assign(static_cast<std::size_t>(max_total) + 1, 0.0);

  for (const auto& e : law.entries()) {
    int last = 0;
    for (int k = 1; k <= K; ++k)
      if (e.counts[static_cast<std::size_t>(k - 1)] > 0) last = k;
    s.h[static_cast<std::size_t>(last)] += e.prob;
    if (last > 0)
      for (int j = 1; j <= last; ++j)
        s.a[static_cast<std::size_t>(last - 1)][static_cast<std::size_t>(j - 1)] +=
            e.prob * e.counts[static_cast<std::size_t>(j - 1)];
    s.f0_coeffs[static_cast<std::size_t>(e.total())] += e.prob;
  }
  // a_{k,j} is a conditional mean given max displacement k.
  for (int k = 1; k <= K; ++k) {
    const double hk = s.h[static_cast<std::size_t>(k)];
    for (auto& v : s.a[static_cast<std::size_t>(k - 1)]) v = hk > 0.0 ? v / hk : 0.0;
  }
  for (int i = 1; i <= K; ++i) {
    double m = 0.0;
    for (int k = i; k <= K; ++k)
      m += s.h[static_cast<std::size_t>(k)] * s.a[static_cast<std::size_t>(k - 1)][static_cast<std::size_t>(i - 1)];
    s.Mk[static_cast<std::size_t>(i - 1)] = m;
  }
  s.M = std::accumulate(s.Mk.begin(), s.Mk.end(), 0.0);

  const auto n = static_cast<std::size_t>(std::max(n_trunc, 1));
  s.mean_matrix_truncated.n = n;
  s.mean_matrix_truncated.data.assign(n * n, 0.0);
  for (std::size_t i = 1; i <= n; ++i)
    for (std::size_t k = i; k <= n && k - i + 1 <= static_cast<std::size_t>(K); ++k)
      s.mean_matrix_truncated(i, k) = s.M_at(static_cast<int>(k - i + 1));
  return s;
}

// Brute-force A1 check: for every 1 <= i <= k <= n_max some power of the
// truncated mean matrix has a positive (i,k) entry. Powers are taken over
// the boolean semiring, so nothing underflows.
struct A1OracleResult {
  bool pass = true;
  int i = 0;  // first failing pair when !pass
  int k = 0;
};

inline A1OracleResult a1_oracle(const MomentSummary& s, int n_max) {
  const std::size_t n = s.mean_matrix_truncated.n;
  if (n_max < 1 || n < 3 * static_cast<std::size_t>(n_max))
    throw std::invalid_argument("a1_oracle: truncated mean matrix must have size >= 3*n_max");
  std::vector<std::vector<std::size_t>> succ(n);
  std::vector<char> reach(n * n, 0);
  for (std::size_t i = 1; i <= n; ++i)
    for (std::size_t k = 1; k <= n; ++k)
      if (s.mean_matrix_truncated(i, k) > 0.0) {
        succ[i - 1].push_back(k - 1);
        reach[(i - 1) * n + (k - 1)] = 1;
      }

  // reach = B | B^2 | ... accumulated power by power; once a power adds
  // nothing new, no later power can either.
  std::vector<char> power = reach, next(n * n);
  for (std::size_t p = 2; p <= n; ++p) {
    std::fill(next.begin(), next.end(), 0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (power[i * n + j])
          for (std::size_t k : succ[j]) next[i * n + k] = 1;
    bool grew = false;
    for (std::size_t t = 0; t < n * n; ++t)
      if (next[t] && !reach[t]) reach[t] = 1, grew = true;
    if (!grew) break;
    power.swap(next);
  }
  for (int i = 1; i <= n_max; ++i)
    for (int k = i; k <= n_max; ++k)
      if (!reach[static_cast<std::size_t>(i - 1) * n + static_cast<std::size_t>(k - 1)]) return {false, i, k};
  return {};
}

enum class Regime { Supercritical, NonSupercritical };

inline const char* to_string(Regime r) {
  return r == Regime::Supercritical ? "Supercritical" : "NonSupercritical";
}

struct AssumptionReport {
  bool a1 = false;
  std::string a1_witness;
  bool a1_oracle = false;  // independent reachability confirmation
  bool a2 = false;
  bool a3 = false;
  Regime regime = Regime::NonSupercritical;

  bool all_pass() const { return a1 && a1_oracle && a2 && a3; }
};

inline AssumptionReport check_assumptions(const OffspringLaw& law, const MomentSummary& s) {
  AssumptionReport r;
  const double M1 = s.M1(), M2 = s.M_at(2);
  r.a1 = M1 > 0.0 && M2 > 0.0;
  if (!(M1 > 0.0))
    r.a1_witness = "type i unreachable from itself (M_1 = 0)";
  else if (!(M2 > 0.0))
    r.a1_witness = "type i+1 unreachable from type i (M_2 = 0)";
  const int n_max = static_cast<int>(s.mean_matrix_truncated.n / 3);
  r.a1_oracle = n_max >= 1 && a1_oracle(s, n_max).pass;

  const bool has_zero = !law.entries().empty() && law.entries().front().is_zero();
  const bool branches = std::any_of(law.entries().begin(), law.entries().end(),
                                    [](const OffspringEntry& e) { return e.total() >= 2; });
  r.a2 = has_zero && branches;
  r.a3 = M1 < 1.0 && std::isfinite(s.M);
  r.regime = s.supercritical() ? Regime::Supercritical : Regime::NonSupercritical;
  return r;
}

// ---- law documents --------------------------------------------------------

inline nlohmann::json to_json(const OffspringLaw& law) {
  nlohmann::json offspring = nlohmann::json::array();
  for (const auto& e : law.entries()) offspring.push_back({{"counts", e.counts}, {"prob", e.prob}});
  return {{"name", law.name()}, {"offspring", std::move(offspring)}};
}

// Canonical serialization: compact JSON of the canonical law.
inline std::string serialize(const OffspringLaw& law) { return to_json(law).dump(); }

// 64-bit FNV-1a digest of the canonical serialization, as 16 hex digits.
inline std::string law_hash(const OffspringLaw& law) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : serialize(law)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

inline OffspringLaw law_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ParseError("law document must be a JSON object");
  if (!doc.contains("offspring") || !doc["offspring"].is_array())
    throw ParseError("law document needs an \"offspring\" array");
  std::string name = "unnamed";
  if (doc.contains("name")) {
    if (!doc["name"].is_string()) throw ParseError("\"name\" must be a string");
    name = doc["name"].get<std::string>();
  }
  std::vector<OffspringEntry> entries;
  for (const auto& item : doc["offspring"]) {
    if (!item.is_object() || !item.contains("counts") || !item.contains("prob"))
      throw ParseError("each offspring item needs \"counts\" and \"prob\"");
    const auto& counts = item["counts"];
    if (!counts.is_array()) throw ParseError("\"counts\" must be an array");
    if (!item["prob"].is_number()) throw ParseError("\"prob\" must be a number");
    OffspringEntry e;
    for (const auto& c : counts) {
      if (!c.is_number_integer()) throw ParseError("offspring counts must be integers");
      const auto v = c.get<std::int64_t>();
      if (v < 0) throw ValidationError("negative offspring count");
      if (v > 1'000'000) throw ValidationError("offspring count too large");
      e.counts.push_back(static_cast<int>(v));
    }
    e.prob = item["prob"].get<double>();
    entries.push_back(std::move(e));
  }
  return OffspringLaw::make(std::move(name), std::move(entries));
}

inline OffspringLaw parse_law(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("malformed law document: ") + e.what());
  }
  return law_from_json(doc);
}

// Accepts either a path to a law document or the document text itself.
inline OffspringLaw load_law(const std::string& source) {
  const auto first = source.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && source[first] == '{') return parse_law(source);
  std::ifstream in(source);
  if (!in) throw ParseError("cannot open law file '" + source + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_law(buf.str());
}

}  // namespace shiftbp
