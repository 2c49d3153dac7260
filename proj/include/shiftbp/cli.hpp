#pragma once

// Subcommand implementations behind the `shiftbp` executable. Each command
// prints a human-readable summary, optionally writes a JSON run report, and
// returns one of the exit codes below.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <optional>
#include <ostream>
#include <string>

#include "shiftbp/construct.hpp"
#include "shiftbp/error.hpp"
#include "shiftbp/genfun.hpp"
#include "shiftbp/io.hpp"
#include "shiftbp/law.hpp"
#include "shiftbp/roots.hpp"
#include "shiftbp/simulate.hpp"
#include "shiftbp/verify.hpp"

namespace shiftbp {

enum ExitCode : int { kExitOk = 0, kExitVerifyFailed = 1, kExitValidation = 2, kExitRegime = 3, kExitNoConvergence = 4 };

struct CliContext {
  std::string command_line;
  std::string report_path;  // empty: no run report
  std::ostream* out = nullptr;
  std::ostream* err = nullptr;
};

struct RunReport {
  std::string command;
  std::optional<std::string> law_hash;
  json outputs = json::object();
  json checks = json::array();
  double timing_s = 0.0;
  int exit_code = 0;
  std::string error;

  json to_json() const {
    json j = {{"command", command},     {"law_hash", law_hash ? json(*law_hash) : json(nullptr)},
              {"outputs", outputs},     {"checks", checks},
              {"timing_s", timing_s},   {"exit_code", exit_code}};
    if (!error.empty()) j["error"] = error;
    return j;
  }
};

namespace detail {

inline std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.15g", v);
  return buf;
}

// Runs `body`, maps library errors onto exit codes, and writes the report.
inline int run_command(const CliContext& ctx, const std::function<int(RunReport&)>& body) {
  RunReport rep;
  rep.command = ctx.command_line;
  const auto t0 = std::chrono::steady_clock::now();
  int code = kExitOk;
  try {
    code = body(rep);
  } catch (const ParseError& e) {
    rep.error = e.what(), code = kExitValidation;
  } catch (const ValidationError& e) {
    rep.error = e.what(), code = kExitValidation;
  } catch (const BracketError& e) {
    rep.error = e.what(), code = kExitValidation;
  } catch (const RegimeError& e) {
    rep.error = e.what(), code = kExitRegime;
  } catch (const NotFound& e) {
    rep.error = e.what(), code = kExitNoConvergence;
  } catch (const std::exception& e) {
    rep.error = e.what(), code = kExitVerifyFailed;
  }
  if (!rep.error.empty()) *ctx.err << "error: " << rep.error << '\n';
  rep.timing_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  rep.exit_code = code;
  if (!ctx.report_path.empty()) {
    try {
      write_json_file(ctx.report_path, rep.to_json());
    } catch (const Error& e) {
      *ctx.err << "error: " << e.what() << '\n';
      if (code == kExitOk) code = kExitValidation;
    }
  }
  return code;
}

inline json assumptions_json(const AssumptionReport& a) {
  return {{"a1", a.a1},   {"a1_witness", a.a1_witness}, {"a1_oracle", a.a1_oracle},
          {"a2", a.a2},   {"a3", a.a3},                 {"regime", to_string(a.regime)}};
}

inline void print_assumptions(std::ostream& os, const AssumptionReport& a) {
  auto pf = [](bool b) { return b ? "pass" : "fail"; };
  os << "assumptions: A1 " << pf(a.a1) << " (reachability oracle " << pf(a.a1_oracle) << ")";
  if (!a.a1) os << " [" << a.a1_witness << "]";
  os << ", A2 " << pf(a.a2) << ", A3 " << pf(a.a3) << '\n';
  os << "regime: " << to_string(a.regime) << '\n';
}

}  // namespace detail

// ---- analyze ------------------------------------------------------------------

inline int cmd_analyze(const std::string& law_path, const CliContext& ctx) {
  return detail::run_command(ctx, [&](RunReport& rep) {
    const OffspringLaw law = load_law(law_path);
    rep.law_hash = law_hash(law);
    const MomentSummary s = moments(law);
    const AssumptionReport a = check_assumptions(law, s);
    const RootResult q = solve_q(s);
    const auto g = solve_gamma(s);
    auto& os = *ctx.out;
    os << "law: " << law.name() << " (hash " << *rep.law_hash << ")\n";
    os << "K = " << s.K() << "\nM_k:";
    for (double m : s.Mk) os << ' ' << detail::num(m);
    os << "\nM = " << detail::num(s.M) << '\n';
    detail::print_assumptions(os, a);
    os << "q = " << detail::num(q.value) << '\n';
    os << "gamma = " << (g ? detail::num(g->value) : std::string("NoRootInRegime")) << '\n';
    const std::string theta = s.supercritical() ? "{" + detail::num(q.value) + "*1, 1}" : "{1}";
    os << "Theta = " << theta << '\n';

    rep.outputs = {{"Mk", s.Mk},
                   {"M", s.M},
                   {"h", s.h},
                   {"f0_coeffs", s.f0_coeffs},
                   {"assumptions", detail::assumptions_json(a)},
                   {"q", q.value},
                   {"gamma", g ? json(g->value) : json("NoRootInRegime")},
                   {"theta", theta}};
    return kExitOk;
  });
}

// ---- fixpoint -----------------------------------------------------------------

struct FixpointOptions {
  std::size_t truncate = 0;  // head length; 0 = default horizon
  std::optional<double> seed_amplitude;
  double conv_tol = 1e-10;
  std::string out_path;  // empty: candidate JSON on stdout
  std::string csv_path;
};

inline int cmd_fixpoint(const std::string& law_path, const FixpointOptions& opt, const CliContext& ctx) {
  return detail::run_command(ctx, [&](RunReport& rep) {
    const OffspringLaw law = load_law(law_path);
    rep.law_hash = law_hash(law);
    const MomentSummary s = moments(law);
    const AssumptionReport a = check_assumptions(law, s);
    if (!s.supercritical()) throw RegimeError("law is not supercritical (M = " + detail::num(s.M) + " <= 1)");
    if (!a.a1 || !a.a3) throw ValidationError("law violates the standing assumptions (A1/A3)");
    if (!(opt.conv_tol > 0.0)) throw ValidationError("--conv-tol must be positive");

    ConstructParams p;
    p.conv_tol = opt.conv_tol;
    p.horizon = opt.truncate;
    if (opt.seed_amplitude) {
      const double one_minus_q = 1.0 - solve_q(s).value;
      const double A = *opt.seed_amplitude;
      if (!(A > 0.0 && A < one_minus_q))
        throw ValidationError("--seed-amplitude must lie in (0, 1-q) = (0, " + detail::num(one_minus_q) + ")");
      p.seed = TailSeed{A, require_gamma(s).value, 1};
    }
    const Candidate c = construct_fixed_point(law, s, p);
    const json doc = to_json(c, law);
    if (opt.out_path.empty())
      *ctx.out << doc.dump(2) << '\n';
    else
      write_json_file(opt.out_path, doc);
    if (!opt.csv_path.empty()) {
      std::ofstream csv(opt.csv_path);
      if (!csv) throw ValidationError("cannot write '" + opt.csv_path + "'");
      write_diagnostics_csv(csv, law, s, c.u);
    }
    *ctx.err << (c.converged ? "converged" : "NOT converged") << ": sup residual " << detail::num(c.sup_residual())
             << ", u1 = " << detail::num(c.u(1)) << ", crossings " << c.provenance.crossings << '\n';
    rep.outputs = {{"converged", c.converged},
                   {"sup_residual", c.sup_residual()},
                   {"u1", c.u(1)},
                   {"head_length", c.u.size()},
                   {"crossings", c.provenance.crossings}};
    rep.checks.push_back({{"name", "residual_bound"}, {"pass", c.sup_residual() <= kFixedPointResidualTol}});
    return c.converged ? kExitOk : kExitNoConvergence;
  });
}

// ---- family -------------------------------------------------------------------

struct FamilyOptions {
  std::size_t count = 1;
  std::string direction = "prepend";
  std::string out_path;
};

inline Direction parse_direction(const std::string& d) {
  if (d == "prepend") return Direction::Prepend;
  if (d == "shift_left") return Direction::ShiftLeft;
  throw ValidationError("unknown direction '" + d + "' (expected prepend or shift_left)");
}

inline int cmd_family(const std::string& law_path, const std::string& candidate_path, const FamilyOptions& opt,
                      const CliContext& ctx) {
  return detail::run_command(ctx, [&](RunReport& rep) {
    const OffspringLaw law = load_law(law_path);
    rep.law_hash = law_hash(law);
    const Direction dir = parse_direction(opt.direction);
    if (opt.count < 1) throw ValidationError("--count must be >= 1");
    // A stale candidate is a validation problem whatever the law's regime.
    const json cdoc = read_json_file(candidate_path);
    require_same_law(cdoc, law);
    const MomentSummary s = moments(law);
    if (!s.supercritical()) throw RegimeError("law is not supercritical");
    const Candidate base = candidate_from_json(cdoc, law);
    const FamilyReport f = family(law, s, base, opt.count, dir);
    const json doc = to_json(f, law);
    if (opt.out_path.empty())
      *ctx.out << doc.dump(2) << '\n';
    else
      write_json_file(opt.out_path, doc);
    *ctx.err << f.members.size() << " members (" << to_string(dir) << "), "
             << (f.all_ordered() ? "strictly ordered" : "ORDERING VIOLATED") << '\n';
    rep.outputs = {{"count", f.members.size()}, {"direction", to_string(dir)}, {"all_ordered", f.all_ordered()}};
    rep.checks.push_back({{"name", "strict_ordering"}, {"pass", f.all_ordered()}});
    return f.all_ordered() ? kExitOk : kExitVerifyFailed;
  });
}

// ---- simulate -----------------------------------------------------------------

struct SimulateOptions {
  std::int64_t trials = 1000;
  std::uint64_t seed = 0;
  std::string typeset = "global";
  int max_generations = 500;
  std::int64_t max_population = 1'000'000;
  std::string out_path;
};

inline int cmd_simulate(const std::string& law_path, const SimulateOptions& opt, const CliContext& ctx) {
  return detail::run_command(ctx, [&](RunReport& rep) {
    const OffspringLaw law = load_law(law_path);
    rep.law_hash = law_hash(law);
    SimConfig cfg;
    cfg.trials = opt.trials;
    cfg.seed = opt.seed;
    cfg.typeset = parse_typeset(opt.typeset);
    cfg.max_generations = opt.max_generations;
    cfg.max_population = opt.max_population;
    cfg.validate();
    const ExtinctionEstimate e = estimate_extinction(law, cfg);
    const json doc = to_json(e, law);
    if (opt.out_path.empty())
      *ctx.out << doc.dump(2) << '\n';
    else
      write_json_file(opt.out_path, doc);
    *ctx.err << "p_hat = " << detail::num(e.p_hat) << " [" << detail::num(e.wilson_ci_95.lo) << ", "
             << detail::num(e.wilson_ci_95.hi) << "] over " << cfg.trials << " trials (" << to_string(cfg.typeset)
             << ")\n";
    rep.outputs = doc;
    return kExitOk;
  });
}

// ---- verify -------------------------------------------------------------------

inline int cmd_verify(const std::string& law_path, const CliContext& ctx, VerifyOptions vopt = {}) {
  return detail::run_command(ctx, [&](RunReport& rep) {
    const OffspringLaw law = load_law(law_path);
    rep.law_hash = law_hash(law);
    const MomentSummary s = moments(law);
    const AssumptionReport a = check_assumptions(law, s);
    auto& os = *ctx.out;
    detail::print_assumptions(os, a);
    rep.outputs = {{"assumptions", detail::assumptions_json(a)}};
    if (!a.a1 || !a.a3) {
      os << "verify refused: the law violates A1 or A3\n";
      return static_cast<int>(kExitValidation);
    }
    const VerifyReport vr = run_verify(law, s, vopt);
    for (const auto& it : vr.items) {
      os << "  [" << to_string(it.status) << "] " << it.name;
      if (!it.detail.empty()) os << ": " << it.detail;
      os << '\n';
      rep.checks.push_back({{"name", it.name}, {"status", to_string(it.status)}, {"detail", it.detail}});
    }
    os << (vr.failed() ? "verify: FAILED\n" : "verify: all checks passed\n");
    return vr.failed() ? static_cast<int>(kExitVerifyFailed) : static_cast<int>(kExitOk);
  });
}

}  // namespace shiftbp
