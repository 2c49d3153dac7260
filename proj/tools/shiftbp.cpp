#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "shiftbp/cli.hpp"

int main(int argc, char** argv) {
  using namespace shiftbp;
  CLI::App app{"Shift-invariant branching processes: extinction, fixed points, simulation"};
  app.require_subcommand(1);

  std::string command_line;
  for (int i = 0; i < argc; ++i) command_line += (i ? " " : "") + std::string(argv[i]);
  CliContext ctx{command_line, "", &std::cout, &std::cerr};

  std::string law_path, candidate_path;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("law", law_path, "Law document (JSON file)")->required();
    sub->add_option("--report", ctx.report_path, "Write a JSON run report to this path");
  };

  auto* analyze = app.add_subcommand("analyze", "Moments, assumptions, q, gamma and the extinction set");
  add_common(analyze);

  FixpointOptions fix;
  auto* fixpoint = app.add_subcommand("fixpoint", "Construct a non-trivial fixed point");
  add_common(fixpoint);
  fixpoint->add_option("--truncate", fix.truncate, "Head length of the packaged candidate (0 = default)");
  fixpoint->add_option("--seed-amplitude", fix.seed_amplitude, "Seed amplitude A in (0, 1-q)");
  fixpoint->add_option("--conv-tol", fix.conv_tol, "Cauchy tolerance between successive crossings");
  fixpoint->add_option("--out", fix.out_path, "Candidate document path (default: stdout)");
  fixpoint->add_option("--csv", fix.csv_path, "Per-coordinate diagnostics CSV path");

  FamilyOptions fam;
  auto* family_cmd = app.add_subcommand("family", "Grow the countable family from a converged candidate");
  add_common(family_cmd);
  family_cmd->add_option("candidate", candidate_path, "Candidate document")->required();
  family_cmd->add_option("--count", fam.count, "Number of members");
  family_cmd->add_option("--direction", fam.direction, "prepend | shift_left")
      ->check(CLI::IsMember({"prepend", "shift_left"}));
  family_cmd->add_option("--out", fam.out_path, "Family document path (default: stdout)");

  SimulateOptions sim;
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo extinction estimate");
  add_common(simulate);
  simulate->add_option("--trials", sim.trials, "Number of trials");
  simulate->add_option("--seed", sim.seed, "RNG seed");
  simulate->add_option("--typeset", sim.typeset, "global | finite:lo..hi | mod:r,m");
  simulate->add_option("--max-gen", sim.max_generations, "Generation cap");
  simulate->add_option("--max-pop", sim.max_population, "Population cap");
  simulate->add_option("--out", sim.out_path, "Estimate document path (default: stdout)");

  auto* verify = app.add_subcommand("verify", "Run the property self-check suite");
  add_common(verify);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  if (analyze->parsed()) return cmd_analyze(law_path, ctx);
  if (fixpoint->parsed()) return cmd_fixpoint(law_path, fix, ctx);
  if (family_cmd->parsed()) return cmd_family(law_path, candidate_path, fam, ctx);
  if (simulate->parsed()) return cmd_simulate(law_path, sim, ctx);
  if (verify->parsed()) return cmd_verify(law_path, ctx);
  return kExitValidation;
}
