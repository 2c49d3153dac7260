#pragma once

// JSON documents for candidates, families and extinction estimates. Every
// derived document carries the law name and hash; readers refuse documents
// whose hash does not match the law they are given.

#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "shiftbp/construct.hpp"
#include "shiftbp/error.hpp"
#include "shiftbp/law.hpp"
#include "shiftbp/simulate.hpp"

namespace shiftbp {

using nlohmann::json;

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError("malformed JSON in '" + path + "': " + e.what());
  }
}

inline void write_json_file(const std::string& path, const json& doc) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write '" + path + "'");
  out << doc.dump(2) << '\n';
}

inline json law_ref(const OffspringLaw& law) { return {{"name", law.name()}, {"hash", law_hash(law)}}; }

inline void require_kind(const json& doc, const char* kind) {
  if (!doc.is_object() || doc.value("kind", "") != kind)
    throw ParseError(std::string("expected a ") + kind + " document");
}

inline void require_same_law(const json& doc, const OffspringLaw& law) {
  if (!doc.contains("law") || !doc["law"].is_object() || !doc["law"].contains("hash"))
    throw ParseError("document lacks a law reference");
  const auto h = doc["law"]["hash"].get<std::string>();
  if (h != law_hash(law))
    throw ValidationError("law hash mismatch: document was produced for " + h + ", law is " + law_hash(law));
}

// ---- candidates -------------------------------------------------------------

inline json to_json(const Provenance& p) {
  return {{"origin", p.origin},       {"amplitude", p.amplitude},       {"ratio", p.ratio},
          {"y0", p.y0},               {"N0", p.N0},                     {"step", p.step},
          {"tail_start", p.tail_start}, {"prepend_count", p.prepend_count}, {"crossings", p.crossings},
          {"conv_tol", p.conv_tol},   {"trace", p.trace}};
}

inline Provenance provenance_from_json(const json& j) {
  Provenance p;
  p.origin = j.at("origin").get<std::string>();
  p.amplitude = j.at("amplitude").get<double>();
  p.ratio = j.at("ratio").get<double>();
  p.y0 = j.at("y0").get<double>();
  p.N0 = j.at("N0").get<std::size_t>();
  p.step = j.at("step").get<std::size_t>();
  p.tail_start = j.at("tail_start").get<std::size_t>();
  p.prepend_count = j.at("prepend_count").get<std::size_t>();
  p.crossings = j.at("crossings").get<std::size_t>();
  p.conv_tol = j.at("conv_tol").get<double>();
  p.trace = j.at("trace").get<std::vector<double>>();
  return p;
}

inline json ratio_summary(const RatioDiagnostics& d) {
  if (d.alpha.empty()) return nullptr;
  const std::size_t half = d.alpha.size() / 2;
  double amin = d.alpha.front(), amax = amin, udev = 0.0, udev_half = 0.0;
  for (std::size_t t = 0; t < d.alpha.size(); ++t) {
    amin = std::min(amin, d.alpha[t]);
    amax = std::max(amax, d.alpha[t]);
    udev = std::max(udev, std::abs(d.U[t] - 1.0));
    if (t >= half) udev_half = std::max(udev_half, std::abs(d.U[t] - 1.0));
  }
  return {{"first", d.first},       {"last", d.last},          {"alpha_min", amin},
          {"alpha_max", amax},      {"alpha_last", d.alpha.back()}, {"U_max_dev", udev},
          {"U_max_dev_second_half", udev_half}};
}

inline json to_json(const Candidate& c, const OffspringLaw& law) {
  const std::size_t N = c.u.size();
  return {{"kind", "candidate"},
          {"law", law_ref(law)},
          {"u_head", c.u.head()},
          {"tail", {{"ratio", c.u.tail_ratio()}, {"amplitude", c.u(N)}, {"start", N}}},
          {"residual",
           {{"window", c.window()},
            {"sup_window", c.residual.sup_window},
            {"l2_window", c.residual.l2_window},
            {"tail_estimate", c.residual.tail_estimate}}},
          {"ratio", ratio_summary(c.ratio)},
          {"provenance", to_json(c.provenance)},
          {"converged", c.converged}};
}

// Diagnostics are recomputed from the law rather than trusted from the file.
inline Candidate candidate_from_json(const json& doc, const OffspringLaw& law) {
  require_kind(doc, "candidate");
  require_same_law(doc, law);
  try {
    Candidate c;
    c.u = UVector(doc.at("u_head").get<std::vector<double>>(), doc.at("tail").at("ratio").get<double>());
    c.provenance = provenance_from_json(doc.at("provenance"));
    c.converged = doc.at("converged").get<bool>();
    evaluate_candidate(law, moments(law), c);
    return c;
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed candidate document: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ValidationError(std::string("invalid candidate vector: ") + e.what());
  }
}

// ---- families ---------------------------------------------------------------

inline json to_json(const FamilyReport& f, const OffspringLaw& law) {
  json members = json::array();
  for (const auto& m : f.members) members.push_back(to_json(m, law));
  return {{"kind", "family"},           {"law", law_ref(law)},       {"direction", to_string(f.direction)},
          {"count", f.members.size()},  {"ordered", f.ordered},      {"all_ordered", f.all_ordered()},
          {"members", std::move(members)}};
}

inline FamilyReport family_from_json(const json& doc, const OffspringLaw& law) {
  require_kind(doc, "family");
  require_same_law(doc, law);
  FamilyReport f;
  try {
    const auto dir = doc.at("direction").get<std::string>();
    if (dir != "prepend" && dir != "shift_left") throw ParseError("unknown family direction '" + dir + "'");
    f.direction = dir == "prepend" ? Direction::Prepend : Direction::ShiftLeft;
    f.ordered = doc.at("ordered").get<std::vector<bool>>();
    for (const auto& m : doc.at("members")) f.members.push_back(candidate_from_json(m, law));
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed family document: ") + e.what());
  }
  return f;
}

// ---- estimates --------------------------------------------------------------

inline json to_json(const SimConfig& c) {
  return {{"trials", c.trials},
          {"seed", c.seed},
          {"max_generations", c.max_generations},
          {"max_population", c.max_population},
          {"typeset", to_string(c.typeset)},
          {"initial_type", c.initial_type}};
}

inline SimConfig sim_config_from_json(const json& j) {
  SimConfig c;
  c.trials = j.at("trials").get<std::int64_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.max_generations = j.at("max_generations").get<int>();
  c.max_population = j.at("max_population").get<std::int64_t>();
  c.typeset = parse_typeset(j.at("typeset").get<std::string>());
  c.initial_type = j.at("initial_type").get<std::int64_t>();
  return c;
}

inline json to_json(const ExtinctionEstimate& e, const OffspringLaw& law) {
  json doc = {{"kind", "estimate"},
              {"law", law_ref(law)},
              {"config", to_json(e.config)},
              {"p_hat", e.p_hat},
              {"ci", {e.wilson_ci_95.lo, e.wilson_ci_95.hi}},
              {"counts",
               {{"extinct", e.counts.extinct},
                {"survived", e.counts.survived},
                {"local_extinct", e.counts.local_extinct}}},
              {"censored", e.censored}};
  if (e.censored)
    doc["caveat"] = "survival is inferred from hitting the generation or population cap";
  return doc;
}

inline ExtinctionEstimate estimate_from_json(const json& doc, const OffspringLaw& law) {
  require_kind(doc, "estimate");
  require_same_law(doc, law);
  try {
    ExtinctionEstimate e;
    e.config = sim_config_from_json(doc.at("config"));
    e.p_hat = doc.at("p_hat").get<double>();
    e.wilson_ci_95 = {doc.at("ci").at(0).get<double>(), doc.at("ci").at(1).get<double>()};
    const auto& c = doc.at("counts");
    e.counts = {c.at("extinct").get<std::int64_t>(), c.at("survived").get<std::int64_t>(),
                c.at("local_extinct").get<std::int64_t>()};
    e.censored = doc.at("censored").get<bool>();
    return e;
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed estimate document: ") + e.what());
  }
}

}  // namespace shiftbp
