#pragma once

// JSON scenario files. Layout:
//
//   {
//     "grid":   {"points": [...]},
//     "effort": {"levels": [...], "costs": [...]},
//     "dist":   {"rows": [[...], ...], "allowZeros": false}
//            or {"tilt": 2.0, "baseWeights": [...]}      (exponential-tilt family)
//     "tech":   {"kind": "linear", "rate": r} | {"kind": "convex_power", "gamma": g}
//             | {"kind": "quadratic", "twoSided": false} | {"kind": "tabulated", "knots": [[z, c], ...]},
//     "utility": {"kind": "risk_neutral"} | {"kind": "crra", "rho": p} | {"kind": "cara", "alpha": a},
//     "Q": 1.0, "marketRate": 0.0, "outsideUtility": 0.0,
//     "feasibilityMode": "payBoundM" | "payBoundX",
//     "objective": "financier" | "entrepreneur"
//   }
//
// Only grid, effort and dist are required.

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "contractlab/model.hpp"
#include "contractlab/orders.hpp"

namespace contractlab {

class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

using json = nlohmann::json;

inline double finite_number(const json& j, const std::string& where) {
  if (!j.is_number()) throw ScenarioError(where + ": expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ScenarioError(where + ": NaN/Inf not permitted");
  return v;
}

inline std::vector<double> number_array(const json& j, const std::string& where) {
  if (!j.is_array()) throw ScenarioError(where + ": expected an array");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(finite_number(j[i], concat(where, "[", i, "]")));
  return out;
}

inline const json& require(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw ScenarioError(where + ": missing \"" + key + "\"");
  return j.at(key);
}

inline double optional_number(const json& j, const char* key, double fallback, const std::string& where) {
  return j.contains(key) ? finite_number(j.at(key), where + "." + key) : fallback;
}

inline ManipulationTech tech_from_json(const json& t) {
  const std::string kind = require(t, "kind", "tech").get<std::string>();
  if (kind == "linear") return LinearTech{optional_number(t, "rate", 0.0, "tech")};
  if (kind == "convex_power") return ConvexPowerTech{finite_number(require(t, "gamma", "tech"), "tech.gamma")};
  if (kind == "quadratic") return QuadraticTech{t.value("twoSided", false)};
  if (kind == "tabulated") {
    TabulatedTech out;
    const auto& knots = require(t, "knots", "tech");
    if (!knots.is_array()) throw ScenarioError("tech.knots: expected an array");
    for (std::size_t i = 0; i < knots.size(); ++i) {
      auto pair = number_array(knots[i], concat("tech.knots[", i, "]"));
      if (pair.size() != 2) throw ScenarioError(concat("tech.knots[", i, "]: expected [z, cost]"));
      out.knots.emplace_back(pair[0], pair[1]);
    }
    return out;
  }
  throw ScenarioError("tech.kind: unknown kind \"" + kind + "\"");
}

inline json tech_to_json(const ManipulationTech& tech) {
  return std::visit(
      [](const auto& t) -> json {
        using T = std::decay_t<decltype(t)>;
        if constexpr (std::is_same_v<T, LinearTech>) return {{"kind", "linear"}, {"rate", t.rate}};
        else if constexpr (std::is_same_v<T, ConvexPowerTech>) return {{"kind", "convex_power"}, {"gamma", t.gamma}};
        else if constexpr (std::is_same_v<T, QuadraticTech>) return {{"kind", "quadratic"}, {"twoSided", t.two_sided}};
        else {
          json knots = json::array();
          for (const auto& [z, c] : t.knots) knots.push_back({z, c});
          return {{"kind", "tabulated"}, {"knots", knots}};
        }
      },
      tech);
}

inline Utility utility_from_json(const json& u) {
  const std::string kind = require(u, "kind", "utility").get<std::string>();
  if (kind == "risk_neutral") return RiskNeutral{};
  if (kind == "crra") return Crra{finite_number(require(u, "rho", "utility"), "utility.rho")};
  if (kind == "cara") return Cara{finite_number(require(u, "alpha", "utility"), "utility.alpha")};
  throw ScenarioError("utility.kind: unknown kind \"" + kind + "\"");
}

inline json utility_to_json(const Utility& u) {
  if (const auto* c = std::get_if<Crra>(&u)) return {{"kind", "crra"}, {"rho", c->rho}};
  if (const auto* a = std::get_if<Cara>(&u)) return {{"kind", "cara"}, {"alpha", a->alpha}};
  return {{"kind", "risk_neutral"}};
}

}  // namespace detail

inline Scenario scenario_from_json(const nlohmann::json& j) {
  using detail::require;
  Scenario s;
  s.grid.points = detail::number_array(require(require(j, "grid", "scenario"), "points", "grid"), "grid.points");
  const auto& e = require(j, "effort", "scenario");
  s.effort.levels = detail::number_array(require(e, "levels", "effort"), "effort.levels");
  s.effort.costs = detail::number_array(require(e, "costs", "effort"), "effort.costs");

  const auto& d = require(j, "dist", "scenario");
  if (d.contains("rows")) {
    const auto& rows = d.at("rows");
    if (!rows.is_array()) throw ScenarioError("dist.rows: expected an array");
    for (std::size_t i = 0; i < rows.size(); ++i)
      s.dist.rows.push_back(detail::number_array(rows[i], detail::concat("dist.rows[", i, "]")));
    s.dist.allow_zeros = d.value("allowZeros", false);
  } else if (d.contains("tilt")) {
    std::vector<double> base;
    if (d.contains("baseWeights")) base = detail::number_array(d.at("baseWeights"), "dist.baseWeights");
    try {
      s.dist = make_mlrp_family(s.grid, s.effort, detail::finite_number(d.at("tilt"), "dist.tilt"), base);
    } catch (const std::exception& ex) {
      throw ScenarioError(std::string("dist.tilt: ") + ex.what());
    }
  } else {
    throw ScenarioError("dist: expected \"rows\" or \"tilt\"");
  }

  if (j.contains("tech")) s.tech = detail::tech_from_json(j.at("tech"));
  if (j.contains("utility")) s.utility = detail::utility_from_json(j.at("utility"));
  s.capital = detail::optional_number(j, "Q", 0.0, "scenario");
  s.market_rate = detail::optional_number(j, "marketRate", 0.0, "scenario");
  s.outside_utility = detail::optional_number(j, "outsideUtility", 0.0, "scenario");
  const std::string mode = j.value("feasibilityMode", "payBoundM");
  if (mode == "payBoundM") s.mode = FeasibilityMode::PayBoundM;
  else if (mode == "payBoundX") s.mode = FeasibilityMode::PayBoundX;
  else throw ScenarioError("feasibilityMode: unknown value \"" + mode + "\"");
  const std::string obj = j.value("objective", "financier");
  if (obj == "financier") s.objective = Objective::Financier;
  else if (obj == "entrepreneur") s.objective = Objective::Entrepreneur;
  else throw ScenarioError("objective: unknown value \"" + obj + "\"");
  return s;
}

// Distributions are always written as explicit rows.
inline nlohmann::json scenario_to_json(const Scenario& s) {
  nlohmann::json j;
  j["grid"] = {{"points", s.grid.points}};
  j["effort"] = {{"levels", s.effort.levels}, {"costs", s.effort.costs}};
  j["dist"] = {{"rows", s.dist.rows}, {"allowZeros", s.dist.allow_zeros}};
  j["tech"] = detail::tech_to_json(s.tech);
  j["utility"] = detail::utility_to_json(s.utility);
  j["Q"] = s.capital;
  j["marketRate"] = s.market_rate;
  j["outsideUtility"] = s.outside_utility;
  j["feasibilityMode"] = s.mode == FeasibilityMode::PayBoundM ? "payBoundM" : "payBoundX";
  j["objective"] = s.objective == Objective::Financier ? "financier" : "entrepreneur";
  return j;
}

inline Scenario parse_scenario(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ScenarioError(std::string("invalid JSON: ") + e.what());
  }
  try {
    return scenario_from_json(j);
  } catch (const nlohmann::json::exception& e) {
    throw ScenarioError(std::string("malformed scenario: ") + e.what());
  }
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot open scenario file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse_scenario(buf.str());
  } catch (const ScenarioError& e) {
    throw ScenarioError(path + ": " + e.what());
  }
}

inline void save_scenario(const Scenario& s, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ScenarioError("cannot write scenario file " + path);
  out << scenario_to_json(s).dump(2) << '\n';
  if (!out) throw ScenarioError("write failed for " + path);
}

inline nlohmann::json contract_to_json(const Contract& c) { return nlohmann::json{{"y", c.y}}; }

}  // namespace contractlab
