#pragma once

// JSON serialization of the public report types (stable field names).

#include <json.hpp>

#include "steinops/bounds.hpp"
#include "steinops/suite.hpp"
#include "steinops/verify.hpp"

namespace steinops {

inline nlohmann::ordered_json to_json(const Tolerance& t) {
  return {{"abs", t.abs},
          {"rel", t.rel},
          {"max_subdiv", t.max_subdiv},
          {"tail_tol", t.tail_tol}};
}

inline nlohmann::ordered_json to_json(const BoundReport& r) {
  nlohmann::ordered_json j{{"lower", r.lower},
                           {"center", r.center},
                           {"upper", r.upper},
                           {"weight_provenance", r.weight_provenance},
                           {"boundary_status", r.boundary_status}};
  if (!r.boundary_details.empty()) j["boundary_details"] = r.boundary_details;
  j["tolerances_achieved"] = to_json(r.tolerances_achieved);
  return j;
}

inline nlohmann::ordered_json to_json(const verify::ConditionReport& r) {
  return {{"ibp_v1", {{"residual", r.v1_residual}, {"pass", r.v1_pass}}},
          {"ibp_v2", {{"residual", r.v2_residual}, {"pass", r.v2_pass}}},
          {"boundary_products",
           {{"left", r.boundary_left},
            {"right", r.boundary_right},
            {"match", r.boundary_match}}},
          {"integrability_flags",
           {{"f", r.f_integrable},
            {"g", r.g_integrable},
            {"fg", r.fg_integrable},
            {"lf_dg", r.lf_dg_integrable}}}};
}

inline nlohmann::ordered_json to_json(const SuiteReport& r) {
  nlohmann::ordered_json cases = nlohmann::ordered_json::array();
  for (const auto& c : r.cases) {
    nlohmann::ordered_json jc{{"id", c.id},
                              {"residual", c.residual},
                              {"threshold", c.threshold},
                              {"verdict", c.skipped ? "skip"
                                          : c.pass  ? "pass"
                                                    : "fail"}};
    if (!c.note.empty()) jc["note"] = c.note;
    cases.push_back(std::move(jc));
  }
  return {{"cases", std::move(cases)},
          {"failures", r.failures()},
          {"all_pass", r.all_pass()}};
}

}  // namespace steinops
