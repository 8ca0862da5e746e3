#pragma once

// JSON form of a run: {manifold, mode, degree, checks: [...]}. Timing is left
// out so that output is reproducible.

#include "biflat/report.hpp"

#include "json.hpp"

namespace biflat {

inline nlohmann::json to_json(const CheckReport& r) {
    nlohmann::json samples = nlohmann::json::array();
    for (const auto& [k, v] : r.samples) samples.push_back({{"name", k}, {"value", v}});
    nlohmann::json j = {
        {"name", r.name},
        {"anchor", r.anchor},
        {"status", to_string(r.status)},
        {"residual",
         {{"exact", r.residual.exact},
          {"zero", r.residual.zero},
          {"max_abs", r.residual.max_abs},
          {"certified_order", r.residual.certified_order},
          {"components", r.residual.components}}},
        {"samples", samples},
    };
    if (!r.detail.empty()) j["detail"] = r.detail;
    return j;
}

inline nlohmann::json run_to_json(const std::string& manifold, const std::string& mode, int degree,
                                  const std::vector<CheckReport>& reports) {
    nlohmann::json checks = nlohmann::json::array();
    for (const auto& r : reports) checks.push_back(to_json(r));
    return {{"manifold", manifold}, {"mode", mode}, {"degree", degree}, {"checks", checks}};
}

}  // namespace biflat
