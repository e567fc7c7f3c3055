#pragma once

#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "fairgat/bounds.hpp"
#include "fairgat/train.hpp"

namespace fairgat {

inline constexpr const char* kArtifactVersion = "0.1.0";

nlohmann::json bound_report_to_json(const BoundReport& report);

/// Full run report: resolved config, per-seed results, aggregates, and flat
/// metric records {metric, value, grouping, seed, split}.
nlohmann::json run_report_to_json(const RunReport& report);

std::string render_run_table(const RunReport& report);
std::string render_bound_table(const BoundReport& report);

/// Ablation comparison in the five-mode layout (GAT, the three 2-subsets,
/// full FairGAT).
std::string render_ablation_table(
    const std::vector<std::pair<std::string, RunReport>>& rows);

nlohmann::json ablation_to_json(
    const std::vector<std::pair<std::string, RunReport>>& rows);

}  // namespace fairgat
