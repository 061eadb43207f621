#pragma once

#include <cstddef>
#include <string_view>

#include <json.hpp>

#include "psdg/generation.hpp"
#include "psdg/grammar.hpp"
#include "psdg/inference.hpp"

namespace psdg {

/// {"Feature": "value", ...}
nlohmann::json state_to_json(const Psdg& g, const StatePoint& state);

/// {"trajectory": k, "seed": s, "q0": {...}, "steps": n, "completed": b}
nlohmann::json trajectory_header_json(const Psdg& g, const Trajectory& trajectory, std::size_t index);

/// {"trajectory": k, "t": t, "stack": [{level, symbol, production, cursor}...],
///  "terminal": x, "state": {...}}
nlohmann::json trajectory_step_json(const Psdg& g, const Trajectory& trajectory, std::size_t t,
                                    std::size_t index);

/// {"t": t, "observe": {"Feature": ["value"], ...}} pinning every feature.
nlohmann::json observation_json(const Psdg& g, std::size_t t, const StatePoint& state);

/// Inverse of observation_json; omitted features are unconstrained and a
/// single string stands for a one-element list. Throws FormatError.
Observation observation_from_json(const Psdg& g, const nlohmann::json& j);
Observation parse_observation_line(const Psdg& g, std::string_view line);

nlohmann::json plans_to_json(const Psdg& g, const FrameCatalog& frames, const PlanDistribution& plans);
nlohmann::json report_to_json(const Psdg& g, const FrameCatalog& frames, const StepReport& report);

}  // namespace psdg
