#pragma once

#include <json.hpp>

#include "dynabench/expert.hpp"
#include "dynabench/outcome.hpp"
#include "dynabench/trajectories.hpp"
#include "dynabench/world.hpp"

/// JSON forms of the value types that appear in episode headers and manifests.
/// Readers throw nlohmann::json exceptions or DomainError on malformed input.
namespace dynabench::harness {

using nlohmann::json;

json to_json(Vec2 v);
Vec2 vec2_from_json(const json& j);
json to_json(const Rect& r);
Rect rect_from_json(const json& j);

json to_json(const traj::TrajectorySpec& spec);
traj::TrajectorySpec trajectory_from_json(const json& j);

json to_json(const sim::TaskSpec& task);
sim::TaskSpec task_from_json(const json& j);

json to_json(const Outcome& outcome);
Outcome outcome_from_json(const json& j);

json to_json(const expert::DatasetManifest& manifest);
expert::DatasetManifest manifest_from_json(const json& j);

}  // namespace dynabench::harness
