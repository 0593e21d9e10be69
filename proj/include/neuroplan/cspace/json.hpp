#pragma once

#include "neuroplan/cspace/types.hpp"

#include <json.hpp>

namespace neuroplan {

/// {"bounds": [[lo, hi], ...], "obstacles": [{"center": [...], "half_extents": [...]}, ...]}
[[nodiscard]] nlohmann::json workspace_to_json(const Workspace& ws);
[[nodiscard]] Workspace workspace_from_json(const nlohmann::json& j);

/// {"kind": "point2d" | "point3d" | "rigid_se2", "goal_radius": r, "body": [[x, y], ...]}
[[nodiscard]] nlohmann::json robot_to_json(const RobotModel& robot);
[[nodiscard]] RobotModel robot_from_json(const nlohmann::json& j);

[[nodiscard]] nlohmann::json config_to_json(const Config& c);
[[nodiscard]] Config config_from_json(const RobotModel& robot, const nlohmann::json& j);

/// Array of coordinate arrays.
[[nodiscard]] nlohmann::json path_to_json(const Path& p);
[[nodiscard]] Path path_from_json(const RobotModel& robot, const nlohmann::json& j);

} // namespace neuroplan
