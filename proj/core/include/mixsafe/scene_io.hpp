/*
 * Copyright (C) 2026 The mixsafe Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 *
*/

#ifndef MIXSAFE__SCENE_IO_HPP
#define MIXSAFE__SCENE_IO_HPP

#include <mixsafe/geometry.hpp>

#include <filesystem>
#include <string>

namespace mixsafe {
namespace geometry {

/// Scene document layout, units in meters:
///
///   {
///     "robot_paths":   [{"id": 0, "waypoints": [[x, y], ...]}, ...],
///     "vehicle_lanes": [{"id": 10, "waypoints": [[x, y], ...]}, ...],
///     "conflict_points": [{"x": .., "y": .., "path_a": 0, "path_b": 10}, ...]
///   }
///
/// Conflict points are informational on output and always recomputed on
/// input. Path ids must be unique across both lists.
std::string scene_to_json(const PathNetwork& network);

/// Throws ConfigError on malformed documents and ValidationError on invalid
/// paths.
PathNetwork scene_from_json(const std::string& document);

void save_scene(const std::filesystem::path& file, const PathNetwork& network);
PathNetwork load_scene(const std::filesystem::path& file);

} // namespace geometry
} // namespace mixsafe

#endif // MIXSAFE__SCENE_IO_HPP
