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

#include <mixsafe/scene_io.hpp>
#include <mixsafe/errors.hpp>

#include <nlohmann/json.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace mixsafe {
namespace geometry {

using nlohmann::json;

namespace {

//==============================================================================
json path_to_json(const Path& path)
{
  json wps = json::array();
  for (const auto& p : path.waypoints())
    wps.push_back({p.x(), p.y()});
  return {{"id", path.id()}, {"waypoints", wps}};
}

//==============================================================================
std::vector<Path> paths_from_json(const json& list, std::set<int>& seen)
{
  std::vector<Path> out;
  for (const auto& entry : list)
  {
    const int id = entry.at("id").get<int>();
    if (!seen.insert(id).second)
      throw ConfigError("duplicate path id " + std::to_string(id));

    std::vector<Point> wps;
    for (const auto& p : entry.at("waypoints"))
    {
      if (!p.is_array() || p.size() != 2)
        throw ConfigError("waypoints must be [x, y] pairs");
      wps.emplace_back(p[0].get<double>(), p[1].get<double>());
    }
    out.emplace_back(id, std::move(wps));
  }
  return out;
}

} // anonymous namespace

//==============================================================================
std::string scene_to_json(const PathNetwork& network)
{
  json doc;
  doc["robot_paths"] = json::array();
  for (const auto& p : network.robot_paths)
    doc["robot_paths"].push_back(path_to_json(p));

  doc["vehicle_lanes"] = json::array();
  for (const auto& p : network.vehicle_lanes)
    doc["vehicle_lanes"].push_back(path_to_json(p));

  doc["conflict_points"] = json::array();
  for (const auto& c : network.conflict_points)
  {
    doc["conflict_points"].push_back(
      {{"x", c.position.x()}, {"y", c.position.y()},
       {"path_a", c.path_a}, {"path_b", c.path_b}});
  }

  return doc.dump(2);
}

//==============================================================================
PathNetwork scene_from_json(const std::string& document)
{
  try
  {
    const json doc = json::parse(document);
    std::set<int> seen;
    PathNetwork network;
    network.robot_paths = paths_from_json(doc.at("robot_paths"), seen);
    network.vehicle_lanes = paths_from_json(doc.at("vehicle_lanes"), seen);
    network.conflict_points = compute_conflict_points(network);
    return network;
  }
  catch (const json::exception& e)
  {
    throw ConfigError(std::string("malformed scene document: ") + e.what());
  }
}

//==============================================================================
void save_scene(const std::filesystem::path& file, const PathNetwork& network)
{
  std::ofstream out(file);
  if (!out)
    throw ConfigError("cannot write scene file " + file.string());
  out << scene_to_json(network) << '\n';
}

//==============================================================================
PathNetwork load_scene(const std::filesystem::path& file)
{
  std::ifstream in(file);
  if (!in)
    throw ConfigError("cannot read scene file " + file.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return scene_from_json(buffer.str());
}

} // namespace geometry
} // namespace mixsafe
