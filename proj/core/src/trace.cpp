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

#include <mixsafe/errors.hpp>
#include <mixsafe/trace.hpp>

#include <nlohmann/json.hpp>

#include <fstream>

namespace mixsafe {
namespace harness {

using nlohmann::json;

namespace {

//==============================================================================
json to_json(const Eigen::VectorXd& v)
{
  return std::vector<double>(v.data(), v.data() + v.size());
}

//==============================================================================
agents::AgentKind kind_from(const std::string& s)
{
  if (s == "vehicle")
    return agents::AgentKind::Vehicle;
  if (s == "robot")
    return agents::AgentKind::Robot;
  throw ConfigError("unknown agent kind '" + s + "' in trace");
}

//==============================================================================
env::PairKind pair_from(const std::string& s)
{
  for (const auto k : {env::PairKind::VehicleVehicle, env::PairKind::VehicleRobot,
         env::PairKind::RobotRobot})
  {
    if (env::to_string(k) == s)
      return k;
  }
  throw ConfigError("unknown collision kind '" + s + "' in trace");
}

} // anonymous namespace

//==============================================================================
void TraceWriter::header(
  const env::WorldState& world,
  const env::EpisodeConfig& config,
  std::uint64_t seed,
  const std::string& variant)
{
  const auto entry = env::begin_trace(world, config, seed);
  json agents_j = json::array();
  for (const auto& a : entry.agents)
  {
    agents_j.push_back({
      {"id", a.id},
      {"kind", agents::to_string(a.kind)},
      {"route_length", a.route_length},
      {"max_speed", a.max_speed}});
  }
  json j = {
    {"type", "header"},
    {"seed", seed},
    {"variant", variant},
    {"dt", config.dt},
    {"max_steps", config.max_steps},
    {"agents", agents_j}};
  _out << j.dump() << '\n';
}

//==============================================================================
void TraceWriter::step(
  const env::WorldState& world,
  const env::JointAction& actions,
  const env::StepResult& result,
  const std::vector<safety::CorrectionRecord>& corrections)
{
  json agents_j = json::array();
  for (const auto& [id, action] : actions)
  {
    const auto& a = world.agent(id);
    const auto pose = agents::pose_of(a.state, *world.network);
    json e = {
      {"id", id},
      {"kind", agents::to_string(a.kind)},
      {"status", env::to_string(a.status)},
      {"x", pose.x()},
      {"y", pose.y()},
      {"heading", pose.heading()},
      {"speed", agents::speed_of(a.state)},
      {"action", to_json(agents::to_vector(action))}};
    if (const auto it = result.rewards.find(id); it != result.rewards.end())
    {
      e["reward"] = {
        {"goal", it->second.goal},
        {"time", it->second.time},
        {"comfort", it->second.comfort},
        {"proximity", it->second.proximity},
        {"total", it->second.total}};
    }
    agents_j.push_back(std::move(e));
  }

  json collisions_j = json::array();
  for (const auto& c : result.collisions)
  {
    collisions_j.push_back({
      {"t", c.time_step}, {"a", c.agent_a}, {"b", c.agent_b},
      {"kind", env::to_string(c.kind)}});
  }

  json corrections_j = json::array();
  for (const auto& c : corrections)
  {
    corrections_j.push_back({
      {"agent", c.agent_id},
      {"nominal", to_json(c.nominal)},
      {"gradient", to_json(c.gradient)},
      {"corrected", to_json(c.corrected)},
      {"cost_before", c.cost_before},
      {"cost_after", c.cost_after},
      {"backtracks", c.backtracks},
      {"accepted", c.accepted},
      {"degraded", c.degraded}});
  }

  json j = {
    {"type", "step"},
    {"t", world.time_step},
    {"agents", agents_j},
    {"collisions", collisions_j},
    {"arrivals", result.arrivals},
    {"corrections", corrections_j}};
  _out << j.dump() << '\n';
}

//==============================================================================
void TraceWriter::end(const env::WorldState& world)
{
  _out << json{{"type", "end"}, {"steps_taken", world.time_step}}.dump() << '\n';
}

//==============================================================================
TraceSummary read_trace(const std::filesystem::path& file)
{
  std::ifstream in(file);
  if (!in)
    throw ConfigError("cannot read trace " + file.string());

  TraceSummary s;
  bool have_header = false;
  std::string line;
  std::size_t line_no = 0;
  const auto entry = [&](int id) -> env::EpisodeTrace::AgentEntry&
  {
    for (auto& e : s.episode.agents)
    {
      if (e.id == id)
        return e;
    }
    throw ConfigError("trace mentions unknown agent " + std::to_string(id));
  };

  while (std::getline(in, line))
  {
    ++line_no;
    if (line.empty())
      continue;
    try
    {
      const auto j = json::parse(line);
      const auto type = j.at("type").get<std::string>();
      if (type == "header")
      {
        have_header = true;
        s.variant = j.at("variant").get<std::string>();
        s.episode.seed = j.at("seed").get<std::uint64_t>();
        s.episode.dt = j.at("dt").get<double>();
        s.episode.max_steps = j.at("max_steps").get<int>();
        for (const auto& a : j.at("agents"))
        {
          env::EpisodeTrace::AgentEntry e;
          e.id = a.at("id").get<int>();
          e.kind = kind_from(a.at("kind").get<std::string>());
          e.route_length = a.at("route_length").get<double>();
          e.max_speed = a.at("max_speed").get<double>();
          s.episode.agents.push_back(e);
        }
        continue;
      }
      if (!have_header)
        throw ConfigError("trace does not start with a header");

      if (type == "step")
      {
        ++s.steps;
        const int t = j.at("t").get<int>();
        s.episode.steps_taken = t;
        for (const auto& a : j.at("agents"))
        {
          if (a.contains("reward"))
            s.total_reward += a.at("reward").at("total").get<double>();
        }
        for (const auto& c : j.at("collisions"))
        {
          env::CollisionEvent ev;
          ev.time_step = c.at("t").get<int>();
          ev.agent_a = c.at("a").get<int>();
          ev.agent_b = c.at("b").get<int>();
          ev.kind = pair_from(c.at("kind").get<std::string>());
          s.episode.collisions.push_back(ev);
          for (int id : {ev.agent_a, ev.agent_b})
          {
            auto& e = entry(id);
            e.status = env::AgentStatus::Collided;
            e.finish_step = ev.time_step;
          }
        }
        for (const auto& id : j.at("arrivals"))
        {
          auto& e = entry(id.get<int>());
          e.status = env::AgentStatus::Arrived;
          e.finish_step = t;
        }
        for (const auto& c : j.at("corrections"))
        {
          ++s.corrections;
          if (!c.at("accepted").get<bool>())
            ++s.rejected_corrections;
        }
      }
      else if (type == "end")
      {
        s.episode.steps_taken = j.at("steps_taken").get<int>();
      }
      else
      {
        throw ConfigError("unknown record type '" + type + "'");
      }
    }
    catch (const json::exception& e)
    {
      throw ConfigError(file.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }

  if (!have_header)
    throw ConfigError(file.string() + " holds no trace header");
  return s;
}

} // namespace harness
} // namespace mixsafe
