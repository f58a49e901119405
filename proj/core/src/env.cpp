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

#include <mixsafe/env.hpp>
#include <mixsafe/errors.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

namespace mixsafe {
namespace env {

namespace {

//==============================================================================
double uniform(Rng& rng, double lo, double hi)
{
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return lo + (hi - lo)*u;
}

//==============================================================================
std::size_t uniform_index(Rng& rng, std::size_t n)
{
  return static_cast<std::size_t>(rng() % n);
}

//==============================================================================
std::shared_ptr<const geometry::PathNetwork> default_network()
{
  static const auto network = std::make_shared<const geometry::PathNetwork>(
    geometry::build_default_intersection());
  return network;
}

//==============================================================================
double circumradius(AgentKind kind, const agents::AgentParams& params)
{
  if (kind == AgentKind::Vehicle)
    return std::hypot(params.vehicle.half_length, params.vehicle.half_width);
  return std::hypot(params.robot.half_length, params.robot.half_width);
}

//==============================================================================
struct Placement
{
  AgentKind kind;
  geometry::Footprint footprint;
  int route = -1;
};

bool clear_of(
  const std::vector<Placement>& placed,
  const Placement& candidate,
  const SpawnConfig& spawn)
{
  for (const auto& p : placed)
  {
    const bool same_lane = p.kind == AgentKind::Vehicle
      && candidate.kind == AgentKind::Vehicle && p.route == candidate.route;
    const double clearance =
      same_lane ? spawn.vehicle_clearance : spawn.robot_clearance;
    if (geometry::footprints_intersect(p.footprint, candidate.footprint))
      return false;
    if (geometry::min_separation(p.footprint, candidate.footprint) < clearance)
      return false;
  }
  return true;
}

} // anonymous namespace

//==============================================================================
std::string_view to_string(AgentStatus status)
{
  switch (status)
  {
    case AgentStatus::Active: return "active";
    case AgentStatus::Arrived: return "arrived";
    case AgentStatus::Collided: return "collided";
  }
  return "unknown";
}

//==============================================================================
std::string_view to_string(PairKind kind)
{
  switch (kind)
  {
    case PairKind::VehicleVehicle: return "vehicle-vehicle";
    case PairKind::VehicleRobot: return "vehicle-robot";
    case PairKind::RobotRobot: return "robot-robot";
  }
  return "unknown";
}

//==============================================================================
std::string_view to_string(Outcome outcome)
{
  switch (outcome)
  {
    case Outcome::Succeeded: return "succeeded";
    case Outcome::Collided: return "collided";
    case Outcome::TimedOut: return "timed_out";
  }
  return "unknown";
}

//==============================================================================
PairKind pair_kind(AgentKind a, AgentKind b)
{
  if (a != b)
    return PairKind::VehicleRobot;
  return a == AgentKind::Vehicle ? PairKind::VehicleVehicle : PairKind::RobotRobot;
}

//==============================================================================
void validate(const EpisodeConfig& config)
{
  if (config.n_vehicles < 0 || config.n_robots < 0)
    throw ConfigError("agent counts must be non-negative");
  if (!(config.dt > 0.0) || !std::isfinite(config.dt))
    throw ConfigError("dt must be positive");
  if (config.max_steps < 1)
    throw ConfigError("max_steps must be at least 1");
  if (config.neighbors < 1)
    throw ConfigError("observation needs at least one neighbor block");
  if (!(config.weights.d_safe > 0.0))
    throw ConfigError("d_safe must be positive");
}

//==============================================================================
const AgentRecord& WorldState::agent(int id) const
{
  for (const auto& a : agents)
  {
    if (a.id == id)
      return a;
  }
  throw LookupError("unknown agent id " + std::to_string(id));
}

//==============================================================================
AgentRecord& WorldState::agent(int id)
{
  return const_cast<AgentRecord&>(std::as_const(*this).agent(id));
}

//==============================================================================
bool WorldState::operator==(const WorldState& other) const
{
  const bool same_network = network == other.network
    || (network && other.network && *network == *other.network);
  return time_step == other.time_step && agents == other.agents
    && same_network && rng == other.rng;
}

//==============================================================================
WorldState reset(const EpisodeConfig& config, std::uint64_t seed)
{
  validate(config);

  WorldState world;
  world.network = config.network ? config.network : default_network();
  world.rng.seed(seed);
  const auto& network = *world.network;
  const auto& spawn = config.spawn;

  if (config.n_vehicles > 0 && network.vehicle_lanes.empty())
    throw SpawnError("scene has no vehicle lanes");
  if (config.n_robots > 0 && network.robot_paths.empty())
    throw SpawnError("scene has no robot paths");

  std::vector<Placement> placed;
  int next_id = 0;

  for (int i = 0; i < config.n_vehicles; ++i)
  {
    bool ok = false;
    for (int attempt = 0; attempt < spawn.max_attempts && !ok; ++attempt)
    {
      const auto& lane = network.vehicle_lanes[
        uniform_index(world.rng, network.vehicle_lanes.size())];
      const double arc = std::min(
        uniform(world.rng, spawn.vehicle_arc_min, spawn.vehicle_arc_max),
        lane.length());
      const double speed =
        uniform(world.rng, 0.0, config.params.vehicle.max_speed / 2.0);

      agents::VehicleState state{geometry::pose_on_path(lane, arc), speed, 0.0};
      Placement candidate{
        AgentKind::Vehicle, agents::render_footprint(state, network, config.params),
        lane.id()};
      if (!clear_of(placed, candidate, spawn))
        continue;

      placed.push_back(candidate);
      AgentRecord record;
      record.id = next_id++;
      record.kind = AgentKind::Vehicle;
      record.state = state;
      record.goal = Goal{lane.id(), lane.length(), lane.length() - arc};
      world.agents.push_back(record);
      ok = true;
    }

    if (!ok)
    {
      throw SpawnError(
        "could not place vehicle " + std::to_string(i) + " without overlap");
    }
  }

  for (int i = 0; i < config.n_robots; ++i)
  {
    bool ok = false;
    for (int attempt = 0; attempt < spawn.max_attempts && !ok; ++attempt)
    {
      const std::size_t index =
        uniform_index(world.rng, network.robot_paths.size());
      const auto& path = network.robot_paths[index];
      const double arc =
        std::min(uniform(world.rng, 0.0, spawn.robot_arc_max), path.length());

      agents::RobotState state{static_cast<int>(index), arc, 0.0};
      Placement candidate{
        AgentKind::Robot, agents::render_footprint(state, network, config.params)};
      if (!clear_of(placed, candidate, spawn))
        continue;

      placed.push_back(candidate);
      AgentRecord record;
      record.id = next_id++;
      record.kind = AgentKind::Robot;
      record.state = state;
      record.goal = Goal{static_cast<int>(index), path.length(), path.length() - arc};
      world.agents.push_back(record);
      ok = true;
    }

    if (!ok)
    {
      throw SpawnError(
        "could not place robot " + std::to_string(i) + " without overlap");
    }
  }

  return world;
}

//==============================================================================
WorldState reset(const EpisodeConfig& config)
{
  return reset(config, config.seed);
}

//==============================================================================
bool episode_over(const WorldState& world, const EpisodeConfig& config)
{
  if (world.time_step >= config.max_steps)
    return true;
  return std::none_of(world.agents.begin(), world.agents.end(),
    [](const AgentRecord& a) { return a.active(); });
}

//==============================================================================
bool present(const WorldState& world, const AgentRecord& agent)
{
  return agent.active()
    || (agent.status == AgentStatus::Collided
      && agent.finish_step == world.time_step);
}

//==============================================================================
geometry::Footprint footprint_of(
  const WorldState& world, const AgentRecord& agent, const EpisodeConfig& config)
{
  return agents::render_footprint(agent.state, *world.network, config.params);
}

//==============================================================================
double route_progress(const WorldState& world, const AgentRecord& agent)
{
  if (const auto* r = std::get_if<agents::RobotState>(&agent.state))
    return r->arc_distance;

  const auto& v = std::get<agents::VehicleState>(agent.state);
  const auto& lane = world.network->path(agent.goal.route_id);
  return geometry::project_onto_path(lane, v.pose.position()).arc;
}

//==============================================================================
std::vector<int> nearest_neighbors(
  const WorldState& world, int agent_id, int count)
{
  const auto& me = world.agent(agent_id);
  const geometry::Point origin =
    agents::pose_of(me.state, *world.network).position();

  std::vector<std::pair<double, int>> ranked;
  for (const auto& other : world.agents)
  {
    if (other.id == agent_id || !present(world, other))
      continue;
    const geometry::Point p =
      agents::pose_of(other.state, *world.network).position();
    ranked.emplace_back((p - origin).norm(), other.id);
  }

  std::sort(ranked.begin(), ranked.end());
  std::vector<int> out;
  for (std::size_t i = 0;
    i < ranked.size() && static_cast<int>(i) < count; ++i)
  {
    out.push_back(ranked[i].second);
  }
  return out;
}

//==============================================================================
Observation observe(
  const WorldState& world,
  int agent_id,
  const EpisodeConfig& config,
  bool allow_frozen)
{
  const auto& me = world.agent(agent_id);
  if (!me.active() && !allow_frozen)
  {
    throw LookupError(
      "agent " + std::to_string(agent_id) + " is no longer active");
  }

  const auto& network = *world.network;
  const int K = config.neighbors;
  Observation obs;
  obs.values = Eigen::VectorXd::Zero(ObservationLayout::width(K));
  auto& x = obs.values;

  const geometry::Pose2D pose = agents::pose_of(me.state, network);
  const geometry::Point ego_vel = agents::velocity_of(me.state, network);

  x[0] = me.kind == AgentKind::Vehicle ? 1.0 : -1.0;
  x[1] = agents::speed_of(me.state);
  if (const auto* v = std::get_if<agents::VehicleState>(&me.state))
  {
    const auto& lane = network.path(me.goal.route_id);
    const auto proj = geometry::project_onto_path(lane, v->pose.position());
    x[2] = v->steering_angle;
    x[3] = proj.lateral;
    x[4] = geometry::normalize_angle(v->pose.heading() - proj.heading);
    x[5] = me.goal.goal_arc - proj.arc;
  }
  else
  {
    const auto& r = std::get<agents::RobotState>(me.state);
    x[3] = r.arc_distance;
    x[5] = me.goal.goal_arc - r.arc_distance;
  }

  // Rotation from world into the ego frame.
  const double c = std::cos(pose.heading());
  const double s = std::sin(pose.heading());
  const auto to_ego = [&](const geometry::Point& p)
  {
    return geometry::Point(c*p.x() + s*p.y(), -s*p.x() + c*p.y());
  };

  obs.neighbor_ids = nearest_neighbors(world, agent_id, K);
  int block = 0;
  for (int id : obs.neighbor_ids)
  {
    const auto& other = world.agent(id);
    const geometry::Point rel =
      to_ego(agents::pose_of(other.state, network).position() - pose.position());
    const geometry::Point rel_v =
      to_ego(agents::velocity_of(other.state, network) - ego_vel);

    const int base = ObservationLayout::ego_width
      + block*ObservationLayout::neighbor_width;
    x[base + 0] = rel.x();
    x[base + 1] = rel.y();
    x[base + 2] = rel_v.x();
    x[base + 3] = rel_v.y();
    x[base + 4] = other.kind == AgentKind::Vehicle ? 1.0 : -1.0;
    x[base + 5] = circumradius(other.kind, config.params);
    ++block;
  }

  return obs;
}

//==============================================================================
double nearest_separation(
  const WorldState& world, int agent_id, const EpisodeConfig& config)
{
  const auto& me = world.agent(agent_id);
  const auto mine = footprint_of(world, me, config);
  double best = std::numeric_limits<double>::infinity();
  for (const auto& other : world.agents)
  {
    if (other.id == agent_id || !present(world, other))
      continue;
    best = std::min(
      best, geometry::min_separation(mine, footprint_of(world, other, config)));
  }
  return best;
}

//==============================================================================
RewardBreakdown reward(
  const WorldState& prev,
  const WorldState& world,
  int agent_id,
  const EpisodeConfig& config)
{
  const auto& before = prev.agent(agent_id);
  const auto& after = world.agent(agent_id);
  RewardBreakdown r;
  if (!before.active())
    return r;

  const auto& w = config.weights;
  if (after.status == AgentStatus::Arrived)
    r.goal = w.w_goal;
  else if (after.status == AgentStatus::Collided)
    r.goal = -w.w_goal;

  r.time = -w.w_time;

  const double jerk = (after.accel - after.prev_accel) / config.dt;
  r.comfort = -w.w_jerk*jerk*jerk;

  const double d_min = nearest_separation(world, agent_id, config);
  const double gap = std::max(0.0, w.d_safe - d_min);
  r.proximity = -w.w_prox*gap*gap;

  r.total = r.goal + r.time + r.comfort + r.proximity;
  return r;
}

//==============================================================================
double ground_truth_cost(
  const WorldState& world,
  int agent_id,
  double d_safe,
  const EpisodeConfig& config)
{
  const auto& me = world.agent(agent_id);
  if (me.status == AgentStatus::Collided)
    return 1.0;

  const double d_min = nearest_separation(world, agent_id, config);
  if (!std::isfinite(d_min))
    return 0.0;
  return std::clamp((d_safe - d_min) / d_safe, 0.0, 1.0);
}

//==============================================================================
StepResult step(
  WorldState& world,
  const JointAction& actions,
  const EpisodeConfig& config)
{
  StepResult result;
  const auto& network = *world.network;

  for (const auto& a : world.agents)
  {
    if (!a.active())
      continue;
    const auto it = actions.find(a.id);
    if (it == actions.end())
    {
      throw ContractError(
        "no action for active agent " + std::to_string(a.id));
    }
    if (agents::kind_of(it->second) != a.kind)
    {
      throw ContractError(
        "action kind does not match agent " + std::to_string(a.id));
    }
  }

  const WorldState prev = world;
  const int next_step = world.time_step + 1;

  std::vector<std::size_t> movers;
  std::vector<bool> arrived(world.agents.size(), false);
  for (std::size_t i = 0; i < world.agents.size(); ++i)
  {
    auto& a = world.agents[i];
    if (!a.active())
      continue;
    movers.push_back(i);

    const auto action = agents::clip_action(actions.at(a.id), config.params);
    a.prev_accel = a.accel;
    a.accel = agents::longitudinal_accel(action);

    if (auto* v = std::get_if<agents::VehicleState>(&a.state))
    {
      *v = agents::step_vehicle(
        *v, std::get<agents::VehicleAction>(action), config.dt,
        config.params.vehicle);
      arrived[i] = route_progress(world, a) >= a.goal.goal_arc;
    }
    else
    {
      auto& r = std::get<agents::RobotState>(a.state);
      const double length = network.robot_paths.at(
        static_cast<std::size_t>(r.path_id)).length();
      const auto out = agents::step_robot(
        r, std::get<agents::RobotAction>(action), config.dt, length,
        config.params.robot);
      r = out.state;
      arrived[i] = out.reached_goal;
    }
  }

  std::vector<geometry::Footprint> prints;
  prints.reserve(movers.size());
  for (std::size_t i : movers)
    prints.push_back(footprint_of(world, world.agents[i], config));

  std::vector<bool> collided(world.agents.size(), false);
  for (std::size_t p = 0; p < movers.size(); ++p)
  {
    for (std::size_t q = p + 1; q < movers.size(); ++q)
    {
      if (!geometry::footprints_intersect(prints[p], prints[q]))
        continue;
      const auto& a = world.agents[movers[p]];
      const auto& b = world.agents[movers[q]];
      result.collisions.push_back(
        {next_step, a.id, b.id, pair_kind(a.kind, b.kind)});
      collided[movers[p]] = true;
      collided[movers[q]] = true;
    }
  }

  for (std::size_t i : movers)
  {
    auto& a = world.agents[i];
    if (collided[i])
    {
      a.status = AgentStatus::Collided;
      a.finish_step = next_step;
    }
    else if (arrived[i])
    {
      a.status = AgentStatus::Arrived;
      a.finish_step = next_step;
      result.arrivals.push_back(a.id);
    }
  }

  world.time_step = next_step;

  for (std::size_t i : movers)
  {
    const auto& a = world.agents[i];
    result.rewards[a.id] = reward(prev, world, a.id, config);
    result.done[a.id] = !a.active();
  }

  return result;
}

//==============================================================================
EpisodeTrace begin_trace(
  const WorldState& world, const EpisodeConfig& config, std::uint64_t seed)
{
  EpisodeTrace trace;
  trace.seed = seed;
  trace.dt = config.dt;
  trace.max_steps = config.max_steps;
  trace.steps_taken = world.time_step;
  for (const auto& a : world.agents)
  {
    EpisodeTrace::AgentEntry e;
    e.id = a.id;
    e.kind = a.kind;
    e.route_length = a.goal.route_length;
    e.max_speed = a.kind == AgentKind::Vehicle ?
      config.params.vehicle.max_speed : config.params.robot.max_speed;
    e.status = a.status;
    e.finish_step = a.finish_step;
    trace.agents.push_back(e);
  }
  return trace;
}

//==============================================================================
void record_step(
  EpisodeTrace& trace, const WorldState& world, const StepResult& result)
{
  trace.collisions.insert(
    trace.collisions.end(), result.collisions.begin(), result.collisions.end());
  trace.steps_taken = world.time_step;
  for (auto& e : trace.agents)
  {
    const auto& a = world.agent(e.id);
    e.status = a.status;
    e.finish_step = a.finish_step;
  }
}

//==============================================================================
std::size_t EpisodeMetrics::count(Outcome outcome) const
{
  return static_cast<std::size_t>(std::count_if(agents.begin(), agents.end(),
    [&](const AgentOutcome& a) { return a.outcome == outcome; }));
}

//==============================================================================
std::size_t EpisodeMetrics::vehicle_robot_collisions() const
{
  return static_cast<std::size_t>(std::count_if(agents.begin(), agents.end(),
    [](const AgentOutcome& a)
    {
      return a.collision_kind == PairKind::VehicleRobot;
    }));
}

//==============================================================================
std::vector<double> EpisodeMetrics::delays() const
{
  std::vector<double> out;
  for (const auto& a : agents)
  {
    if (a.delay)
      out.push_back(*a.delay);
  }
  return out;
}

//==============================================================================
EpisodeMetrics episode_metrics(const EpisodeTrace& trace)
{
  EpisodeMetrics metrics;
  for (const auto& e : trace.agents)
  {
    AgentOutcome out;
    out.id = e.id;
    out.kind = e.kind;

    if (e.status == AgentStatus::Collided)
    {
      out.outcome = Outcome::Collided;
      for (const auto& c : trace.collisions)
      {
        if (c.agent_a != e.id && c.agent_b != e.id)
          continue;
        if (!out.collision_kind || c.kind == PairKind::VehicleRobot)
          out.collision_kind = c.kind;
      }
    }
    else if (e.status == AgentStatus::Arrived && e.finish_step <= trace.max_steps)
    {
      out.outcome = Outcome::Succeeded;
      out.delay = e.finish_step*trace.dt - e.route_length / e.max_speed;
    }
    else
    {
      out.outcome = Outcome::TimedOut;
    }
    metrics.agents.push_back(out);
  }
  return metrics;
}

} // namespace env
} // namespace mixsafe
