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

#ifndef MIXSAFE__ENV_HPP
#define MIXSAFE__ENV_HPP

#include <mixsafe/agents.hpp>
#include <mixsafe/geometry.hpp>

#include <Eigen/Core>

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string_view>
#include <vector>

namespace mixsafe {
namespace env {

using agents::AgentKind;
using Rng = std::mt19937_64;

enum class AgentStatus
{
  Active,
  Arrived,
  Collided
};

enum class PairKind
{
  VehicleVehicle,
  VehicleRobot,
  RobotRobot
};

std::string_view to_string(AgentStatus status);
std::string_view to_string(PairKind kind);
PairKind pair_kind(AgentKind a, AgentKind b);

//==============================================================================
struct Goal
{
  /// Lane id for vehicles, robot path index for robots.
  int route_id = 0;

  /// Arc distance along the route at which the agent has arrived.
  double goal_arc = 0.0;

  /// Distance left to travel at spawn time.
  double route_length = 0.0;

  bool operator==(const Goal&) const = default;
};

//==============================================================================
struct AgentRecord
{
  int id = 0;
  AgentKind kind = AgentKind::Vehicle;
  agents::AgentState state;
  Goal goal;
  AgentStatus status = AgentStatus::Active;

  /// Longitudinal acceleration commanded at the most recent step and the one
  /// before it. Both start at zero.
  double accel = 0.0;
  double prev_accel = 0.0;

  /// Step index at which the agent arrived or collided, -1 while active.
  int finish_step = -1;

  bool active() const { return status == AgentStatus::Active; }
  bool operator==(const AgentRecord&) const = default;
};

//==============================================================================
struct RewardWeights
{
  double w_goal = 100.0;
  double w_time = 0.1;
  double w_jerk = 0.01;
  double w_prox = 1.0;
  double d_safe = 3.0;
};

//==============================================================================
struct SpawnConfig
{
  /// Vehicles start this far along their lane, before the conflict zone.
  double vehicle_arc_min = 0.0;
  double vehicle_arc_max = 40.0;

  /// Robots start within this distance of their corridor entrance.
  double robot_arc_max = 5.0;

  /// Minimum boundary separation enforced between spawned footprints. The
  /// vehicle value applies to vehicles sharing a lane, the robot value to
  /// every other pair.
  double vehicle_clearance = 6.0;
  double robot_clearance = 0.5;

  /// Placement attempts per agent before giving up.
  int max_attempts = 1000;
};

//==============================================================================
struct EpisodeConfig
{
  int n_vehicles = 5;
  int n_robots = 5;
  int max_steps = 600;
  double dt = 0.1;
  RewardWeights weights;
  std::uint64_t seed = 0;

  /// Neighbor blocks in each observation.
  int neighbors = 6;

  SpawnConfig spawn;
  agents::AgentParams params;

  /// Scene geometry. Null selects the default intersection.
  std::shared_ptr<const geometry::PathNetwork> network;
};

/// Throws ConfigError when counts are negative, dt is not positive or the
/// neighbor count is below one.
void validate(const EpisodeConfig& config);

//==============================================================================
struct WorldState
{
  int time_step = 0;
  std::vector<AgentRecord> agents;
  std::shared_ptr<const geometry::PathNetwork> network;
  Rng rng;

  /// Throws LookupError for unknown ids.
  const AgentRecord& agent(int id) const;
  AgentRecord& agent(int id);

  bool operator==(const WorldState& other) const;
};

/// Places vehicles on random lanes at random offsets before the conflict zone
/// with speeds in [0, v_max/2], and robots near corridor entrances at rest.
/// Placements are rejection-sampled so no footprints overlap. Deterministic in
/// (config, seed). Throws SpawnError when an agent cannot be placed.
WorldState reset(const EpisodeConfig& config, std::uint64_t seed);
WorldState reset(const EpisodeConfig& config);

/// True once every agent is frozen or the step cap has been reached.
bool episode_over(const WorldState& world, const EpisodeConfig& config);

/// Agents that still occupy space at the current step: active ones, plus those
/// that collided during the step just taken.
bool present(const WorldState& world, const AgentRecord& agent);

geometry::Footprint footprint_of(
  const WorldState& world, const AgentRecord& agent, const EpisodeConfig& config);

/// Progress of an agent along its route, in meters.
double route_progress(const WorldState& world, const AgentRecord& agent);

//==============================================================================
/// Fixed-width feature vector.
///
/// Ego block (6): kind flag (+1 vehicle, -1 robot), speed, steering angle
/// (vehicles, else 0), lateral offset from the lane (vehicles) or arc distance
/// (robots), heading error against the lane (vehicles, else 0), distance to
/// goal.
///
/// Neighbor blocks (6 each, nearest first, zero padded): relative position and
/// relative velocity in the ego frame, kind flag, footprint circumradius.
struct ObservationLayout
{
  static constexpr int ego_width = 6;
  static constexpr int neighbor_width = 6;

  static int width(int neighbors) { return ego_width + neighbors*neighbor_width; }
};

struct Observation
{
  Eigen::VectorXd values;

  /// Agent ids behind each filled neighbor block, nearest first.
  std::vector<int> neighbor_ids;
};

/// Throws LookupError for unknown or inactive agents unless allow_frozen is
/// set (dataset collection labels the step at which an agent collided).
Observation observe(
  const WorldState& world,
  int agent_id,
  const EpisodeConfig& config,
  bool allow_frozen = false);

/// Ids of the nearest present agents by center distance, ties broken by id.
std::vector<int> nearest_neighbors(
  const WorldState& world, int agent_id, int count);

//==============================================================================
struct RewardBreakdown
{
  double goal = 0.0;
  double time = 0.0;
  double comfort = 0.0;
  double proximity = 0.0;
  double total = 0.0;
};

/// goal = w_goal on arrival this step, -w_goal on collision this step;
/// time = -w_time; comfort = -w_jerk * jerk^2 with jerk from consecutive
/// commanded accelerations; proximity = -w_prox * max(0, d_safe - d_min)^2.
RewardBreakdown reward(
  const WorldState& prev,
  const WorldState& world,
  int agent_id,
  const EpisodeConfig& config);

/// Minimum boundary separation to any other present agent, +inf when alone.
double nearest_separation(
  const WorldState& world, int agent_id, const EpisodeConfig& config);

/// 1 for a collided agent, else clamp((d_safe - d_min) / d_safe, 0, 1).
double ground_truth_cost(
  const WorldState& world,
  int agent_id,
  double d_safe,
  const EpisodeConfig& config);

//==============================================================================
struct CollisionEvent
{
  int time_step = 0;
  int agent_a = 0;
  int agent_b = 0;
  PairKind kind = PairKind::VehicleVehicle;

  bool operator==(const CollisionEvent&) const = default;
};

using JointAction = std::map<int, agents::Action>;

struct StepResult
{
  std::map<int, RewardBreakdown> rewards;
  std::map<int, bool> done;
  std::vector<CollisionEvent> collisions;
  std::vector<int> arrivals;
};

/// Advances every active agent simultaneously, flags collisions among agents
/// that were active before the step, marks arrivals, computes rewards and
/// increments the clock. Throws ContractError when an active agent has no
/// action or an action of the wrong kind.
StepResult step(
  WorldState& world,
  const JointAction& actions,
  const EpisodeConfig& config);

//==============================================================================
/// Per-agent bookkeeping needed to score a finished episode.
struct EpisodeTrace
{
  struct AgentEntry
  {
    int id = 0;
    AgentKind kind = AgentKind::Vehicle;
    double route_length = 0.0;
    double max_speed = 0.0;
    AgentStatus status = AgentStatus::Active;
    int finish_step = -1;
  };

  std::uint64_t seed = 0;
  double dt = 0.1;
  int max_steps = 0;
  int steps_taken = 0;
  std::vector<AgentEntry> agents;
  std::vector<CollisionEvent> collisions;
};

EpisodeTrace begin_trace(
  const WorldState& world, const EpisodeConfig& config, std::uint64_t seed);

void record_step(
  EpisodeTrace& trace, const WorldState& world, const StepResult& result);

//==============================================================================
enum class Outcome
{
  Succeeded,
  Collided,
  TimedOut
};

std::string_view to_string(Outcome outcome);

struct AgentOutcome
{
  int id = 0;
  AgentKind kind = AgentKind::Vehicle;
  Outcome outcome = Outcome::TimedOut;

  /// Set for collided agents. Vehicle-robot contact takes precedence when an
  /// agent is hit by several others in the same step.
  std::optional<PairKind> collision_kind;

  /// Realized minus free-flow travel time, successful agents only.
  std::optional<double> delay;
};

struct EpisodeMetrics
{
  std::vector<AgentOutcome> agents;

  std::size_t count(Outcome outcome) const;
  std::size_t vehicle_robot_collisions() const;
  std::vector<double> delays() const;
};

EpisodeMetrics episode_metrics(const EpisodeTrace& trace);

} // namespace env
} // namespace mixsafe

#endif // MIXSAFE__ENV_HPP
