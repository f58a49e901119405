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

#ifndef MIXSAFE__AGENTS_HPP
#define MIXSAFE__AGENTS_HPP

#include <mixsafe/geometry.hpp>

#include <Eigen/Core>

#include <string_view>
#include <variant>

namespace mixsafe {
namespace agents {

enum class AgentKind
{
  Vehicle,
  Robot
};

std::string_view to_string(AgentKind kind);

//==============================================================================
/// Kinematic bounds and body dimensions for vehicles. Speed and acceleration
/// bounds follow a 50 km/h urban sedan; the steering-rate bound and body
/// dimensions are configurable defaults.
struct VehicleLimits
{
  double max_speed = 50.0 / 3.6;
  double min_accel = -8.0;
  double max_accel = 4.0;
  double max_steering = 0.6;
  double max_steering_rate = 1.0;
  double wheelbase = 2.7;
  double half_length = 2.25;
  double half_width = 1.0;
};

//==============================================================================
struct RobotLimits
{
  double max_speed = 5.0 / 3.6;
  double min_accel = -1.0;
  double max_accel = 1.0;
  double half_length = 0.4;
  double half_width = 0.3;
};

//==============================================================================
struct AgentParams
{
  VehicleLimits vehicle;
  RobotLimits robot;
};

//==============================================================================
struct VehicleState
{
  geometry::Pose2D pose;
  double speed = 0.0;
  double steering_angle = 0.0;

  bool operator==(const VehicleState&) const = default;
};

//==============================================================================
struct RobotState
{
  int path_id = 0;
  double arc_distance = 0.0;
  double speed = 0.0;

  bool operator==(const RobotState&) const = default;
};

using AgentState = std::variant<VehicleState, RobotState>;

//==============================================================================
struct VehicleAction
{
  double accel = 0.0;
  double steering_rate = 0.0;

  bool operator==(const VehicleAction&) const = default;
};

//==============================================================================
struct RobotAction
{
  double accel = 0.0;

  bool operator==(const RobotAction&) const = default;
};

using Action = std::variant<VehicleAction, RobotAction>;

AgentKind kind_of(const AgentState& state);
AgentKind kind_of(const Action& action);

/// Number of action components for an agent kind (2 for vehicles, 1 for
/// robots).
int action_dim(AgentKind kind);

/// Clamps each component to its box bound. Throws ValidationError on
/// non-finite components.
VehicleAction clip_action(const VehicleAction& action, const VehicleLimits& limits = {});
RobotAction clip_action(const RobotAction& action, const RobotLimits& limits = {});
Action clip_action(const Action& action, const AgentParams& params = {});

/// True when every component already lies inside its bound.
bool within_bounds(const Action& action, const AgentParams& params = {});

double longitudinal_accel(const Action& action);

/// Component vector: (accel, steering_rate) or (accel).
Eigen::VectorXd to_vector(const Action& action);
Action action_from_vector(AgentKind kind, const Eigen::Ref<const Eigen::VectorXd>& v);

/// Forward-Euler kinematic bicycle update. Steering integrates first, then
/// heading and position using the pre-update speed, then speed.
VehicleState step_vehicle(
  const VehicleState& state,
  const VehicleAction& action,
  double dt,
  const VehicleLimits& limits = {});

//==============================================================================
struct RobotStep
{
  RobotState state;
  bool reached_goal = false;
};

/// Speed integrates first, then arc distance with the new speed. Arc distance
/// saturates at the path length, which flags goal completion.
RobotStep step_robot(
  const RobotState& state,
  const RobotAction& action,
  double dt,
  double path_length,
  const RobotLimits& limits = {});

/// Pose of the agent in the plane. Robots are placed on their path.
geometry::Pose2D pose_of(const AgentState& state, const geometry::PathNetwork& network);

/// Velocity vector in the plane.
geometry::Point velocity_of(const AgentState& state, const geometry::PathNetwork& network);

double speed_of(const AgentState& state);

/// Throws LookupError for a robot whose path id is not in the network.
geometry::Footprint render_footprint(
  const AgentState& state,
  const geometry::PathNetwork& network,
  const AgentParams& params = {});

} // namespace agents
} // namespace mixsafe

#endif // MIXSAFE__AGENTS_HPP
