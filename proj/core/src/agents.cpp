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

#include <mixsafe/agents.hpp>
#include <mixsafe/errors.hpp>

#include <algorithm>
#include <cmath>

namespace mixsafe {
namespace agents {

namespace {

//==============================================================================
void require_finite(double v, const char* what)
{
  if (!std::isfinite(v))
    throw ValidationError(std::string("non-finite action component: ") + what);
}

//==============================================================================
const geometry::Path& robot_path(
  const geometry::PathNetwork& network, int path_id)
{
  if (path_id < 0 || static_cast<std::size_t>(path_id) >= network.robot_paths.size())
  {
    throw LookupError(
      "robot path index " + std::to_string(path_id) + " not in network");
  }
  return network.robot_paths[static_cast<std::size_t>(path_id)];
}

} // anonymous namespace

//==============================================================================
std::string_view to_string(AgentKind kind)
{
  return kind == AgentKind::Vehicle ? "vehicle" : "robot";
}

//==============================================================================
AgentKind kind_of(const AgentState& state)
{
  return std::holds_alternative<VehicleState>(state) ?
    AgentKind::Vehicle : AgentKind::Robot;
}

//==============================================================================
AgentKind kind_of(const Action& action)
{
  return std::holds_alternative<VehicleAction>(action) ?
    AgentKind::Vehicle : AgentKind::Robot;
}

//==============================================================================
int action_dim(AgentKind kind)
{
  return kind == AgentKind::Vehicle ? 2 : 1;
}

//==============================================================================
VehicleAction clip_action(const VehicleAction& action, const VehicleLimits& limits)
{
  require_finite(action.accel, "accel");
  require_finite(action.steering_rate, "steering_rate");
  return {
    std::clamp(action.accel, limits.min_accel, limits.max_accel),
    std::clamp(action.steering_rate,
      -limits.max_steering_rate, limits.max_steering_rate)};
}

//==============================================================================
RobotAction clip_action(const RobotAction& action, const RobotLimits& limits)
{
  require_finite(action.accel, "accel");
  return {std::clamp(action.accel, limits.min_accel, limits.max_accel)};
}

//==============================================================================
Action clip_action(const Action& action, const AgentParams& params)
{
  if (const auto* v = std::get_if<VehicleAction>(&action))
    return clip_action(*v, params.vehicle);
  return clip_action(std::get<RobotAction>(action), params.robot);
}

//==============================================================================
bool within_bounds(const Action& action, const AgentParams& params)
{
  if (const auto* v = std::get_if<VehicleAction>(&action))
  {
    const auto& l = params.vehicle;
    return v->accel >= l.min_accel && v->accel <= l.max_accel
      && std::abs(v->steering_rate) <= l.max_steering_rate;
  }
  const auto& r = std::get<RobotAction>(action);
  return r.accel >= params.robot.min_accel && r.accel <= params.robot.max_accel;
}

//==============================================================================
double longitudinal_accel(const Action& action)
{
  return std::visit([](const auto& a) { return a.accel; }, action);
}

//==============================================================================
Eigen::VectorXd to_vector(const Action& action)
{
  if (const auto* v = std::get_if<VehicleAction>(&action))
    return Eigen::Vector2d(v->accel, v->steering_rate);
  Eigen::VectorXd out(1);
  out[0] = std::get<RobotAction>(action).accel;
  return out;
}

//==============================================================================
Action action_from_vector(
  AgentKind kind, const Eigen::Ref<const Eigen::VectorXd>& v)
{
  if (v.size() != action_dim(kind))
  {
    throw ShapeError(
      "action vector of size " + std::to_string(v.size()) + " for a "
      + std::string(to_string(kind)));
  }
  if (kind == AgentKind::Vehicle)
    return VehicleAction{v[0], v[1]};
  return RobotAction{v[0]};
}

//==============================================================================
VehicleState step_vehicle(
  const VehicleState& state,
  const VehicleAction& action,
  double dt,
  const VehicleLimits& limits)
{
  const double steering = std::clamp(
    state.steering_angle + action.steering_rate*dt,
    -limits.max_steering, limits.max_steering);

  const double heading = state.pose.heading()
    + (state.speed / limits.wheelbase)*std::tan(steering)*dt;
  const double x = state.pose.x() + state.speed*std::cos(heading)*dt;
  const double y = state.pose.y() + state.speed*std::sin(heading)*dt;
  const double speed = std::clamp(
    state.speed + action.accel*dt, 0.0, limits.max_speed);

  return VehicleState{geometry::Pose2D(x, y, heading), speed, steering};
}

//==============================================================================
RobotStep step_robot(
  const RobotState& state,
  const RobotAction& action,
  double dt,
  double path_length,
  const RobotLimits& limits)
{
  RobotStep out;
  out.state = state;
  out.state.speed = std::clamp(
    state.speed + action.accel*dt, 0.0, limits.max_speed);
  out.state.arc_distance = state.arc_distance + out.state.speed*dt;
  if (out.state.arc_distance >= path_length)
  {
    out.state.arc_distance = path_length;
    out.reached_goal = true;
  }
  return out;
}

//==============================================================================
geometry::Pose2D pose_of(
  const AgentState& state, const geometry::PathNetwork& network)
{
  if (const auto* v = std::get_if<VehicleState>(&state))
    return v->pose;
  const auto& r = std::get<RobotState>(state);
  return geometry::pose_on_path(robot_path(network, r.path_id), r.arc_distance);
}

//==============================================================================
geometry::Point velocity_of(
  const AgentState& state, const geometry::PathNetwork& network)
{
  return pose_of(state, network).forward()*speed_of(state);
}

//==============================================================================
double speed_of(const AgentState& state)
{
  return std::visit([](const auto& s) { return s.speed; }, state);
}

//==============================================================================
geometry::Footprint render_footprint(
  const AgentState& state,
  const geometry::PathNetwork& network,
  const AgentParams& params)
{
  if (const auto* v = std::get_if<VehicleState>(&state))
    return {v->pose, params.vehicle.half_length, params.vehicle.half_width};

  return {pose_of(state, network), params.robot.half_length, params.robot.half_width};
}

} // namespace agents
} // namespace mixsafe
