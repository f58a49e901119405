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
#include <mixsafe/safety.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace mixsafe {
namespace safety {

namespace {

//==============================================================================
double hinge_sq(double d_safe, double gap)
{
  const double h = std::max(0.0, d_safe - gap);
  return h*h;
}

//==============================================================================
struct Neighbor
{
  Eigen::Vector2d p;
  Eigen::Vector2d u;
  double radius;
};

std::vector<Neighbor> neighbors_of(const env::Observation& obs)
{
  const auto& x = obs.values;
  std::vector<Neighbor> out;
  for (std::size_t k = 0; k < obs.neighbor_ids.size(); ++k)
  {
    const auto b = static_cast<Eigen::Index>(env::ObservationLayout::ego_width
      + k*env::ObservationLayout::neighbor_width);
    out.push_back(Neighbor{
      Eigen::Vector2d(x[b], x[b + 1]), Eigen::Vector2d(x[b + 2], x[b + 3]),
      x[b + 5]});
  }
  return out;
}

//==============================================================================
// Neighbors moving alongside, such as traffic in a neighboring lane.
bool parallel(const Neighbor& n, double half_width, const NominalConfig& c)
{
  return std::abs(n.u.y()) < c.parallel_speed
    && std::abs(n.p.y()) > half_width + c.neighbor_radius_factor*n.radius + c.path_margin;
}

//==============================================================================
// Highest speed that keeps the time headway to an in-path leader.
double following_speed(
  const std::vector<Neighbor>& neighbors,
  double half_length,
  double half_width,
  double standstill,
  const NominalConfig& c)
{
  double v = std::numeric_limits<double>::infinity();
  for (const auto& n : neighbors)
  {
    const double band = half_width + c.neighbor_radius_factor*n.radius + c.path_margin;
    if (n.p.x() <= 0.0 || std::abs(n.p.y()) > band
      || std::abs(n.u.y()) >= c.parallel_speed)
    {
      continue;
    }
    const double gap = n.p.x() - half_length - n.radius;
    v = std::min(v, std::max(0.0, (gap - standstill) / c.headway));
  }
  return v;
}

//==============================================================================
// Worst proximity penalty over the observed neighbors that lie ahead.
double proximity_brake(
  const std::vector<Neighbor>& neighbors,
  double half_length,
  double half_width,
  const NominalConfig& config,
  const env::RewardWeights& weights)
{
  double worst = 0.0;
  for (const auto& n : neighbors)
  {
    if (n.p.x() <= 0.0 || parallel(n, half_width, config))
      continue;

    const double uu = n.u.squaredNorm();
    const double t = uu > 1e-12
      ? std::clamp(-n.p.dot(n.u) / uu, 0.0, config.lookahead) : 0.0;
    const Eigen::Vector2d q = n.p + t*n.u;
    if (q.x() < -half_length)
      continue;

    const double gap =
      std::max(std::abs(q.x()) - half_length, std::abs(q.y()) - half_width)
      - config.neighbor_radius_factor*n.radius;
    worst = std::max(worst, hinge_sq(weights.d_safe, gap));
  }
  return config.proximity_gain*weights.w_prox*worst;
}

//==============================================================================
agents::Action with_accel(const agents::Action& a, double accel)
{
  if (const auto* v = std::get_if<agents::VehicleAction>(&a))
    return agents::VehicleAction{accel, v->steering_rate};
  return agents::RobotAction{accel};
}

//==============================================================================
FilterResult correct_with_horizon(
  const predictive::PredictiveModels& models,
  const env::Observation& observation,
  const agents::Action& nominal,
  const FilterConfig& config,
  const agents::AgentParams& params,
  int horizon)
{
  const AgentKind kind = agents::kind_of(nominal);
  if (kind != models.kind)
    throw ContractError("action kind does not match the model kind");

  const auto [lo, hi] = action_bounds(kind, params);
  const Eigen::VectorXd& obs = observation.values;

  CostModel cm;
  cm.cost = [&](const Eigen::VectorXd& a)
  {
    return predictive::predicted_cost(models, obs, a, horizon);
  };
  cm.gradient = [&](const Eigen::VectorXd& a)
  {
    return action_gradient(models, obs, a, horizon);
  };

  GradientStepConfig step;
  step.tau = config.tau;
  step.alpha = config.alpha;
  step.backtracking = config.backtracking;
  step.max_backtracks = config.max_backtracks;

  const auto out = gradient_step(cm, agents::to_vector(nominal), lo, hi, step);
  FilterResult r;
  r.action = agents::action_from_vector(kind, out.action);
  if (out.triggered)
  {
    r.correction = out.record;
    r.correction->kind = kind;
  }
  return r;
}

} // anonymous namespace

//==============================================================================
void validate(const NominalConfig& c)
{
  if (!(c.vehicle_cruise >= 0.0) || !(c.robot_cruise >= 0.0))
    throw ValidationError("cruise speeds must be non-negative");
  if (!(c.speed_gain > 0.0) || !(c.steering_gain > 0.0) || !(c.cross_track_gain >= 0.0))
    throw ValidationError("nominal gains must be positive");
  if (!(c.headway > 0.0) || !(c.vehicle_standstill >= 0.0)
    || !(c.robot_standstill >= 0.0) || !(c.path_margin >= 0.0)
    || !(c.parallel_speed >= 0.0))
  {
    throw ValidationError("car following parameters out of range");
  }
  if (!(c.proximity_gain >= 0.0) || !(c.lookahead >= 0.0))
    throw ValidationError("proximity gain and lookahead must be non-negative");
  if (!(c.vehicle_accel_noise >= 0.0) || !(c.vehicle_steering_noise >= 0.0)
    || !(c.robot_accel_noise >= 0.0))
  {
    throw ValidationError("noise levels must be non-negative");
  }
}

//==============================================================================
agents::Action nominal_policy(
  const env::Observation& observation,
  const NominalConfig& config,
  const env::RewardWeights& weights,
  const agents::AgentParams& params)
{
  const auto& x = observation.values;
  if (x.size() < env::ObservationLayout::ego_width)
    throw ShapeError("observation is shorter than the ego block");

  const double speed = x[1];
  const auto neighbors = neighbors_of(observation);
  if (x[0] > 0.0)
  {
    const auto& lim = params.vehicle;
    const double brake = proximity_brake(
      neighbors, lim.half_length, lim.half_width, config, weights);
    const double target = std::min(config.vehicle_cruise, following_speed(
      neighbors, lim.half_length, lim.half_width, config.vehicle_standstill, config));
    const double accel = config.speed_gain*(target - speed) - brake;

    const double desired = std::clamp(
      -x[4] - std::atan2(config.cross_track_gain*x[3], speed + 1.0),
      -lim.max_steering, lim.max_steering);
    const double rate = config.steering_gain*(desired - x[2]);
    return agents::clip_action(agents::VehicleAction{accel, rate}, lim);
  }

  const auto& lim = params.robot;
  const double brake = proximity_brake(
    neighbors, lim.half_length, lim.half_width, config, weights);
  const double target = std::min(config.robot_cruise, following_speed(
    neighbors, lim.half_length, lim.half_width, config.robot_standstill, config));
  const double accel = config.speed_gain*(target - speed) - brake;
  return agents::clip_action(agents::RobotAction{accel}, lim);
}

//==============================================================================
agents::Action perturb(
  const agents::Action& action,
  const NominalConfig& config,
  env::Rng& rng,
  const agents::AgentParams& params)
{
  std::normal_distribution<double> gauss(0.0, 1.0);
  if (const auto* v = std::get_if<agents::VehicleAction>(&action))
  {
    agents::VehicleAction out = *v;
    if (config.vehicle_accel_noise > 0.0)
      out.accel += config.vehicle_accel_noise*gauss(rng);
    if (config.vehicle_steering_noise > 0.0)
      out.steering_rate += config.vehicle_steering_noise*gauss(rng);
    return agents::clip_action(out, params.vehicle);
  }
  agents::RobotAction out = std::get<agents::RobotAction>(action);
  if (config.robot_accel_noise > 0.0)
    out.accel += config.robot_accel_noise*gauss(rng);
  return agents::clip_action(out, params.robot);
}

//==============================================================================
std::string_view to_string(FilterVariant v)
{
  switch (v)
  {
    case FilterVariant::None: return "none";
    case FilterVariant::RewardShaping: return "reward_shaping";
    case FilterVariant::ActionMask: return "action_mask";
    case FilterVariant::Dmps: return "dmps";
    case FilterVariant::DmpsNoPrediction: return "dmps_no_prediction";
    case FilterVariant::DmpsNoGradient: return "dmps_no_gradient";
  }
  return "none";
}

//==============================================================================
FilterVariant variant_from_string(std::string_view name)
{
  for (const auto v : all_variants())
  {
    if (to_string(v) == name)
      return v;
  }
  throw ConfigError("unknown variant '" + std::string(name) + "'");
}

//==============================================================================
const std::vector<FilterVariant>& all_variants()
{
  static const std::vector<FilterVariant> all = {
    FilterVariant::None, FilterVariant::RewardShaping, FilterVariant::ActionMask,
    FilterVariant::Dmps, FilterVariant::DmpsNoPrediction,
    FilterVariant::DmpsNoGradient};
  return all;
}

//==============================================================================
bool uses_models(FilterVariant v)
{
  return v == FilterVariant::Dmps || v == FilterVariant::DmpsNoPrediction
    || v == FilterVariant::DmpsNoGradient;
}

//==============================================================================
void validate(const FilterConfig& c)
{
  if (!std::isfinite(c.tau))
    throw ValidationError("tau must be finite");
  if (!(c.alpha > 0.0) || !std::isfinite(c.alpha))
    throw ValidationError("alpha must be positive");
  if (c.horizon < 1)
    throw ValidationError("horizon must be at least 1");
  if (c.max_backtracks < 0)
    throw ValidationError("max_backtracks must be non-negative");
  if (c.vehicle_candidates.empty() || c.robot_candidates.empty())
    throw ValidationError("action mask candidate sets must be non-empty");
  if (!std::is_sorted(c.vehicle_candidates.begin(), c.vehicle_candidates.end())
    || !std::is_sorted(c.robot_candidates.begin(), c.robot_candidates.end()))
  {
    throw ValidationError("action mask candidates must be sorted ascending");
  }
  if (!(c.vehicle_push >= 0.0) || !(c.robot_push >= 0.0))
    throw ValidationError("push magnitudes must be non-negative");
}

//==============================================================================
StepOutcome gradient_step(
  const CostModel& model,
  const Eigen::VectorXd& nominal,
  const Eigen::VectorXd& lower,
  const Eigen::VectorXd& upper,
  const GradientStepConfig& config)
{
  StepOutcome out;
  out.action = nominal;
  const double before = model.cost(nominal);
  if (before <= config.tau)
    return out;

  out.triggered = true;
  auto& rec = out.record;
  rec.nominal = nominal;
  rec.cost_before = before;
  rec.cost_after = before;
  rec.corrected = nominal;
  rec.gradient = model.gradient(nominal);

  if (!rec.gradient.allFinite())
  {
    rec.degraded = true;
    rec.accepted = false;
    return out;
  }

  double alpha = config.alpha;
  for (int k = 0;; ++k)
  {
    const Eigen::VectorXd trial =
      (nominal - alpha*rec.gradient).cwiseMax(lower).cwiseMin(upper);
    const double after = model.cost(trial);
    if (!config.backtracking || after <= before)
    {
      rec.corrected = trial;
      rec.cost_after = after;
      rec.backtracks = k;
      out.action = trial;
      return out;
    }
    if (k == config.max_backtracks)
    {
      rec.backtracks = k;
      rec.accepted = false;
      return out;
    }
    alpha *= 0.5;
  }
}

//==============================================================================
CostGradient cost_and_gradient(
  const predictive::PredictiveModels& models,
  const Eigen::VectorXd& observation,
  const Eigen::VectorXd& action,
  int horizon)
{
  autodiff::Tape tape;
  const auto bound = predictive::bind(tape, models, false);
  const auto z0 = predictive::encode(bound, observation);
  const auto a = tape.leaf(action);
  const auto zs = predictive::unroll(bound, z0, a, horizon);
  const auto c = predictive::trajectory_cost(bound, zs);
  tape.backward(c);
  return CostGradient{c.scalar(), a.grad().col(0)};
}

//==============================================================================
Eigen::VectorXd action_gradient(
  const predictive::PredictiveModels& models,
  const Eigen::VectorXd& observation,
  const Eigen::VectorXd& action,
  int horizon)
{
  return cost_and_gradient(models, observation, action, horizon).gradient;
}

//==============================================================================
std::pair<Eigen::VectorXd, Eigen::VectorXd> action_bounds(
  AgentKind kind, const agents::AgentParams& p)
{
  if (kind == AgentKind::Vehicle)
  {
    Eigen::VectorXd lo(2), hi(2);
    lo << p.vehicle.min_accel, -p.vehicle.max_steering_rate;
    hi << p.vehicle.max_accel, p.vehicle.max_steering_rate;
    return {lo, hi};
  }
  Eigen::VectorXd lo(1), hi(1);
  lo << p.robot.min_accel;
  hi << p.robot.max_accel;
  return {lo, hi};
}

//==============================================================================
FilterResult dmps_correct(
  const predictive::PredictiveModels& models,
  const env::Observation& observation,
  const agents::Action& nominal,
  const FilterConfig& config,
  const agents::AgentParams& params)
{
  return correct_with_horizon(
    models, observation, nominal, config, params, config.horizon);
}

//==============================================================================
FilterResult ablation_no_prediction(
  const predictive::PredictiveModels& models,
  const env::Observation& observation,
  const agents::Action& nominal,
  const FilterConfig& config,
  const agents::AgentParams& params)
{
  return correct_with_horizon(models, observation, nominal, config, params, 1);
}

//==============================================================================
FilterResult ablation_no_gradient(
  const predictive::PredictiveModels& models,
  const env::Observation& observation,
  const agents::Action& nominal,
  const FilterConfig& config,
  const agents::AgentParams& params)
{
  const AgentKind kind = agents::kind_of(nominal);
  if (kind != models.kind)
    throw ContractError("action kind does not match the model kind");

  FilterResult r;
  r.action = nominal;
  const Eigen::VectorXd a = agents::to_vector(nominal);
  const double before =
    predictive::predicted_cost(models, observation.values, a, config.horizon);
  if (before <= config.tau)
    return r;

  const double push =
    kind == AgentKind::Vehicle ? config.vehicle_push : config.robot_push;
  r.action = agents::clip_action(
    with_accel(nominal, agents::longitudinal_accel(nominal) - push), params);

  CorrectionRecord rec;
  rec.kind = kind;
  rec.nominal = a;
  rec.gradient = Eigen::VectorXd::Zero(a.size());
  rec.corrected = agents::to_vector(r.action);
  rec.cost_before = before;
  rec.cost_after = predictive::predicted_cost(
    models, observation.values, rec.corrected, config.horizon);
  r.correction = rec;
  return r;
}

//==============================================================================
agents::Action action_mask_filter(
  const env::WorldState& world,
  int agent_id,
  const agents::Action& nominal,
  const FilterConfig& config,
  const env::EpisodeConfig& episode)
{
  const auto& me = world.agent(agent_id);
  const auto& network = *world.network;
  const auto& params = episode.params;
  const double dt = episode.dt;
  const int H = config.horizon;

  struct Mover
  {
    geometry::Footprint footprint;
    geometry::Point velocity;
  };
  std::vector<Mover> movers;
  for (int id : env::nearest_neighbors(world, agent_id, episode.neighbors))
  {
    const auto& other = world.agent(id);
    movers.push_back(Mover{
      env::footprint_of(world, other, episode),
      agents::velocity_of(other.state, network)});
  }

  const auto overlaps = [&](const agents::AgentState& s, int k)
  {
    const auto mine = agents::render_footprint(s, network, params);
    const double t = k*dt;
    for (const auto& m : movers)
    {
      geometry::Footprint f = m.footprint;
      f.center = geometry::Pose2D(
        f.center.x() + m.velocity.x()*t, f.center.y() + m.velocity.y()*t,
        f.center.heading());
      if (geometry::footprints_intersect(mine, f))
        return true;
    }
    return false;
  };

  const auto safe = [&](const agents::Action& candidate)
  {
    agents::AgentState s = me.state;
    for (int k = 1; k <= H; ++k)
    {
      if (auto* v = std::get_if<agents::VehicleState>(&s))
      {
        *v = agents::step_vehicle(
          *v, std::get<agents::VehicleAction>(candidate), dt, params.vehicle);
      }
      else
      {
        auto& r = std::get<agents::RobotState>(s);
        const double length =
          network.robot_paths.at(static_cast<std::size_t>(r.path_id)).length();
        r = agents::step_robot(
          r, std::get<agents::RobotAction>(candidate), dt, length, params.robot).state;
      }
      if (overlaps(s, k))
        return false;
    }
    return true;
  };

  const agents::Action clipped = agents::clip_action(nominal, params);
  const double target = agents::longitudinal_accel(clipped);
  const auto& candidates = me.kind == AgentKind::Vehicle
    ? config.vehicle_candidates : config.robot_candidates;

  std::optional<agents::Action> best;
  double best_gap = 0.0;
  for (double c : candidates)
  {
    const agents::Action cand = agents::clip_action(with_accel(clipped, c), params);
    const double gap = std::abs(agents::longitudinal_accel(cand) - target);
    if (best && gap >= best_gap)
      continue;
    if (!safe(cand))
      continue;
    best = cand;
    best_gap = gap;
  }

  if (best)
    return *best;

  const double hardest = me.kind == AgentKind::Vehicle
    ? params.vehicle.min_accel : params.robot.min_accel;
  return agents::clip_action(with_accel(clipped, hardest), params);
}

//==============================================================================
FilterResult apply_filter(
  const env::WorldState& world,
  const env::AgentRecord& agent,
  const env::Observation& observation,
  const agents::Action& nominal,
  const FilterConfig& config,
  const env::EpisodeConfig& episode,
  const predictive::ModelBundle* models)
{
  if (uses_models(config.variant) && models == nullptr)
  {
    throw ContractError(
      "variant " + std::string(to_string(config.variant)) + " needs trained models");
  }

  FilterResult r;
  switch (config.variant)
  {
    case FilterVariant::None:
    case FilterVariant::RewardShaping:
      r.action = nominal;
      break;
    case FilterVariant::ActionMask:
      r.action = action_mask_filter(world, agent.id, nominal, config, episode);
      break;
    case FilterVariant::Dmps:
      r = dmps_correct(
        models->of(agent.kind), observation, nominal, config, episode.params);
      break;
    case FilterVariant::DmpsNoPrediction:
      r = ablation_no_prediction(
        models->of(agent.kind), observation, nominal, config, episode.params);
      break;
    case FilterVariant::DmpsNoGradient:
      r = ablation_no_gradient(
        models->of(agent.kind), observation, nominal, config, episode.params);
      break;
  }

  if (r.correction)
  {
    r.correction->agent_id = agent.id;
    r.correction->time_step = world.time_step;
  }
  return r;
}

} // namespace safety
} // namespace mixsafe
