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
#include <mixsafe/harness.hpp>
#include <mixsafe/safety.hpp>

#include <gtest/gtest.h>

#include <limits>
#include <random>

using namespace mixsafe;
using namespace mixsafe::safety;
using predictive::PredictiveModels;

namespace {

CostModel linear_cost(double offset, const Eigen::VectorXd& slope)
{
  return CostModel{
    [=](const Eigen::VectorXd& a) { return offset + slope.dot(a); },
    [=](const Eigen::VectorXd&) { return slope; }};
}

// Single-layer vehicle models whose risk is sigmoid(20 * (accel - 2)) for
// every predicted step: zero encoder, dynamics that copy the scaled
// acceleration into a one-dimensional latent, linear critic.
PredictiveModels crafted_vehicle_models()
{
  predictive::ModelConfig config;
  config.latent_dim = 1;
  config.encoder_hidden = {};
  config.dynamics_hidden = {};
  config.critic_hidden = {};
  auto m = predictive::make_models(AgentKind::Vehicle, 6, config);
  m.encoder = autodiff::zeros_like(m.encoder);
  m.dynamics = autodiff::zeros_like(m.dynamics);
  m.dynamics.layers[0].weight(0, 1) = m.action_scale[0];
  m.critic.layers[0].weight(0, 0) = 20.0;
  m.critic.layers[0].bias[0] = -40.0;
  return m;
}

predictive::ModelConfig small_config()
{
  predictive::ModelConfig c;
  c.latent_dim = 8;
  c.encoder_hidden = {16};
  c.dynamics_hidden = {16};
  c.critic_hidden = {8};
  c.seed = 4;
  return c;
}

env::Observation blank_observation(int width)
{
  return env::Observation{Eigen::VectorXd::Zero(width), {}};
}

} // anonymous namespace

//==============================================================================
TEST(GradientStep, WorkedExampleReducesTwoToOnePointFive)
{
  Eigen::VectorXd slope(1);
  slope << 5.0;
  Eigen::VectorXd nominal(1), lo(1), hi(1);
  nominal << 2.0;
  lo << -8.0;
  hi << 4.0;
  GradientStepConfig config;
  config.alpha = 0.1;
  const auto out = gradient_step(linear_cost(0.0, slope), nominal, lo, hi, config);
  EXPECT_TRUE(out.triggered);
  EXPECT_EQ(out.action[0], 1.5);
  EXPECT_EQ(out.record.backtracks, 0);
  EXPECT_TRUE(out.record.accepted);
  EXPECT_EQ(out.record.cost_after, 7.5);
}

TEST(GradientStep, GateSkipsLowRisk)
{
  Eigen::VectorXd slope(1);
  slope << 0.1;
  Eigen::VectorXd nominal(1), lo(1), hi(1);
  nominal << 2.0;
  lo << -8.0;
  hi << 4.0;
  const auto out = gradient_step(linear_cost(0.0, slope), nominal, lo, hi, {});
  EXPECT_FALSE(out.triggered);
  EXPECT_EQ(out.action, nominal);
}

TEST(GradientStep, ProjectsOntoBounds)
{
  Eigen::VectorXd slope(2);
  slope << 100.0, -100.0;
  Eigen::VectorXd nominal(2), lo(2), hi(2);
  nominal << 0.0, 0.0;
  lo << -8.0, -1.0;
  hi << 4.0, 1.0;
  GradientStepConfig config;
  config.alpha = 1.0;
  config.tau = -1e9;
  const auto out = gradient_step(linear_cost(0.0, slope), nominal, lo, hi, config);
  EXPECT_EQ(out.action[0], -8.0);
  EXPECT_EQ(out.action[1], 1.0);
}

TEST(GradientStep, BacktracksUntilCostDoesNotRise)
{
  // Cost (a - 1)^2 with a wildly overshooting step.
  CostModel model{
    [](const Eigen::VectorXd& a) { return (a[0] - 1.0)*(a[0] - 1.0); },
    [](const Eigen::VectorXd& a) { Eigen::VectorXd g(1); g << 2.0*(a[0] - 1.0); return g; }};
  Eigen::VectorXd nominal(1), lo(1), hi(1);
  nominal << 3.0;
  lo << -100.0;
  hi << 100.0;
  GradientStepConfig config;
  config.alpha = 4.0;
  const auto out = gradient_step(model, nominal, lo, hi, config);
  EXPECT_TRUE(out.record.accepted);
  EXPECT_GT(out.record.backtracks, 0);
  EXPECT_LE(out.record.cost_after, out.record.cost_before);

  config.backtracking = false;
  const auto raw = gradient_step(model, nominal, lo, hi, config);
  EXPECT_GT(raw.record.cost_after, raw.record.cost_before);
}

TEST(GradientStep, KeepsNominalWhenEveryTrialRaisesCost)
{
  // The reported gradient points uphill.
  CostModel model{
    [](const Eigen::VectorXd& a) { return 1.0 + a[0]; },
    [](const Eigen::VectorXd&) { Eigen::VectorXd g(1); g << -1.0; return g; }};
  Eigen::VectorXd nominal(1), lo(1), hi(1);
  nominal << 0.0;
  lo << -1.0;
  hi << 1.0;
  GradientStepConfig config;
  config.max_backtracks = 5;
  const auto out = gradient_step(model, nominal, lo, hi, config);
  EXPECT_FALSE(out.record.accepted);
  EXPECT_EQ(out.record.backtracks, 5);
  EXPECT_EQ(out.action, nominal);
}

TEST(GradientStep, NonFiniteGradientDegradesToNominal)
{
  CostModel model{
    [](const Eigen::VectorXd&) { return 1.0; },
    [](const Eigen::VectorXd&)
    {
      Eigen::VectorXd g(1);
      g << std::numeric_limits<double>::quiet_NaN();
      return g;
    }};
  Eigen::VectorXd nominal(1), lo(1), hi(1);
  nominal << 0.5;
  lo << -1.0;
  hi << 1.0;
  const auto out = gradient_step(model, nominal, lo, hi, {});
  EXPECT_TRUE(out.record.degraded);
  EXPECT_EQ(out.action, nominal);
}

//==============================================================================
TEST(Dmps, WorkedExampleThroughCraftedModels)
{
  const auto m = crafted_vehicle_models();
  const auto obs = blank_observation(m.obs_dim);
  Eigen::VectorXd a(2);
  a << 2.0, 0.0;
  const auto cg = cost_and_gradient(m, obs.values, a, 10);
  EXPECT_EQ(cg.cost, 0.5);
  EXPECT_EQ(cg.gradient[0], 5.0);
  EXPECT_EQ(cg.gradient[1], 0.0);

  FilterConfig config;
  config.alpha = 0.1;
  const auto r = dmps_correct(m, obs, agents::VehicleAction{2.0, 0.0}, config);
  ASSERT_TRUE(r.correction.has_value());
  const auto& v = std::get<agents::VehicleAction>(r.action);
  EXPECT_EQ(v.accel, 1.5);
  EXPECT_EQ(v.steering_rate, 0.0);
  EXPECT_LT(r.correction->cost_after, r.correction->cost_before);
}

TEST(Dmps, GradientMatchesFiniteDifferences)
{
  const auto bundle = predictive::make_bundle(6, small_config());
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 1.0);
  for (AgentKind kind : {AgentKind::Vehicle, AgentKind::Robot})
  {
    const auto& m = bundle.of(kind);
    for (int trial = 0; trial < 20; ++trial)
    {
      Eigen::VectorXd o(m.obs_dim), a(m.action_dim);
      for (int i = 0; i < o.size(); ++i)
        o[i] = n(rng)*m.obs_scale[i];
      for (int i = 0; i < a.size(); ++i)
        a[i] = n(rng)*m.action_scale[i]*0.3;
      const Eigen::VectorXd g = action_gradient(m, o, a, 10);
      for (int i = 0; i < a.size(); ++i)
      {
        const double h = 1e-5*m.action_scale[i];
        Eigen::VectorXd hi = a, lo = a;
        hi[i] += h;
        lo[i] -= h;
        const double fd = (predictive::predicted_cost(m, o, hi, 10)
          - predictive::predicted_cost(m, o, lo, 10))/(2.0*h);
        EXPECT_NEAR(g[i], fd, 1e-6*std::max(1.0, std::abs(fd)));
      }
    }
  }
}

TEST(Dmps, AblationsBehaveAsDocumented)
{
  const auto m = crafted_vehicle_models();
  const auto obs = blank_observation(m.obs_dim);
  FilterConfig config;
  const auto push = ablation_no_gradient(m, obs, agents::VehicleAction{2.0, 0.3}, config);
  ASSERT_TRUE(push.correction.has_value());
  const auto& v = std::get<agents::VehicleAction>(push.action);
  EXPECT_EQ(v.accel, 2.0 - config.vehicle_push);
  EXPECT_EQ(v.steering_rate, 0.3);
  EXPECT_TRUE(push.correction->gradient.isZero());

  const auto quiet = ablation_no_gradient(m, obs, agents::VehicleAction{0.0, 0.0}, config);
  EXPECT_FALSE(quiet.correction.has_value());

  // Every predicted step is identical here, so the one-step horizon sees the
  // same cost and gradient.
  config.alpha = 0.1;
  const auto one = ablation_no_prediction(m, obs, agents::VehicleAction{2.0, 0.0}, config);
  EXPECT_EQ(std::get<agents::VehicleAction>(one.action).accel, 1.5);
}

//==============================================================================
TEST(Variants, NamesRoundTrip)
{
  for (auto v : all_variants())
    EXPECT_EQ(variant_from_string(to_string(v)), v);
  EXPECT_THROW(variant_from_string("cbf"), ConfigError);
  EXPECT_TRUE(uses_models(FilterVariant::DmpsNoGradient));
  EXPECT_FALSE(uses_models(FilterVariant::ActionMask));
}

TEST(Variants, ConfigValidation)
{
  FilterConfig f;
  f.horizon = 0;
  EXPECT_THROW(validate(f), ValidationError);
  f = FilterConfig{};
  f.alpha = -1.0;
  EXPECT_THROW(validate(f), ValidationError);
  NominalConfig n;
  n.headway = 0.0;
  EXPECT_THROW(validate(n), ValidationError);
}

//==============================================================================
TEST(Nominal, CruisesOnOpenRoadAndBrakesForStoppedLeader)
{
  const int width = env::ObservationLayout::width(6);
  env::Observation o{Eigen::VectorXd::Zero(width), {}};
  o.values[0] = 1.0;
  o.values[1] = 5.0;
  o.values[5] = 60.0;
  const env::RewardWeights w;
  const auto free = std::get<agents::VehicleAction>(nominal_policy(o, {}, w));
  EXPECT_GT(free.accel, 0.0);

  // Stopped robot 6 m ahead in the lane.
  const int b = env::ObservationLayout::ego_width;
  o.values[b + 0] = 6.0;
  o.values[b + 2] = -5.0;
  o.values[b + 4] = -1.0;
  o.values[b + 5] = 0.5;
  o.neighbor_ids = {1};
  const auto braked = std::get<agents::VehicleAction>(nominal_policy(o, {}, w));
  EXPECT_LT(braked.accel, -2.0);
}

TEST(Nominal, SteersBackTowardsLane)
{
  const int width = env::ObservationLayout::width(6);
  env::Observation o{Eigen::VectorXd::Zero(width), {}};
  o.values[0] = 1.0;
  o.values[1] = 8.0;
  o.values[3] = 1.0;
  o.values[5] = 60.0;
  const auto a = std::get<agents::VehicleAction>(nominal_policy(o, {}, env::RewardWeights{}));
  EXPECT_LT(a.steering_rate, 0.0);
}

//==============================================================================
TEST(ActionMask, BrakesForBlockedPathAndPassesSteering)
{
  env::EpisodeConfig episode;
  episode.n_vehicles = 0;
  episode.n_robots = 0;
  env::WorldState world = env::reset(episode, 0);
  world.network = std::make_shared<const geometry::PathNetwork>(
    geometry::build_default_intersection());
  const auto& lane = world.network->vehicle_lanes.front();
  const auto pose = geometry::pose_on_path(lane, 20.0);

  env::AgentRecord car;
  car.id = 0;
  car.kind = AgentKind::Vehicle;
  car.state = agents::VehicleState{pose, 10.0, 0.0};
  car.goal = env::Goal{lane.id(), lane.length(), lane.length() - 20.0};
  world.agents.push_back(car);

  // A vehicle stopped 12 m ahead in the same lane.
  env::AgentRecord blocker = car;
  blocker.id = 1;
  blocker.state = agents::VehicleState{geometry::pose_on_path(lane, 32.0), 0.0, 0.0};
  world.agents.push_back(blocker);

  FilterConfig config;
  config.variant = FilterVariant::ActionMask;
  const auto out = action_mask_filter(
    world, 0, agents::VehicleAction{2.0, 0.25}, config, episode);
  const auto& v = std::get<agents::VehicleAction>(out);
  EXPECT_LT(v.accel, 0.0);
  EXPECT_EQ(v.steering_rate, 0.25);

  // With the road clear the nominal candidate survives.
  world.agents.pop_back();
  const auto clear = action_mask_filter(
    world, 0, agents::VehicleAction{2.0, 0.0}, config, episode);
  EXPECT_EQ(std::get<agents::VehicleAction>(clear).accel, 2.0);
}

namespace {

/// Empty world on the default intersection with one vehicle 20 m into the
/// first lane.
env::WorldState lone_vehicle(double speed)
{
  env::EpisodeConfig episode;
  episode.n_vehicles = 0;
  episode.n_robots = 0;
  env::WorldState world = env::reset(episode, 0);
  const auto& lane = world.network->vehicle_lanes.front();
  env::AgentRecord car;
  car.id = 0;
  car.kind = AgentKind::Vehicle;
  car.state = agents::VehicleState{geometry::pose_on_path(lane, 20.0), speed, 0.0};
  car.goal = env::Goal{lane.id(), lane.length(), lane.length() - 20.0};
  world.agents.push_back(car);
  return world;
}

/// True when holding the action for H steps overlaps a neighbor moving at
/// constant velocity.
bool rollout_hits(
  const env::WorldState& world, int id, const agents::Action& action,
  const env::EpisodeConfig& episode, int horizon)
{
  const auto& me = world.agent(id);
  const auto& net = *world.network;
  agents::AgentState s = me.state;
  const auto others = env::nearest_neighbors(world, id, episode.neighbors);
  for (int k = 1; k <= horizon; ++k)
  {
    if (auto* v = std::get_if<agents::VehicleState>(&s))
    {
      *v = agents::step_vehicle(
        *v, std::get<agents::VehicleAction>(action), episode.dt, episode.params.vehicle);
    }
    else
    {
      auto& r = std::get<agents::RobotState>(s);
      const double length = net.robot_paths.at(static_cast<std::size_t>(r.path_id)).length();
      r = agents::step_robot(
        r, std::get<agents::RobotAction>(action), episode.dt, length, episode.params.robot).state;
    }
    const auto mine = agents::render_footprint(s, net, episode.params);
    for (int other : others)
    {
      const auto& o = world.agent(other);
      auto f = env::footprint_of(world, o, episode);
      const auto vel = agents::velocity_of(o.state, net);
      const double t = k*episode.dt;
      f.center = geometry::Pose2D(
        f.center.x() + vel.x()*t, f.center.y() + vel.y()*t, f.center.heading());
      if (geometry::footprints_intersect(mine, f))
        return true;
    }
  }
  return false;
}

} // anonymous namespace

TEST(ActionMask, EmptyNeighborhoodPicksClosestCandidate)
{
  env::EpisodeConfig episode;
  const auto world = lone_vehicle(8.0);
  FilterConfig config;
  config.variant = FilterVariant::ActionMask;
  const auto out = action_mask_filter(world, 0, agents::VehicleAction{1.3, 0.0}, config, episode);
  EXPECT_EQ(std::get<agents::VehicleAction>(out).accel, 2.0);
  const auto low = action_mask_filter(world, 0, agents::VehicleAction{-6.9, 0.0}, config, episode);
  EXPECT_EQ(std::get<agents::VehicleAction>(low).accel, -6.0);
}

TEST(ActionMask, RecedingNeighborMasksNothing)
{
  env::EpisodeConfig episode;
  auto world = lone_vehicle(10.0);
  const auto& lane = world.network->vehicle_lanes.front();
  env::AgentRecord leader = world.agents.front();
  leader.id = 1;
  // Faster than the ego can ever drive, 8 m ahead.
  leader.state = agents::VehicleState{
    geometry::pose_on_path(lane, 28.0), episode.params.vehicle.max_speed + 5.0, 0.0};
  world.agents.push_back(leader);

  FilterConfig config;
  config.variant = FilterVariant::ActionMask;
  const auto out = action_mask_filter(world, 0, agents::VehicleAction{4.0, 0.0}, config, episode);
  EXPECT_EQ(std::get<agents::VehicleAction>(out).accel, 4.0);
}

TEST(ActionMask, NeverReturnsAnOverlappingCandidate)
{
  env::EpisodeConfig episode;
  episode.n_vehicles = 10;
  episode.n_robots = 15;
  episode.max_steps = 150;
  FilterConfig config;
  config.variant = FilterVariant::ActionMask;
  NominalConfig nominal;
  int checked = 0, fallbacks = 0;
  for (std::uint64_t seed = 0; seed < 3; ++seed)
  {
    env::WorldState world = env::reset(episode, seed);
    while (!env::episode_over(world, episode))
    {
      env::JointAction joint;
      for (const auto& a : world.agents)
      {
        if (!a.active())
          continue;
        const auto obs = env::observe(world, a.id, episode);
        const auto nom = nominal_policy(obs, nominal, episode.weights, episode.params);
        const auto out = action_mask_filter(world, a.id, nom, config, episode);
        const double hardest = a.kind == AgentKind::Vehicle
          ? episode.params.vehicle.min_accel : episode.params.robot.min_accel;
        if (agents::longitudinal_accel(out) == hardest && rollout_hits(world, a.id, out, episode, config.horizon))
          ++fallbacks;
        else
          EXPECT_FALSE(rollout_hits(world, a.id, out, episode, config.horizon));
        ++checked;
        joint[a.id] = out;
      }
      env::step(world, joint, episode);
    }
  }
  EXPECT_GT(checked, 1000);
  // Every candidate blocked is rare compared with ordinary decisions.
  EXPECT_LT(fallbacks, checked/10);
}

//==============================================================================
TEST(Filter, ModelVariantsRequireModels)
{
  env::EpisodeConfig episode;
  episode.n_vehicles = 2;
  episode.n_robots = 2;
  const auto world = env::reset(episode, 1);
  const auto& agent = world.agents.front();
  const auto obs = env::observe(world, agent.id, episode);
  FilterConfig config;
  config.variant = FilterVariant::Dmps;
  const agents::Action nominal = agent.kind == AgentKind::Vehicle
    ? agents::Action(agents::VehicleAction{}) : agents::Action(agents::RobotAction{});
  EXPECT_THROW(
    apply_filter(world, agent, obs, nominal, config, episode, nullptr), ContractError);
}

TEST(Filter, EveryVariantKeepsActionsInBounds)
{
  const auto bundle = predictive::make_bundle(6, small_config());
  for (auto variant : all_variants())
  {
    harness::RunConfig rc;
    rc.preset = "light";
    rc.n_episodes = 2;
    rc.n_batches = 1;
    rc.episode.max_steps = 150;
    rc.nominal.vehicle_accel_noise = 2.0;
    rc.nominal.robot_accel_noise = 0.5;
    rc.filter.alpha = 5.0;
    rc.filter.tau = 0.0;
    rc = harness::for_variant(rc, variant);
    int steps = 0;
    harness::CampaignHooks hooks;
    hooks.on_step = [&](const env::WorldState&, const env::JointAction& actions)
    {
      for (const auto& [id, a] : actions)
        EXPECT_TRUE(agents::within_bounds(a)) << to_string(variant) << " agent " << id;
      ++steps;
    };
    harness::run_campaign(rc, &bundle, &hooks);
    EXPECT_GT(steps, 0);
  }
}
