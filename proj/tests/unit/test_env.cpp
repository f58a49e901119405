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

#include <gtest/gtest.h>

#include <random>
#include <set>

using namespace mixsafe;
using namespace mixsafe::env;

namespace {

EpisodeConfig dense()
{
  EpisodeConfig c;
  c.n_vehicles = 10;
  c.n_robots = 15;
  c.max_steps = 300;
  return c;
}

JointAction random_actions(const WorldState& world, std::mt19937_64& rng)
{
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  JointAction out;
  for (const auto& a : world.agents)
  {
    if (!a.active())
      continue;
    if (a.kind == AgentKind::Vehicle)
      out[a.id] = agents::VehicleAction{2.0 + 2.0*u(rng), 0.2*u(rng)};
    else
      out[a.id] = agents::RobotAction{u(rng)};
  }
  return out;
}

} // anonymous namespace

//==============================================================================
TEST(Reset, DeterministicAndCollisionFree)
{
  const EpisodeConfig config = dense();
  for (std::uint64_t seed = 0; seed < 20; ++seed)
  {
    const WorldState a = reset(config, seed);
    const WorldState b = reset(config, seed);
    EXPECT_TRUE(a == b);
    ASSERT_EQ(a.agents.size(), 25u);
    for (std::size_t i = 0; i < a.agents.size(); ++i)
    {
      for (std::size_t j = i + 1; j < a.agents.size(); ++j)
      {
        EXPECT_FALSE(geometry::footprints_intersect(
          footprint_of(a, a.agents[i], config), footprint_of(a, a.agents[j], config)));
      }
    }
  }
  EXPECT_FALSE(reset(config, 1) == reset(config, 2));
}

TEST(Reset, InvalidConfigsAreRejected)
{
  EpisodeConfig c;
  c.n_robots = -1;
  EXPECT_THROW(validate(c), ConfigError);
  c = EpisodeConfig{};
  c.dt = 0.0;
  EXPECT_THROW(validate(c), ConfigError);
  c = EpisodeConfig{};
  c.neighbors = 0;
  EXPECT_THROW(validate(c), ConfigError);
}

//==============================================================================
TEST(Step, RobotsAdhereToTheirPaths)
{
  const EpisodeConfig config = dense();
  std::mt19937_64 rng(9);
  for (std::uint64_t seed = 0; seed < 5; ++seed)
  {
    WorldState world = reset(config, seed);
    while (!episode_over(world, config))
    {
      step(world, random_actions(world, rng), config);
      for (const auto& a : world.agents)
      {
        if (a.kind != AgentKind::Robot)
          continue;
        const auto& r = std::get<agents::RobotState>(a.state);
        const auto f = footprint_of(world, a, config);
        EXPECT_LE(
          geometry::distance_to_path(world.network->robot_paths.at(r.path_id), f.center.position()),
          1e-9);
      }
    }
  }
}

TEST(Step, RewardTotalIsExactSumOfComponents)
{
  const EpisodeConfig config = dense();
  std::mt19937_64 rng(10);
  WorldState world = reset(config, 3);
  int checked = 0;
  while (!episode_over(world, config))
  {
    const auto result = step(world, random_actions(world, rng), config);
    for (const auto& [id, r] : result.rewards)
    {
      EXPECT_EQ(r.total, r.goal + r.time + r.comfort + r.proximity);
      EXPECT_LE(r.proximity, 0.0);
      EXPECT_LE(r.comfort, 0.0);
      ++checked;
    }
  }
  EXPECT_GT(checked, 100);
}

TEST(Step, CollidedAgentsFreezeAndAreReportedOnce)
{
  const EpisodeConfig config = dense();
  std::mt19937_64 rng(11);
  WorldState world = reset(config, 4);
  std::set<int> collided;
  while (!episode_over(world, config))
  {
    const auto before = world;
    const auto result = step(world, random_actions(world, rng), config);
    for (const auto& e : result.collisions)
    {
      EXPECT_EQ(e.kind, pair_kind(world.agent(e.agent_a).kind, world.agent(e.agent_b).kind));
      EXPECT_TRUE(before.agent(e.agent_a).active());
      collided.insert(e.agent_a);
      collided.insert(e.agent_b);
    }
    for (const auto& a : before.agents)
    {
      if (!a.active())
        EXPECT_TRUE(world.agent(a.id).state == a.state);
    }
  }
  for (int id : collided)
    EXPECT_EQ(world.agent(id).status, AgentStatus::Collided);
}

TEST(Step, MissingOrMismatchedActionsViolateContract)
{
  const EpisodeConfig config = dense();
  WorldState world = reset(config, 0);
  EXPECT_THROW(step(world, JointAction{}, config), ContractError);

  JointAction wrong;
  for (const auto& a : world.agents)
    wrong[a.id] = agents::RobotAction{0.0};
  WorldState w2 = reset(config, 0);
  EXPECT_THROW(step(w2, wrong, config), ContractError);
}

TEST(Step, WholeEpisodeIsDeterministic)
{
  const EpisodeConfig config = dense();
  auto run = [&]()
  {
    std::mt19937_64 rng(12);
    WorldState world = reset(config, 8);
    while (!episode_over(world, config))
      step(world, random_actions(world, rng), config);
    return world;
  };
  EXPECT_TRUE(run() == run());
}

//==============================================================================
TEST(Observe, LayoutAndNeighborOrdering)
{
  const EpisodeConfig config = dense();
  const WorldState world = reset(config, 1);
  for (const auto& a : world.agents)
  {
    const auto obs = observe(world, a.id, config);
    ASSERT_EQ(obs.values.size(), ObservationLayout::width(config.neighbors));
    EXPECT_DOUBLE_EQ(obs.values[0], a.kind == AgentKind::Vehicle ? 1.0 : -1.0);
    EXPECT_EQ(obs.neighbor_ids.size(), std::size_t(config.neighbors));
    EXPECT_EQ(obs.neighbor_ids, nearest_neighbors(world, a.id, config.neighbors));
    // Neighbor blocks are sorted by distance.
    double last = 0.0;
    for (int k = 0; k < config.neighbors; ++k)
    {
      const int base = ObservationLayout::ego_width + k*ObservationLayout::neighbor_width;
      const double d = std::hypot(obs.values[base], obs.values[base + 1]);
      EXPECT_GE(d + 1e-12, last);
      last = d;
    }
  }
  EXPECT_THROW(observe(world, 9999, config), LookupError);
}

TEST(Observe, RelativePositionsAreAntisymmetric)
{
  EpisodeConfig config;
  config.n_vehicles = 0;
  config.n_robots = 0;
  WorldState world = reset(config, 0);
  const auto& lane = world.network->vehicle_lanes.front();
  const auto near = geometry::pose_on_path(lane, 10.0);
  const auto far = geometry::pose_on_path(lane, 20.0);
  ASSERT_DOUBLE_EQ(near.heading(), far.heading());
  ASSERT_NEAR((far.position() - near.position()).norm(), 10.0, 1e-9);

  for (int id = 0; id < 2; ++id)
  {
    AgentRecord car;
    car.id = id;
    car.kind = AgentKind::Vehicle;
    car.state = agents::VehicleState{id == 0 ? near : far, 5.0, 0.0};
    car.goal = Goal{lane.id(), lane.length(), lane.length()};
    world.agents.push_back(car);
  }

  const int base = ObservationLayout::ego_width;
  const auto behind = observe(world, 0, config);
  const auto ahead = observe(world, 1, config);
  EXPECT_NEAR(behind.values[base], 10.0, 1e-9);
  EXPECT_NEAR(ahead.values[base], -10.0, 1e-9);
  EXPECT_NEAR(behind.values[base + 1], 0.0, 1e-9);
  EXPECT_NEAR(ahead.values[base + 1], 0.0, 1e-9);
  // Equal speeds give zero relative velocity.
  EXPECT_NEAR(behind.values[base + 2], 0.0, 1e-9);
  EXPECT_NEAR(ahead.values[base + 3], 0.0, 1e-9);
}

TEST(Observe, EmptySlotsAreZeroPadded)
{
  EpisodeConfig config;
  config.n_vehicles = 1;
  config.n_robots = 1;
  config.neighbors = 4;
  const WorldState world = reset(config, 2);
  const auto obs = observe(world, world.agents.front().id, config);
  EXPECT_EQ(obs.neighbor_ids.size(), 1u);
  const int tail = ObservationLayout::ego_width + ObservationLayout::neighbor_width;
  EXPECT_TRUE(obs.values.tail(obs.values.size() - tail).isZero());
}

//==============================================================================
TEST(Cost, GroundTruthIsClampedSeparationRatio)
{
  const EpisodeConfig config = dense();
  std::mt19937_64 rng(13);
  WorldState world = reset(config, 6);
  for (int k = 0; k < 100 && !episode_over(world, config); ++k)
  {
    step(world, random_actions(world, rng), config);
    for (const auto& a : world.agents)
    {
      const double c = ground_truth_cost(world, a.id, 3.0, config);
      EXPECT_GE(c, 0.0);
      EXPECT_LE(c, 1.0);
      if (a.status == AgentStatus::Collided)
      {
        EXPECT_EQ(c, 1.0);
        continue;
      }
      if (!a.active())
        continue;
      const double d = nearest_separation(world, a.id, config);
      EXPECT_DOUBLE_EQ(c, std::clamp((3.0 - d)/3.0, 0.0, 1.0));
    }
  }
}

//==============================================================================
TEST(Metrics, OutcomesPartitionAgentsAndDelaysAreNonNegative)
{
  const EpisodeConfig config = dense();
  std::mt19937_64 rng(14);
  WorldState world = reset(config, 7);
  EpisodeTrace trace = begin_trace(world, config, 7);
  while (!episode_over(world, config))
    record_step(trace, world, step(world, random_actions(world, rng), config));
  const auto m = episode_metrics(trace);
  EXPECT_EQ(
    m.count(Outcome::Succeeded) + m.count(Outcome::Collided) + m.count(Outcome::TimedOut),
    world.agents.size());
  EXPECT_EQ(m.delays().size(), m.count(Outcome::Succeeded));
  for (double d : m.delays())
    EXPECT_GE(d, -1e-9);
  EXPECT_LE(m.vehicle_robot_collisions(), m.count(Outcome::Collided));
}
