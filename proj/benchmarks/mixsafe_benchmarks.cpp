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
#include <mixsafe/geometry.hpp>
#include <mixsafe/predictive.hpp>
#include <mixsafe/safety.hpp>

#include <benchmark/benchmark.h>

#include <random>

using namespace mixsafe;

namespace {

predictive::ModelConfig model_config(int latent)
{
  predictive::ModelConfig c;
  c.latent_dim = latent;
  c.seed = 1;
  return c;
}

env::EpisodeConfig dense_episode()
{
  env::EpisodeConfig c;
  c.n_vehicles = 10;
  c.n_robots = 15;
  return c;
}

} // anonymous namespace

//==============================================================================
static void BM_SatIntersect(benchmark::State& state)
{
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  std::vector<geometry::Footprint> boxes;
  for (int i = 0; i < 256; ++i)
    boxes.push_back({geometry::Pose2D(u(rng), u(rng), u(rng)), 2.0, 1.0});
  std::size_t i = 0;
  for (auto _ : state)
  {
    benchmark::DoNotOptimize(
      geometry::footprints_intersect(boxes[i % 256], boxes[(i*7 + 3) % 256]));
    ++i;
  }
}
BENCHMARK(BM_SatIntersect);

static void BM_MinSeparation(benchmark::State& state)
{
  const geometry::Footprint a{geometry::Pose2D(0, 0, 0.3), 2.25, 1.0};
  const geometry::Footprint b{geometry::Pose2D(7, 2, 1.2), 0.4, 0.3};
  for (auto _ : state)
    benchmark::DoNotOptimize(geometry::min_separation(a, b));
}
BENCHMARK(BM_MinSeparation);

//==============================================================================
static void BM_EnvStepDense(benchmark::State& state)
{
  const auto config = dense_episode();
  env::WorldState world = env::reset(config, 3);
  for (auto _ : state)
  {
    if (env::episode_over(world, config))
    {
      state.PauseTiming();
      world = env::reset(config, 3);
      state.ResumeTiming();
    }
    env::JointAction actions;
    for (const auto& a : world.agents)
    {
      if (!a.active())
        continue;
      if (a.kind == agents::AgentKind::Vehicle)
        actions[a.id] = agents::VehicleAction{0.5, 0.0};
      else
        actions[a.id] = agents::RobotAction{0.2};
    }
    benchmark::DoNotOptimize(env::step(world, actions, config));
  }
}
BENCHMARK(BM_EnvStepDense);

static void BM_ObserveDense(benchmark::State& state)
{
  const auto config = dense_episode();
  const env::WorldState world = env::reset(config, 4);
  for (auto _ : state)
    benchmark::DoNotOptimize(env::observe(world, 0, config));
}
BENCHMARK(BM_ObserveDense);

//==============================================================================
static void BM_DmpsCorrect(benchmark::State& state)
{
  const int latent = static_cast<int>(state.range(0));
  const auto models = predictive::make_models(agents::AgentKind::Vehicle, 6, model_config(latent));
  const auto config = dense_episode();
  const env::WorldState world = env::reset(config, 5);
  const auto obs = env::observe(world, 0, config);
  safety::FilterConfig filter;
  filter.horizon = 10;
  // The sigmoid critic is strictly positive, so tau = 0 always corrects.
  filter.tau = 0.0;
  const agents::Action nominal = agents::VehicleAction{2.0, 0.0};
  for (auto _ : state)
    benchmark::DoNotOptimize(safety::dmps_correct(models, obs, nominal, filter));
}
BENCHMARK(BM_DmpsCorrect)->Arg(32)->Arg(256)->Unit(benchmark::kMillisecond);

static void BM_PredictedCost(benchmark::State& state)
{
  const auto models = predictive::make_models(agents::AgentKind::Robot, 6, model_config(256));
  const Eigen::VectorXd obs = Eigen::VectorXd::Zero(models.obs_dim);
  const Eigen::VectorXd action = Eigen::VectorXd::Constant(1, 0.3);
  for (auto _ : state)
    benchmark::DoNotOptimize(predictive::predicted_cost(models, obs, action, 10));
}
BENCHMARK(BM_PredictedCost)->Unit(benchmark::kMicrosecond);

static void BM_ActionMask(benchmark::State& state)
{
  const auto config = dense_episode();
  const env::WorldState world = env::reset(config, 6);
  safety::FilterConfig filter;
  filter.variant = safety::FilterVariant::ActionMask;
  const agents::Action nominal = agents::VehicleAction{2.0, 0.0};
  for (auto _ : state)
    benchmark::DoNotOptimize(safety::action_mask_filter(world, 0, nominal, filter, config));
}
BENCHMARK(BM_ActionMask)->Unit(benchmark::kMicrosecond);
BENCHMARK_MAIN();
