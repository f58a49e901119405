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
#include <mixsafe/predictive.hpp>
#include <mixsafe/safety.hpp>

#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <optional>
#include <random>

using namespace mixsafe;
using namespace mixsafe::predictive;
using autodiff::Tape;

namespace {

ModelConfig small_config()
{
  ModelConfig c;
  c.latent_dim = 8;
  c.encoder_hidden = {16};
  c.dynamics_hidden = {16};
  c.critic_hidden = {8};
  c.seed = 3;
  return c;
}

env::EpisodeConfig light_episode()
{
  env::EpisodeConfig c;
  c.n_vehicles = 3;
  c.n_robots = 4;
  c.max_steps = 200;
  return c;
}

Policy nominal()
{
  const env::EpisodeConfig episode = light_episode();
  return [episode](const env::WorldState&, const env::AgentRecord&, const env::Observation& o)
  {
    return safety::nominal_policy(o, safety::NominalConfig{}, episode.weights, episode.params);
  };
}

const TransitionBatch& shared_dataset()
{
  static const TransitionBatch batch = collect_dataset(light_episode(), nominal(), 1500, 5);
  return batch;
}

Eigen::VectorXd random_vector(int n, std::mt19937_64& rng)
{
  std::normal_distribution<double> d(0.0, 1.0);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i)
    v[i] = d(rng);
  return v;
}

} // anonymous namespace

//==============================================================================
TEST(Models, ShapesFollowConfig)
{
  const auto m = make_models(AgentKind::Vehicle, 6, small_config());
  EXPECT_EQ(m.obs_dim, env::ObservationLayout::width(6));
  EXPECT_EQ(m.action_dim, 2);
  EXPECT_EQ(m.encoder.input_dim(), m.obs_dim);
  EXPECT_EQ(m.encoder.output_dim(), 8);
  EXPECT_EQ(m.dynamics.input_dim(), 8 + 2);
  EXPECT_EQ(m.dynamics.output_dim(), 8);
  EXPECT_EQ(m.critic.output_dim(), 1);
  EXPECT_EQ(m.obs_scale.size(), m.obs_dim);
  EXPECT_TRUE((m.obs_scale.array() > 0.0).all());

  const auto r = make_models(AgentKind::Robot, 6, small_config());
  EXPECT_EQ(r.action_dim, 1);
  EXPECT_FALSE(r.encoder == m.encoder);
}

TEST(Models, ZeroDynamicsWeightsGiveZeroLatent)
{
  auto m = make_models(AgentKind::Robot, 6, small_config());
  m.dynamics = autodiff::zeros_like(m.dynamics);
  Tape tape;
  const auto bound = bind(tape, m, false);
  std::mt19937_64 rng(1);
  const Var z = encode(bound, random_vector(m.obs_dim, rng));
  const Var next = predict_next(bound, z, tape.constant(Matrix::Constant(1, 1, 0.7)));
  EXPECT_TRUE(next.value().isZero());
}

TEST(Models, UnrollAndPoolingMatchTapeFreeEvaluation)
{
  const auto m = make_models(AgentKind::Vehicle, 6, small_config());
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 20; ++trial)
  {
    const Eigen::VectorXd o = random_vector(m.obs_dim, rng);
    const Eigen::VectorXd a = random_vector(2, rng);
    Tape tape;
    const auto bound = bind(tape, m, false);
    const auto zs = unroll(bound, encode(bound, o), tape.constant(a), 10);
    ASSERT_EQ(zs.size(), 10u);
    const Var cost = trajectory_cost(bound, zs);

    const auto profile = critic_profile(m, o, a, 10);
    ASSERT_EQ(profile.size(), 10u);
    for (std::size_t k = 0; k < zs.size(); ++k)
      EXPECT_EQ(critic(bound, zs[k]).scalar(), profile[k]);
    EXPECT_EQ(cost.scalar(), *std::max_element(profile.begin(), profile.end()));
    EXPECT_EQ(cost.scalar(), predicted_cost(m, o, a, 10));
    EXPECT_GE(cost.scalar(), 0.0);
    EXPECT_LE(cost.scalar(), 1.0);
  }
}

TEST(Models, UnrollPrefixIsConsistent)
{
  const auto m = make_models(AgentKind::Vehicle, 6, small_config());
  std::mt19937_64 rng(12);
  const Eigen::VectorXd o = random_vector(m.obs_dim, rng);
  const Eigen::VectorXd a = random_vector(2, rng);
  Tape tape;
  const auto bound = bind(tape, m, false);
  const Var z0 = encode(bound, o);
  const auto long_run = unroll(bound, z0, tape.constant(a), 10);
  const auto short_run = unroll(bound, z0, tape.constant(a), 5);
  ASSERT_EQ(short_run.size(), 5u);
  for (std::size_t k = 0; k < short_run.size(); ++k)
    EXPECT_EQ(long_run[k].value(), short_run[k].value());

  const auto one = unroll(bound, z0, tape.constant(a), 1);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one[0].value(), predict_next(bound, z0, tape.constant(a)).value());
}

TEST(Models, PooledGradientFlowsThroughArgmaxStepOnly)
{
  const auto m = make_models(AgentKind::Vehicle, 6, small_config());
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 10; ++trial)
  {
    const Eigen::VectorXd o = random_vector(m.obs_dim, rng);
    const Eigen::VectorXd a = random_vector(2, rng);
    const auto profile = critic_profile(m, o, a, 10);
    const auto k_max = static_cast<std::size_t>(
      std::max_element(profile.begin(), profile.end()) - profile.begin());

    const auto action_grad = [&](std::optional<std::size_t> step)
    {
      Tape tape;
      const auto bound = bind(tape, m, false);
      const Var action = tape.leaf(a);
      const auto zs = unroll(bound, encode(bound, o), action, 10);
      tape.backward(step ? critic(bound, zs[*step]) : trajectory_cost(bound, zs));
      return Matrix(action.grad());
    };

    const Matrix pooled = action_grad(std::nullopt);
    const Matrix at_max = action_grad(k_max);
    EXPECT_TRUE(pooled.isApprox(at_max, 1e-12)) << "trial " << trial;
    for (std::size_t k = 0; k < profile.size(); ++k)
    {
      if (k != k_max && profile[k] != profile[k_max])
        EXPECT_FALSE(pooled.isApprox(action_grad(k), 1e-9)) << "step " << k;
    }
  }
}

TEST(Models, MaxPoolingIsMonotoneAndOrderFree)
{
  // Scalar latent with critic sigmoid(z): per-step costs are set directly.
  ModelConfig config;
  config.latent_dim = 1;
  config.encoder_hidden = {};
  config.dynamics_hidden = {};
  config.critic_hidden = {};
  auto m = make_models(AgentKind::Robot, 6, config);
  m.critic.layers[0].weight(0, 0) = 1.0;
  m.critic.layers[0].bias[0] = 0.0;

  const auto pooled = [&](const std::vector<double>& zs)
  {
    Tape tape;
    const auto bound = bind(tape, m, false);
    std::vector<Var> latents;
    for (double z : zs)
      latents.push_back(tape.constant(Matrix::Constant(1, 1, z)));
    return trajectory_cost(bound, latents).scalar();
  };
  const auto sigmoid = [](double z) { return 1.0/(1.0 + std::exp(-z)); };

  std::mt19937_64 rng(14);
  std::normal_distribution<double> n(0.0, 2.0);
  for (int trial = 0; trial < 50; ++trial)
  {
    std::vector<double> zs(6);
    for (double& z : zs)
      z = n(rng);
    const double base = pooled(zs);
    EXPECT_EQ(base, sigmoid(*std::max_element(zs.begin(), zs.end())));

    auto shuffled = zs;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    EXPECT_EQ(pooled(shuffled), base);

    auto raised = zs;
    raised[static_cast<std::size_t>(trial) % raised.size()] += std::abs(n(rng));
    EXPECT_GE(pooled(raised), base);
  }

  // Constant zero costs give zero gradient everywhere.
  m.critic.layers[0].weight(0, 0) = 0.0;
  m.critic.layers[0].bias[0] = -1e3;
  Tape tape;
  const auto flat = bind(tape, m, false);
  const Var z = tape.leaf(Matrix::Constant(1, 1, 0.3));
  const std::vector<Var> latents{z, z*2.0, z*3.0};
  tape.backward(trajectory_cost(flat, latents));
  EXPECT_EQ(trajectory_cost(flat, latents).scalar(), 0.0);
  EXPECT_EQ(z.grad()(0, 0), 0.0);
}

TEST(Models, LogSumExpPoolingUpperBoundsMax)
{
  auto m = make_models(AgentKind::Robot, 6, small_config());
  std::mt19937_64 rng(3);
  const Eigen::VectorXd o = random_vector(m.obs_dim, rng);
  const Eigen::VectorXd a = Eigen::VectorXd::Constant(1, 0.2);
  const double hard = predicted_cost(m, o, a, 10);
  m.pooling = Pooling::LogSumExp;
  m.temperature = 0.05;
  const double soft = predicted_cost(m, o, a, 10);
  EXPECT_GE(soft, hard);
  EXPECT_LE(soft, hard + 0.05*std::log(10.0) + 1e-12);
}

TEST(Models, ContractViolations)
{
  const auto m = make_models(AgentKind::Vehicle, 6, small_config());
  Tape tape;
  const auto bound = bind(tape, m, false);
  EXPECT_THROW(encode(bound, Eigen::VectorXd::Zero(3)), ShapeError);
  const Var z = encode(bound, Eigen::VectorXd::Zero(m.obs_dim));
  EXPECT_THROW(unroll(bound, z, tape.constant(Matrix::Zero(2, 1)), 0), ContractError);
  EXPECT_THROW(predict_next(bound, z, tape.constant(Matrix::Zero(1, 1))), ShapeError);
  EXPECT_THROW(trajectory_cost(bound, std::vector<Var>{}), ContractError);
}

//==============================================================================
TEST(Training, TargetBranchCarriesNoEncoderGradient)
{
  const auto m = make_models(AgentKind::Vehicle, 6, small_config());
  const auto& data = shared_dataset().of_kind(AgentKind::Vehicle);
  ASSERT_GT(data.size(), 10u);
  Matrix next(m.obs_dim, 10), actions(2, 10);
  for (int i = 0; i < 10; ++i)
  {
    next.col(i) = data.items[i].next_obs;
    actions.col(i) = data.items[i].action;
  }

  // Only the target branch touches the encoder once the o_t branch is a
  // constant latent.
  Tape tape;
  const auto bound = bind(tape, m, true);
  const Var z = tape.constant(Matrix::Zero(m.latent_dim, 10));
  const Var pred = predict_next(bound, z, tape.constant(actions));
  const Var loss = sum(square(pred - target_latent(bound, next)));
  tape.backward(loss);
  const auto enc = autodiff::gradients(m.encoder, bound.encoder);
  for (const auto& layer : enc.layers)
  {
    EXPECT_TRUE(layer.weight.isZero());
    EXPECT_TRUE(layer.bias.isZero());
  }
  const auto dyn = autodiff::gradients(m.dynamics, bound.dynamics);
  EXPECT_FALSE(dyn.layers.back().weight.isZero());
}

TEST(Training, ZeroCriticWeightLeavesCriticUntouched)
{
  const auto m = make_models(AgentKind::Robot, 6, small_config());
  TrainConfig tc;
  tc.epochs = 3;
  tc.lambda_critic = 0.0;
  tc.batch_size = 128;
  const auto result = train(m, shared_dataset().of_kind(AgentKind::Robot), tc);
  EXPECT_TRUE(result.models.critic == m.critic);
  EXPECT_FALSE(result.models.dynamics == m.dynamics);
  EXPECT_FALSE(result.models.encoder == m.encoder);
}

TEST(Training, LossDecreasesAndIsDeterministic)
{
  const auto m = make_models(AgentKind::Robot, 6, small_config());
  TrainConfig tc;
  tc.epochs = 15;
  tc.batch_size = 64;
  tc.learning_rate = 3e-3;
  const auto& data = shared_dataset().of_kind(AgentKind::Robot);
  const auto a = train(m, data, tc);
  ASSERT_EQ(a.loss_history.size(), 15u);
  EXPECT_LT(a.loss_history.back(), a.loss_history.front());
  const auto b = train(m, data, tc);
  EXPECT_TRUE(a.models == b.models);
  EXPECT_EQ(a.loss_history, b.loss_history);
}

TEST(Training, RejectsEmptyOrMismatchedBatches)
{
  const auto m = make_models(AgentKind::Vehicle, 6, small_config());
  EXPECT_THROW(train(m, TransitionBatch{}, TrainConfig{}), TrainingError);
  EXPECT_THROW(
    train(m, shared_dataset().of_kind(AgentKind::Robot), TrainConfig{}), TrainingError);
}

//==============================================================================
TEST(Dataset, CollectionIsExactAndDeterministic)
{
  const auto& a = shared_dataset();
  ASSERT_EQ(a.size(), 1500u);
  const auto b = collect_dataset(light_episode(), nominal(), 1500, 5);
  for (std::size_t i = 0; i < a.size(); ++i)
  {
    EXPECT_EQ(a.items[i].obs, b.items[i].obs);
    EXPECT_EQ(a.items[i].cost, b.items[i].cost);
  }
  for (const auto& t : a.items)
  {
    EXPECT_GE(t.cost, 0.0);
    EXPECT_LE(t.cost, 1.0);
    EXPECT_EQ(t.action.size(), agents::action_dim(t.kind));
    EXPECT_TRUE(agents::within_bounds(agents::action_from_vector(t.kind, t.action)));
  }
}

TEST(Dataset, RecklessAgentsYieldHighCostSamples)
{
  env::EpisodeConfig dense;
  dense.n_vehicles = 10;
  dense.n_robots = 15;
  CollectConfig collect;
  collect.reckless_fraction = 0.3;
  const auto batch = collect_dataset(dense, nominal(), 10000, 8, collect);
  std::size_t high = 0;
  for (const auto& t : batch.items)
  {
    EXPECT_GE(t.cost, 0.0);
    EXPECT_LE(t.cost, 1.0);
    if (t.cost >= 0.9)
      ++high;
  }
  EXPECT_GE(high, batch.size()/100) << high << " high-cost samples";
}

TEST(Dataset, SplitAndFileRoundTrip)
{
  const auto& data = shared_dataset();
  const auto [train_part, test_part] = data.split(0.8, 9);
  EXPECT_EQ(train_part.size(), 1200u);
  EXPECT_EQ(test_part.size(), 300u);
  const auto again = data.split(0.8, 9);
  EXPECT_EQ(again.first.items.front().obs, train_part.items.front().obs);

  const auto file = std::filesystem::temp_directory_path() / "mixsafe_transitions.jsonl";
  write_transitions(file, test_part);
  const auto back = read_transitions(file);
  ASSERT_EQ(back.size(), test_part.size());
  for (std::size_t i = 0; i < back.size(); ++i)
  {
    EXPECT_EQ(back.items[i].kind, test_part.items[i].kind);
    EXPECT_EQ(back.items[i].obs, test_part.items[i].obs);
    EXPECT_EQ(back.items[i].next_obs, test_part.items[i].next_obs);
    EXPECT_EQ(back.items[i].cost, test_part.items[i].cost);
  }
  std::filesystem::remove(file);
}

//==============================================================================
TEST(ModelFiles, BundleRoundTripAndMissingFiles)
{
  const auto dir = std::filesystem::temp_directory_path() / "mixsafe_bundle_test";
  std::filesystem::remove_all(dir);
  EXPECT_THROW(load_bundle(dir), CheckpointError);
  auto config = small_config();
  config.pooling = Pooling::LogSumExp;
  config.temperature = 0.2;
  const ModelBundle bundle = make_bundle(6, config);
  save_bundle(dir, bundle);
  const ModelBundle back = load_bundle(dir);
  EXPECT_TRUE(back.vehicle == bundle.vehicle);
  EXPECT_TRUE(back.robot == bundle.robot);
  EXPECT_EQ(back.robot.pooling, Pooling::LogSumExp);
  std::filesystem::remove(dir / "robot.ckpt");
  EXPECT_THROW(load_bundle(dir), CheckpointError);
  std::filesystem::remove_all(dir);
}
