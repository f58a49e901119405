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

#ifndef MIXSAFE__PREDICTIVE_HPP
#define MIXSAFE__PREDICTIVE_HPP

#include <mixsafe/agents.hpp>
#include <mixsafe/autodiff.hpp>
#include <mixsafe/env.hpp>
#include <mixsafe/mlp.hpp>

#include <filesystem>
#include <functional>
#include <span>
#include <vector>

namespace mixsafe {
namespace predictive {

using agents::AgentKind;
using autodiff::Matrix;
using autodiff::Var;

/// How per-step critic values are pooled over the horizon.
enum class Pooling
{
  /// Exact maximum; the gradient flows through the worst step only.
  Max,

  /// Smooth maximum temperature * log(sum(exp(c_k / temperature))).
  LogSumExp
};

//==============================================================================
struct ModelConfig
{
  int latent_dim = 256;
  int horizon = 10;
  std::vector<int> encoder_hidden = {128, 128};
  std::vector<int> dynamics_hidden = {128, 128};
  std::vector<int> critic_hidden = {64, 64};
  autodiff::Activation activation = autodiff::Activation::Tanh;
  Pooling pooling = Pooling::Max;
  double temperature = 0.05;
  std::uint64_t seed = 0;
};

//==============================================================================
/// Encoder (obs -> latent), latent dynamics (latent + action -> latent) and a
/// safety critic (latent -> risk in [0, 1]) for one agent kind.
struct PredictiveModels
{
  AgentKind kind = AgentKind::Vehicle;
  autodiff::MlpParams encoder;
  autodiff::MlpParams dynamics;
  autodiff::MlpParams critic;
  int latent_dim = 0;
  int horizon = 10;
  int obs_dim = 0;
  int action_dim = 0;
  Pooling pooling = Pooling::Max;
  double temperature = 0.05;

  /// Raw observations and actions are divided by these before entering the
  /// networks.
  Eigen::VectorXd obs_scale;
  Eigen::VectorXd action_scale;

  bool operator==(const PredictiveModels&) const;
};

/// Fixed per-feature scales for one agent kind and the observation layout
/// with the given number of neighbor blocks.
Eigen::VectorXd observation_scale(
  AgentKind kind, int neighbors, const agents::AgentParams& params = {});

PredictiveModels make_models(
  AgentKind kind,
  int neighbors,
  const ModelConfig& config,
  const agents::AgentParams& params = {});

//==============================================================================
/// One model triplet per agent kind.
struct ModelBundle
{
  PredictiveModels vehicle;
  PredictiveModels robot;

  const PredictiveModels& of(AgentKind kind) const
  {
    return kind == AgentKind::Vehicle ? vehicle : robot;
  }
  PredictiveModels& of(AgentKind kind)
  {
    return kind == AgentKind::Vehicle ? vehicle : robot;
  }
};

ModelBundle make_bundle(
  int neighbors,
  const ModelConfig& config,
  const agents::AgentParams& params = {});

//==============================================================================
/// Models recorded on a tape.
struct BoundModels
{
  const PredictiveModels* models = nullptr;
  autodiff::Tape* tape = nullptr;
  autodiff::MlpVars encoder;
  autodiff::MlpVars dynamics;
  autodiff::MlpVars critic;
};

BoundModels bind(autodiff::Tape& tape, const PredictiveModels& models, bool trainable);

/// Latents for raw observations stored as columns. Throws ShapeError for a
/// wrong observation height.
Var encode(const BoundModels& bound, const Matrix& observations);

/// Stop-gradient latent targets for the successor observations.
Var target_latent(const BoundModels& bound, const Matrix& next_observations);

/// Next latent from the concatenation of latent and scaled action. Throws
/// ShapeError on mismatched dimensions.
Var predict_next(const BoundModels& bound, Var latent, Var action);

/// [z_1, ..., z_H] with the action held for all H steps. Throws
/// ContractError for H < 1.
std::vector<Var> unroll(const BoundModels& bound, Var z0, Var action, int horizon);

/// Sigmoid risk for each latent column, a 1 x B node.
Var critic(const BoundModels& bound, Var latent);

/// Pooled critic over a predicted latent trajectory. Throws ContractError for
/// an empty list.
Var trajectory_cost(const BoundModels& bound, std::span<const Var> latents);

//==============================================================================
// Tape-free evaluation with arithmetic identical to the taped graph.

Eigen::VectorXd encode_value(const PredictiveModels& models, const Eigen::VectorXd& observation);

/// Per-step critic values over an H-step unroll.
std::vector<double> critic_profile(
  const PredictiveModels& models,
  const Eigen::VectorXd& observation,
  const Eigen::VectorXd& action,
  int horizon);

/// Pooled predicted risk of holding an action for H steps.
double predicted_cost(
  const PredictiveModels& models,
  const Eigen::VectorXd& observation,
  const Eigen::VectorXd& action,
  int horizon);

//==============================================================================
struct Transition
{
  AgentKind kind = AgentKind::Vehicle;
  Eigen::VectorXd obs;
  Eigen::VectorXd action;
  Eigen::VectorXd next_obs;
  double cost = 0.0;
};

struct TransitionBatch
{
  std::vector<Transition> items;

  std::size_t size() const { return items.size(); }
  bool empty() const { return items.empty(); }
  TransitionBatch of_kind(AgentKind kind) const;

  /// Deterministic split; the first part holds round(fraction * size) items
  /// drawn by a seeded shuffle.
  std::pair<TransitionBatch, TransitionBatch> split(double fraction, std::uint64_t seed) const;
};

/// One JSON object per line:
///   {"kind": "vehicle", "obs": [...], "action": [...], "next_obs": [...], "cost": c}
void write_transitions(const std::filesystem::path& file, const TransitionBatch& batch);
TransitionBatch read_transitions(const std::filesystem::path& file);

//==============================================================================
/// Deterministic policy used for data collection.
using Policy = std::function<agents::Action(
  const env::WorldState& world,
  const env::AgentRecord& agent,
  const env::Observation& observation)>;

struct CollectConfig
{
  /// Gaussian exploration noise added to policy actions.
  double vehicle_accel_sigma = 1.0;
  double vehicle_steering_sigma = 0.1;
  double robot_accel_sigma = 0.3;

  /// Probability that an agent is reckless for a whole episode. Reckless
  /// agents ignore the others: their acceleration is drawn uniformly over the
  /// admissible range and held for a random number of steps in
  /// [reckless_hold_min, reckless_hold_max]. Vehicles keep their lane-keeping
  /// steering.
  double reckless_fraction = 0.3;
  int reckless_hold_min = 5;
  int reckless_hold_max = 20;
  /// Separation at which the risk label reaches zero.
  double label_d_safe = 3.0;
};

/// Rolls out episodes until exactly n transitions are gathered. Each
/// transition is labeled with the ground-truth cost of its successor state.
TransitionBatch collect_dataset(
  const env::EpisodeConfig& config,
  const Policy& policy,
  std::size_t n_transitions,
  std::uint64_t seed,
  const CollectConfig& collect = {});

//==============================================================================
struct TrainConfig
{
  int epochs = 50;
  double lambda_dyn = 1.0;
  double lambda_critic = 1.0;
  double learning_rate = 1e-3;

  /// Zero selects full-batch training.
  std::size_t batch_size = 256;
  std::uint64_t seed = 0;
};

struct TrainResult
{
  PredictiveModels models;

  /// Mean joint loss per epoch, evaluated on each minibatch before its
  /// update.
  std::vector<double> loss_history;
  std::vector<double> dynamics_history;
  std::vector<double> critic_history;
};

struct JointLoss
{
  Var total;
  Var dynamics;
  Var critic;
};

/// lambda_dyn * mean ||f(phi(o), a) - sg(phi(o'))||^2
///   + lambda_critic * mean (c(f(phi(o), a)) - c*)^2
JointLoss joint_loss(
  const BoundModels& bound,
  const Matrix& obs,
  const Matrix& actions,
  const Matrix& next_obs,
  const Eigen::RowVectorXd& costs,
  double lambda_dyn,
  double lambda_critic);

/// Minibatch Adam on the joint loss. Throws TrainingError for an empty batch
/// or a non-finite loss.
TrainResult train(
  const PredictiveModels& models,
  const TransitionBatch& batch,
  const TrainConfig& config);

/// Mean |c(f(phi(o), a)) - c*| over a batch.
double critic_mae(const PredictiveModels& models, const TransitionBatch& batch);

//==============================================================================
/// Model checkpoints use the autodiff checkpoint format with networks named
/// "encoder", "dynamics" and "critic".
void save_models(const std::filesystem::path& file, const PredictiveModels& models);
PredictiveModels load_models(const std::filesystem::path& file);

/// Writes vehicle.ckpt and robot.ckpt into a directory.
void save_bundle(const std::filesystem::path& dir, const ModelBundle& bundle);

/// Throws CheckpointError when either file is missing.
ModelBundle load_bundle(const std::filesystem::path& dir);

} // namespace predictive
} // namespace mixsafe

#endif // MIXSAFE__PREDICTIVE_HPP
