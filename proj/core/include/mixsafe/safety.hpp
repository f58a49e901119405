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

#ifndef MIXSAFE__SAFETY_HPP
#define MIXSAFE__SAFETY_HPP

#include <mixsafe/agents.hpp>
#include <mixsafe/env.hpp>
#include <mixsafe/predictive.hpp>

#include <Eigen/Core>

#include <functional>
#include <optional>
#include <random>
#include <string_view>
#include <vector>

namespace mixsafe {
namespace safety {

using agents::AgentKind;

//==============================================================================
/// Hand-written driving behavior used as the unfiltered policy.
struct NominalConfig
{
  double vehicle_cruise = 12.0;
  double robot_cruise = 5.0 / 3.6;
  double speed_gain = 1.0;

  /// Lane keeping: desired steering from a Stanley-style law, tracked with a
  /// proportional steering rate.
  double cross_track_gain = 1.0;
  double steering_gain = 4.0;

  /// Car following: the cruise speed is capped so that the gap to an
  /// in-path leader, less a standstill distance, is covered in headway
  /// seconds. Neighbors closer laterally than the ego half width plus the
  /// scaled neighbor radius plus path_margin count as in-path; lateral relative speed below parallel_speed counts as moving
  /// alongside.
  double headway = 1.0;
  double vehicle_standstill = 2.0;
  double robot_standstill = 0.5;
  double path_margin = 0.3;
  double parallel_speed = 1.0;

  /// Braking for agents ahead that are not moving alongside is
  ///   proximity_gain * w_prox * max(0, d_safe - gap)^2
  /// where gap is a box-to-disc estimate at the time of closest approach
  /// under constant relative velocity.
  double proximity_gain = 0.2;
  double lookahead = 3.0;
  double neighbor_radius_factor = 0.6;

  /// Gaussian action noise during evaluation.
  double vehicle_accel_noise = 0.0;
  double vehicle_steering_noise = 0.0;
  double robot_accel_noise = 0.0;
};

void validate(const NominalConfig& config);

/// Deterministic nominal action from an observation. The ego kind is read
/// from the observation.
agents::Action nominal_policy(
  const env::Observation& observation,
  const NominalConfig& config,
  const env::RewardWeights& weights,
  const agents::AgentParams& params = {});

/// Adds the configured Gaussian noise and clips to the action bounds.
agents::Action perturb(
  const agents::Action& action,
  const NominalConfig& config,
  env::Rng& rng,
  const agents::AgentParams& params = {});

//==============================================================================
enum class FilterVariant
{
  None,
  RewardShaping,
  ActionMask,
  Dmps,
  DmpsNoPrediction,
  DmpsNoGradient
};

std::string_view to_string(FilterVariant variant);

/// Throws ConfigError for an unknown name.
FilterVariant variant_from_string(std::string_view name);

const std::vector<FilterVariant>& all_variants();

/// True when the variant needs trained predictive models.
bool uses_models(FilterVariant variant);

//==============================================================================
struct FilterConfig
{
  FilterVariant variant = FilterVariant::Dmps;

  /// Corrections are only computed when the predicted cost exceeds tau.
  double tau = 0.3;
  double alpha = 0.1;
  int horizon = 10;

  bool backtracking = true;
  int max_backtracks = 8;

  /// Longitudinal accelerations tried by the action mask, in m/s^2.
  std::vector<double> vehicle_candidates = {-8.0, -6.0, -4.0, -2.0, 0.0, 2.0, 4.0};
  std::vector<double> robot_candidates = {-1.0, -0.5, 0.0, 0.5, 1.0};

  /// Fixed deceleration used by the gradient-free ablation.
  double vehicle_push = 2.0;
  double robot_push = 0.25;
};

void validate(const FilterConfig& config);

//==============================================================================
/// One gated correction.
struct CorrectionRecord
{
  int agent_id = -1;
  int time_step = 0;
  AgentKind kind = AgentKind::Vehicle;
  Eigen::VectorXd nominal;
  Eigen::VectorXd gradient;
  Eigen::VectorXd corrected;
  double cost_before = 0.0;
  double cost_after = 0.0;

  /// Number of step halvings performed.
  int backtracks = 0;

  /// False when every trial step raised the cost and the nominal action was
  /// kept.
  bool accepted = true;

  /// True when the gradient was not finite and the nominal action was kept.
  bool degraded = false;
};

//==============================================================================
/// A differentiable cost over a flat action vector.
struct CostModel
{
  std::function<double(const Eigen::VectorXd&)> cost;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> gradient;
};

struct GradientStepConfig
{
  double tau = 0.3;
  double alpha = 0.1;
  bool backtracking = true;
  int max_backtracks = 8;
};

struct StepOutcome
{
  Eigen::VectorXd action;

  /// False when the cost was at or below tau and nothing was computed.
  bool triggered = false;
  CorrectionRecord record;
};

/// Gated projected gradient step a' = clip(a - alpha * grad, lower, upper).
/// With backtracking the step is halved until the cost does not increase;
/// after max_backtracks halvings the nominal action is kept.
StepOutcome gradient_step(
  const CostModel& model,
  const Eigen::VectorXd& nominal,
  const Eigen::VectorXd& lower,
  const Eigen::VectorXd& upper,
  const GradientStepConfig& config);

//==============================================================================
struct CostGradient
{
  double cost = 0.0;
  Eigen::VectorXd gradient;
};

/// Predicted H-step cost and its exact gradient with respect to the action,
/// with every network weight frozen.
CostGradient cost_and_gradient(
  const predictive::PredictiveModels& models,
  const Eigen::VectorXd& observation,
  const Eigen::VectorXd& action,
  int horizon);

Eigen::VectorXd action_gradient(
  const predictive::PredictiveModels& models,
  const Eigen::VectorXd& observation,
  const Eigen::VectorXd& action,
  int horizon);

/// Lower and upper action bounds as vectors.
std::pair<Eigen::VectorXd, Eigen::VectorXd> action_bounds(
  AgentKind kind, const agents::AgentParams& params = {});

//==============================================================================
struct FilterResult
{
  agents::Action action;
  std::optional<CorrectionRecord> correction;
};

/// Gradient correction through the predicted H-step cost.
FilterResult dmps_correct(
  const predictive::PredictiveModels& models,
  const env::Observation& observation,
  const agents::Action& nominal,
  const FilterConfig& config,
  const agents::AgentParams& params = {});

/// Same correction with a one-step prediction horizon.
FilterResult ablation_no_prediction(
  const predictive::PredictiveModels& models,
  const env::Observation& observation,
  const agents::Action& nominal,
  const FilterConfig& config,
  const agents::AgentParams& params = {});

/// Fixed longitudinal deceleration whenever the predicted cost exceeds tau.
FilterResult ablation_no_gradient(
  const predictive::PredictiveModels& models,
  const env::Observation& observation,
  const agents::Action& nominal,
  const FilterConfig& config,
  const agents::AgentParams& params = {});

/// Forbids candidate accelerations whose constant-action rollout overlaps a
/// constant-velocity extrapolation of the observed neighbors within H steps,
/// then returns the allowed candidate closest to the nominal acceleration.
/// Steering passes through. With every candidate forbidden it returns the
/// hardest deceleration.
agents::Action action_mask_filter(
  const env::WorldState& world,
  int agent_id,
  const agents::Action& nominal,
  const FilterConfig& config,
  const env::EpisodeConfig& episode);

/// Dispatches on the configured variant. Throws ContractError when a model
/// variant is used without models.
FilterResult apply_filter(
  const env::WorldState& world,
  const env::AgentRecord& agent,
  const env::Observation& observation,
  const agents::Action& nominal,
  const FilterConfig& config,
  const env::EpisodeConfig& episode,
  const predictive::ModelBundle* models);

} // namespace safety
} // namespace mixsafe

#endif // MIXSAFE__SAFETY_HPP
