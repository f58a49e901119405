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

#ifndef MIXSAFE__HARNESS_HPP
#define MIXSAFE__HARNESS_HPP

#include <mixsafe/env.hpp>
#include <mixsafe/predictive.hpp>
#include <mixsafe/safety.hpp>

#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace mixsafe {
namespace harness {

using safety::FilterVariant;

//==============================================================================
/// Scene presets. "light" has 3 vehicles and 4 robots, "dense" has 10
/// vehicles and 15 robots and "empty" has no agents at all. "custom" keeps
/// the counts of the episode config.
const std::vector<std::string>& preset_names();

/// Sets agent counts on an episode config. Throws ConfigError for an unknown
/// preset.
void apply_preset(env::EpisodeConfig& config, const std::string& preset);

//==============================================================================
struct RunConfig
{
  std::string preset = "dense";
  safety::FilterConfig filter;
  safety::NominalConfig nominal;
  env::EpisodeConfig episode;
  int n_episodes = 200;
  std::uint64_t base_seed = 0;
  int n_batches = 10;

  /// Optional scene file; the built-in intersection is used otherwise.
  std::filesystem::path scene;

  /// Directory holding vehicle.ckpt and robot.ckpt.
  std::filesystem::path checkpoint;
  std::filesystem::path output_dir;

  /// Write trace-<seed>.jsonl for every episode into output_dir.
  bool write_traces = false;

  /// Proximity weight used by the reward-shaping variant.
  double shaping_w_prox = 10.0;
};

/// Throws ConfigError on an invalid combination.
void validate(const RunConfig& config);

/// Copy of a config set up for a variant. The reward-shaping variant keeps
/// the unfiltered policy and raises w_prox to shaping_w_prox.
RunConfig for_variant(const RunConfig& base, FilterVariant variant);

/// The episode config actually simulated for a run, with the preset applied
/// and a scene attached.
env::EpisodeConfig effective_episode(const RunConfig& config);

//==============================================================================
struct Stat
{
  double mean = 0.0;
  double sd = 0.0;
};

/// Sample mean and standard deviation; sd is zero for a single value.
Stat mean_sd(const std::vector<double>& values);

struct VariantMetrics
{
  std::string variant;
  std::size_t episodes = 0;
  std::size_t agents = 0;
  Stat collisions;
  Stat vehicle_robot;
  Stat success;
  Stat timeout;

  /// NaN when no agent succeeded in any batch.
  Stat delay;
};

/// Percentages per batch of consecutive episodes, then mean and spread
/// across batches. A batch without agents counts as 0% collisions and 100%
/// success.
VariantMetrics aggregate(
  const std::string& variant,
  const std::vector<env::EpisodeMetrics>& episodes,
  int n_batches);

struct MetricsReport
{
  std::vector<VariantMetrics> rows;
  std::uint64_t seed = 0;
  int episodes = 0;
  std::string config_echo = "{}";
};

std::string metrics_csv(const MetricsReport& report);
std::string report_json(const MetricsReport& report);
void write_outputs(const std::filesystem::path& dir, const MetricsReport& report);

//==============================================================================
struct CampaignHooks
{
  std::function<void(const safety::CorrectionRecord&)> on_correction;

  /// Called after every step with the filtered joint action.
  std::function<void(const env::WorldState&, const env::JointAction&)> on_step;
};

/// One seeded episode. Optionally streams a trace.
env::EpisodeMetrics run_episode(
  const RunConfig& config,
  std::uint64_t seed,
  const predictive::ModelBundle* models,
  const CampaignHooks* hooks = nullptr,
  std::ostream* trace = nullptr);

/// Episodes with seeds base_seed .. base_seed + n_episodes - 1. Throws
/// ContractError when a model variant gets no models.
MetricsReport run_campaign(
  const RunConfig& config,
  const predictive::ModelBundle* models,
  const CampaignHooks* hooks = nullptr);

/// Loads models from config.checkpoint when the variant needs them. Throws
/// CheckpointError when they are missing.
MetricsReport run_campaign(const RunConfig& config);

//==============================================================================
/// Everything the command line tool can configure.
struct AppConfig
{
  RunConfig run;
  FilterVariant variant = FilterVariant::Dmps;

  predictive::ModelConfig model;
  predictive::TrainConfig train;
  predictive::CollectConfig collect;
  std::size_t transitions = 20000;

  /// Variants compared side by side; ablation mode restricts the table to
  /// the three gradient-filter variants.
  std::vector<FilterVariant> compare = {
    FilterVariant::None, FilterVariant::RewardShaping,
    FilterVariant::ActionMask, FilterVariant::Dmps};
  bool ablation = false;
};

/// Parses a JSON config. Unknown keys and wrongly typed values raise
/// ConfigError.
AppConfig parse_config(const std::string& json_text);
AppConfig load_config(const std::filesystem::path& file);
std::string config_to_json(const AppConfig& config);

//==============================================================================
struct TrainOutcome
{
  predictive::ModelBundle models;
  std::vector<double> vehicle_loss;
  std::vector<double> robot_loss;
  std::size_t vehicle_samples = 0;
  std::size_t robot_samples = 0;
};

/// Nominal policy without exploration noise, as used for data collection.
predictive::Policy collection_policy(const RunConfig& config);

/// Collects a dataset, trains both model triplets and, when out is given,
/// writes vehicle.ckpt, robot.ckpt and losses.csv.
TrainOutcome train_models_command(
  const AppConfig& config,
  const std::optional<std::filesystem::path>& out);

//==============================================================================
struct ComparisonTable
{
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> warnings;
};

/// Main comparison layout, or the ablation layout with exactly the three
/// gradient-filter rows. Throws ConfigError for fewer than two reports or
/// missing ablation rows.
ComparisonTable compare_reports(const std::vector<MetricsReport>& reports, bool ablation);

/// Cells are written as "mean ± sd" with round-trip precision.
std::string comparison_csv(const ComparisonTable& table);

/// Aligned text with one decimal place.
std::string comparison_text(
  const std::vector<MetricsReport>& reports, bool ablation);

/// Parses comparison_csv output back into numbers, row by row, as
/// (mean, sd) pairs per metric column.
std::vector<std::vector<Stat>> parse_comparison_csv(const std::string& csv);

/// Runs one campaign per configured variant.
std::vector<MetricsReport> compare_command(const std::vector<RunConfig>& configs);

} // namespace harness
} // namespace mixsafe

#endif // MIXSAFE__HARNESS_HPP
