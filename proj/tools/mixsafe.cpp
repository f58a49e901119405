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
#include <mixsafe/trace.hpp>

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

using namespace mixsafe;

namespace {

enum ExitCode
{
  Ok = 0,
  BadConfig = 2,
  MissingCheckpoint = 3,
  RuntimeFailure = 4
};

//==============================================================================
struct Overrides
{
  std::string config;
  std::optional<int> episodes;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> variant;
  std::optional<std::string> preset;
  std::optional<std::string> out;
  std::optional<std::string> checkpoint;
  bool traces = false;
};

//==============================================================================
void add_common(CLI::App* cmd, Overrides& o)
{
  cmd->add_option("-c,--config", o.config, "JSON config file");
  cmd->add_option("--episodes", o.episodes, "Episodes per variant");
  cmd->add_option("--seed", o.seed, "Base seed");
  cmd->add_option("--variant", o.variant,
    "none | reward_shaping | action_mask | dmps | dmps_no_prediction | dmps_no_gradient");
  cmd->add_option("--preset", o.preset, "light | dense | empty | custom");
  cmd->add_option("--out", o.out, "Output directory");
  cmd->add_option("--checkpoint", o.checkpoint, "Directory with vehicle.ckpt and robot.ckpt");
}

//==============================================================================
harness::AppConfig resolve(const Overrides& o)
{
  harness::AppConfig c = o.config.empty()
    ? harness::parse_config("{}") : harness::load_config(o.config);

  if (o.episodes)
    c.run.n_episodes = *o.episodes;
  if (o.seed)
  {
    c.run.base_seed = *o.seed;
    c.train.seed = *o.seed;
  }
  if (o.variant)
    c.variant = safety::variant_from_string(*o.variant);
  if (o.preset)
    c.run.preset = *o.preset;
  if (o.out)
    c.run.output_dir = *o.out;
  if (o.checkpoint)
    c.run.checkpoint = *o.checkpoint;
  if (o.traces)
    c.run.write_traces = true;
  if (c.run.output_dir.empty())
    c.run.output_dir = "out";
  c.run.filter.variant = c.variant;
  harness::validate(c.run);
  return c;
}

//==============================================================================
void write_text(const std::filesystem::path& file, const std::string& text)
{
  std::ofstream out(file, std::ios::binary);
  if (!out)
    throw ConfigError("cannot write " + file.string());
  out << text;
}

//==============================================================================
int cmd_train(const Overrides& o)
{
  const auto c = resolve(o);
  const auto out = c.run.output_dir;
  const auto r = harness::train_models_command(c, out);
  std::cout << "vehicle samples " << r.vehicle_samples
            << ", robot samples " << r.robot_samples << "\n";
  if (!r.vehicle_loss.empty())
  {
    std::cout << "vehicle loss " << r.vehicle_loss.front() << " -> "
              << r.vehicle_loss.back() << "\n";
  }
  if (!r.robot_loss.empty())
  {
    std::cout << "robot loss " << r.robot_loss.front() << " -> "
              << r.robot_loss.back() << "\n";
  }
  std::cout << "wrote " << (out / "vehicle.ckpt").string() << ", "
            << (out / "robot.ckpt").string() << ", "
            << (out / "losses.csv").string() << "\n";
  return Ok;
}

//==============================================================================
int cmd_run(const Overrides& o)
{
  const auto c = resolve(o);
  const auto report = harness::run_campaign(
    harness::for_variant(c.run, c.variant));
  harness::write_outputs(c.run.output_dir, report);
  std::cout << harness::metrics_csv(report);
  return Ok;
}

//==============================================================================
int cmd_compare(const Overrides& o, const std::vector<std::string>& variants, bool ablation)
{
  auto c = resolve(o);
  if (!variants.empty())
  {
    c.compare.clear();
    for (const auto& v : variants)
      c.compare.push_back(safety::variant_from_string(v));
  }
  if (ablation)
    c.ablation = true;

  std::vector<harness::RunConfig> runs;
  for (const auto v : c.compare)
    runs.push_back(harness::for_variant(c.run, v));
  const auto reports = harness::compare_command(runs);

  harness::MetricsReport merged;
  merged.seed = c.run.base_seed;
  merged.episodes = c.run.n_episodes;
  merged.config_echo = harness::config_to_json(c);
  for (const auto& r : reports)
    merged.rows.insert(merged.rows.end(), r.rows.begin(), r.rows.end());
  harness::write_outputs(c.run.output_dir, merged);

  const auto table = harness::compare_reports(reports, c.ablation);
  write_text(c.run.output_dir / "comparison.csv", harness::comparison_csv(table));
  const auto text = harness::comparison_text(reports, c.ablation);
  write_text(c.run.output_dir / "comparison.txt", text);
  std::cout << text;
  for (const auto& w : table.warnings)
    std::cerr << "warning: " << w << "\n";
  return Ok;
}

//==============================================================================
int cmd_trace(const std::string& file)
{
  const auto s = harness::read_trace(file);
  const auto metrics = env::episode_metrics(s.episode);
  const auto n = metrics.agents.size();
  const auto delays = metrics.delays();
  double mean_delay = 0.0;
  for (double d : delays)
    mean_delay += d / static_cast<double>(delays.size());

  std::cout << "variant     " << s.variant << "\n"
            << "seed        " << s.episode.seed << "\n"
            << "steps       " << s.episode.steps_taken << "\n"
            << "agents      " << n << "\n"
            << "succeeded   " << metrics.count(env::Outcome::Succeeded) << "\n"
            << "collided    " << metrics.count(env::Outcome::Collided) << "\n"
            << "  veh-robot " << metrics.vehicle_robot_collisions() << "\n"
            << "timed out   " << metrics.count(env::Outcome::TimedOut) << "\n"
            << "mean delay  " << (delays.empty() ? std::string("n/a")
                                    : std::to_string(mean_delay) + " s") << "\n"
            << "corrections " << s.corrections << " ("
            << s.rejected_corrections << " kept nominal)\n"
            << "reward sum  " << s.total_reward << "\n";
  return Ok;
}

} // anonymous namespace

//==============================================================================
int main(int argc, char** argv)
{
  CLI::App app{"Mixed-traffic intersection simulator with a predictive safety filter"};
  app.require_subcommand(1);

  Overrides train_o, run_o, compare_o;
  auto* train = app.add_subcommand("train", "Collect data and train the predictive models");
  add_common(train, train_o);

  auto* run = app.add_subcommand("run", "Run a seeded campaign for one variant");
  add_common(run, run_o);
  run->add_flag("--traces", run_o.traces, "Write trace-<seed>.jsonl per episode");

  std::vector<std::string> variants;
  bool ablation = false;
  auto* compare = app.add_subcommand("compare", "Run several variants and tabulate them");
  add_common(compare, compare_o);
  compare->add_option("--variants", variants, "Variants to compare");
  compare->add_flag("--ablation", ablation, "Ablation table");

  std::string trace_file;
  auto* trace = app.add_subcommand("trace", "Summarize a trace file");
  trace->add_option("file", trace_file, "trace-<seed>.jsonl")->required();

  try
  {
    app.parse(argc, argv);
  }
  catch (const CLI::ParseError& e)
  {
    const int code = app.exit(e);
    return code == 0 ? Ok : BadConfig;
  }

  try
  {
    if (*train)
      return cmd_train(train_o);
    if (*run)
      return cmd_run(run_o);
    if (*compare)
      return cmd_compare(compare_o, variants, ablation);
    if (*trace)
      return cmd_trace(trace_file);
  }
  catch (const ConfigError& e)
  {
    std::cerr << "config error: " << e.what() << "\n";
    return BadConfig;
  }
  catch (const ValidationError& e)
  {
    std::cerr << "config error: " << e.what() << "\n";
    return BadConfig;
  }
  catch (const CheckpointError& e)
  {
    std::cerr << "checkpoint error: " << e.what() << "\n";
    return MissingCheckpoint;
  }
  catch (const std::exception& e)
  {
    std::cerr << "error: " << e.what() << "\n";
    return RuntimeFailure;
  }
  return Ok;
}
