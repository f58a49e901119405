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
#include <mixsafe/scene_io.hpp>
#include <mixsafe/trace.hpp>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <set>
#include <sstream>

namespace mixsafe {
namespace harness {

using nlohmann::json;

namespace {

constexpr const char* plus_minus = "\xC2\xB1";

//==============================================================================
std::string number(double v)
{
  if (std::isnan(v))
    return "nan";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

//==============================================================================
std::string cell(const Stat& s)
{
  return number(s.mean) + " " + plus_minus + " " + number(s.sd);
}

//==============================================================================
std::string short_cell(const Stat& s)
{
  if (std::isnan(s.mean))
    return "n/a";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.1f %s %.1f", s.mean, plus_minus, s.sd);
  return buf;
}

//==============================================================================
json stat_json(const Stat& s)
{
  const auto v = [](double x) { return std::isnan(x) ? json(nullptr) : json(x); };
  return {{"mean", v(s.mean)}, {"sd", v(s.sd)}};
}

//==============================================================================
// Strict JSON field readers: every key of an object must be known.
class Reader
{
public:
  Reader(const json& j, std::string where) : _j(j), _where(std::move(where))
  {
    if (!_j.is_object())
      throw ConfigError(_where + " must be a JSON object");
  }

  template<typename T>
  bool get(const char* key, T& out)
  {
    _known.insert(key);
    const auto it = _j.find(key);
    if (it == _j.end())
      return false;
    try
    {
      out = it->get<T>();
    }
    catch (const json::exception&)
    {
      throw ConfigError(_where + "." + key + " has the wrong type");
    }
    return true;
  }

  bool sub(const char* key, const std::function<void(Reader&)>& f)
  {
    _known.insert(key);
    const auto it = _j.find(key);
    if (it == _j.end())
      return false;
    Reader r(*it, _where + "." + key);
    f(r);
    r.finish();
    return true;
  }

  bool has(const char* key) const { return _j.contains(key); }

  void finish() const
  {
    for (const auto& [k, v] : _j.items())
    {
      (void)v;
      if (_known.count(k) == 0)
        throw ConfigError("unknown key " + _where + "." + k);
    }
  }

private:
  const json& _j;
  std::string _where;
  std::set<std::string> _known;
};

//==============================================================================
std::shared_ptr<const geometry::PathNetwork> default_scene()
{
  static const auto net = std::make_shared<const geometry::PathNetwork>(
    geometry::build_default_intersection());
  return net;
}

//==============================================================================
void write_file(const std::filesystem::path& file, const std::string& text)
{
  std::ofstream out(file, std::ios::binary);
  if (!out)
    throw ConfigError("cannot write " + file.string());
  out << text;
}

//==============================================================================
std::vector<std::string> split_csv_line(const std::string& line)
{
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (char ch : line)
  {
    if (ch == '"')
      quoted = !quoted;
    else if (ch == ',' && !quoted)
    {
      out.push_back(cur);
      cur.clear();
    }
    else
      cur.push_back(ch);
  }
  out.push_back(cur);
  return out;
}

//==============================================================================
const std::vector<FilterVariant>& ablation_variants()
{
  static const std::vector<FilterVariant> v = {
    FilterVariant::Dmps, FilterVariant::DmpsNoGradient,
    FilterVariant::DmpsNoPrediction};
  return v;
}

} // anonymous namespace

//==============================================================================
const std::vector<std::string>& preset_names()
{
  static const std::vector<std::string> names = {"light", "dense", "empty", "custom"};
  return names;
}

//==============================================================================
void apply_preset(env::EpisodeConfig& config, const std::string& preset)
{
  if (preset == "light")
  {
    config.n_vehicles = 3;
    config.n_robots = 4;
  }
  else if (preset == "dense")
  {
    config.n_vehicles = 10;
    config.n_robots = 15;
  }
  else if (preset == "empty")
  {
    config.n_vehicles = 0;
    config.n_robots = 0;
  }
  else if (preset != "custom")
  {
    throw ConfigError("unknown preset '" + preset + "'");
  }
}

//==============================================================================
void validate(const RunConfig& c)
{
  if (std::find(preset_names().begin(), preset_names().end(), c.preset)
    == preset_names().end())
  {
    throw ConfigError("unknown preset '" + c.preset + "'");
  }
  if (c.n_episodes < 1)
    throw ConfigError("episodes must be at least 1");
  if (c.n_batches < 1)
    throw ConfigError("batches must be at least 1");
  if (!(c.shaping_w_prox >= 0.0))
    throw ConfigError("shaping_w_prox must be non-negative");
  try
  {
    safety::validate(c.filter);
    safety::validate(c.nominal);
    env::validate(c.episode);
  }
  catch (const ValidationError& e)
  {
    throw ConfigError(e.what());
  }
}

//==============================================================================
RunConfig for_variant(const RunConfig& base, FilterVariant variant)
{
  RunConfig c = base;
  c.filter.variant = variant;
  if (variant == FilterVariant::RewardShaping)
    c.episode.weights.w_prox = c.shaping_w_prox;
  return c;
}

//==============================================================================
env::EpisodeConfig effective_episode(const RunConfig& config)
{
  env::EpisodeConfig e = config.episode;
  apply_preset(e, config.preset);
  if (!e.network)
  {
    e.network = config.scene.empty()
      ? default_scene()
      : std::make_shared<const geometry::PathNetwork>(geometry::load_scene(config.scene));
  }
  return e;
}

//==============================================================================
Stat mean_sd(const std::vector<double>& values)
{
  Stat s;
  if (values.empty())
  {
    s.mean = std::numeric_limits<double>::quiet_NaN();
    s.sd = std::numeric_limits<double>::quiet_NaN();
    return s;
  }
  double total = 0.0;
  for (double v : values)
    total += v;
  s.mean = total / static_cast<double>(values.size());
  if (values.size() > 1)
  {
    double ss = 0.0;
    for (double v : values)
      ss += (v - s.mean)*(v - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return s;
}

//==============================================================================
VariantMetrics aggregate(
  const std::string& variant,
  const std::vector<env::EpisodeMetrics>& episodes,
  int n_batches)
{
  if (episodes.empty())
    throw ContractError("aggregate needs at least one episode");
  if (n_batches < 1)
    throw ContractError("aggregate needs at least one batch");

  VariantMetrics m;
  m.variant = variant;
  m.episodes = episodes.size();

  const std::size_t n = episodes.size();
  const std::size_t b = std::min<std::size_t>(static_cast<std::size_t>(n_batches), n);
  std::vector<double> col, vr, succ, tout, delay;
  for (std::size_t i = 0; i < b; ++i)
  {
    std::size_t agents = 0, c = 0, v = 0, s = 0, t = 0;
    std::vector<double> d;
    for (std::size_t e = i*n/b; e < (i + 1)*n/b; ++e)
    {
      const auto& em = episodes[e];
      agents += em.agents.size();
      c += em.count(env::Outcome::Collided);
      v += em.vehicle_robot_collisions();
      s += em.count(env::Outcome::Succeeded);
      t += em.count(env::Outcome::TimedOut);
      const auto ds = em.delays();
      d.insert(d.end(), ds.begin(), ds.end());
    }
    m.agents += agents;

    if (agents == 0)
    {
      col.push_back(0.0);
      vr.push_back(0.0);
      succ.push_back(100.0);
      tout.push_back(0.0);
    }
    else
    {
      const double k = 100.0 / static_cast<double>(agents);
      col.push_back(k*static_cast<double>(c));
      vr.push_back(k*static_cast<double>(v));
      succ.push_back(k*static_cast<double>(s));
      tout.push_back(k*static_cast<double>(t));
    }
    if (!d.empty())
      delay.push_back(mean_sd(d).mean);
  }

  m.collisions = mean_sd(col);
  m.vehicle_robot = mean_sd(vr);
  m.success = mean_sd(succ);
  m.timeout = mean_sd(tout);
  m.delay = mean_sd(delay);
  return m;
}

//==============================================================================
std::string metrics_csv(const MetricsReport& report)
{
  std::ostringstream out;
  out << "variant,episodes,agents,collisions_mean,collisions_sd,"
         "vehicle_robot_mean,vehicle_robot_sd,success_mean,success_sd,"
         "timeout_mean,timeout_sd,delay_mean,delay_sd\n";
  for (const auto& r : report.rows)
  {
    out << r.variant << ',' << r.episodes << ',' << r.agents;
    for (const auto* s : {&r.collisions, &r.vehicle_robot, &r.success, &r.timeout, &r.delay})
      out << ',' << number(s->mean) << ',' << number(s->sd);
    out << '\n';
  }
  return out.str();
}

//==============================================================================
std::string report_json(const MetricsReport& report)
{
  json rows = json::array();
  for (const auto& r : report.rows)
  {
    rows.push_back({
      {"variant", r.variant},
      {"episodes", r.episodes},
      {"agents", r.agents},
      {"collisions_pct", stat_json(r.collisions)},
      {"vehicle_robot_collisions_pct", stat_json(r.vehicle_robot)},
      {"success_pct", stat_json(r.success)},
      {"timeout_pct", stat_json(r.timeout)},
      {"average_delay_s", stat_json(r.delay)}});
  }
  json j = {
    {"seed", report.seed},
    {"episodes", report.episodes},
    {"rows", rows},
    {"config", json::parse(report.config_echo)}};
  return j.dump(2) + "\n";
}

//==============================================================================
void write_outputs(const std::filesystem::path& dir, const MetricsReport& report)
{
  std::filesystem::create_directories(dir);
  write_file(dir / "metrics.csv", metrics_csv(report));
  write_file(dir / "report.json", report_json(report));
}

//==============================================================================
env::EpisodeMetrics run_episode(
  const RunConfig& config,
  std::uint64_t seed,
  const predictive::ModelBundle* models,
  const CampaignHooks* hooks,
  std::ostream* trace)
{
  const env::EpisodeConfig episode = effective_episode(config);
  if (safety::uses_models(config.filter.variant) && models == nullptr)
  {
    throw ContractError(
      "variant " + std::string(safety::to_string(config.filter.variant))
      + " needs trained models");
  }

  env::WorldState world = env::reset(episode, seed);
  env::EpisodeTrace record = env::begin_trace(world, episode, seed);
  std::optional<TraceWriter> writer;
  if (trace)
  {
    writer.emplace(*trace);
    writer->header(world, episode, seed, std::string(safety::to_string(config.filter.variant)));
  }

  std::vector<safety::CorrectionRecord> corrections;
  while (!env::episode_over(world, episode))
  {
    env::JointAction joint;
    corrections.clear();
    for (const auto& a : world.agents)
    {
      if (!a.active())
        continue;
      const auto obs = env::observe(world, a.id, episode);
      auto nominal = safety::nominal_policy(
        obs, config.nominal, episode.weights, episode.params);
      nominal = safety::perturb(nominal, config.nominal, world.rng, episode.params);
      auto filtered = safety::apply_filter(
        world, a, obs, nominal, config.filter, episode, models);
      joint[a.id] = filtered.action;
      if (filtered.correction)
      {
        if (hooks && hooks->on_correction)
          hooks->on_correction(*filtered.correction);
        corrections.push_back(std::move(*filtered.correction));
      }
    }

    const auto result = env::step(world, joint, episode);
    env::record_step(record, world, result);
    if (writer)
      writer->step(world, joint, result, corrections);
    if (hooks && hooks->on_step)
      hooks->on_step(world, joint);
  }
  if (writer)
    writer->end(world);

  return env::episode_metrics(record);
}

//==============================================================================
MetricsReport run_campaign(
  const RunConfig& config,
  const predictive::ModelBundle* models,
  const CampaignHooks* hooks)
{
  validate(config);
  const env::EpisodeConfig episode = effective_episode(config);
  if (models)
  {
    const int width = env::ObservationLayout::width(episode.neighbors);
    for (const auto kind : {agents::AgentKind::Vehicle, agents::AgentKind::Robot})
    {
      if (models->of(kind).obs_dim != width)
      {
        throw CheckpointError(
          "model observation width " + std::to_string(models->of(kind).obs_dim)
          + " does not match the configured width " + std::to_string(width));
      }
    }
  }

  std::vector<env::EpisodeMetrics> episodes;
  episodes.reserve(static_cast<std::size_t>(config.n_episodes));
  for (int i = 0; i < config.n_episodes; ++i)
  {
    const std::uint64_t seed = config.base_seed + static_cast<std::uint64_t>(i);
    if (config.write_traces)
    {
      std::filesystem::create_directories(config.output_dir);
      std::ofstream out(
        config.output_dir / ("trace-" + std::to_string(seed) + ".jsonl"),
        std::ios::binary);
      episodes.push_back(run_episode(config, seed, models, hooks, &out));
    }
    else
    {
      episodes.push_back(run_episode(config, seed, models, hooks, nullptr));
    }
  }

  MetricsReport report;
  report.seed = config.base_seed;
  report.episodes = config.n_episodes;
  report.rows.push_back(aggregate(
    std::string(safety::to_string(config.filter.variant)), episodes, config.n_batches));

  AppConfig echo;
  echo.run = config;
  echo.variant = config.filter.variant;
  report.config_echo = config_to_json(echo);
  return report;
}

//==============================================================================
MetricsReport run_campaign(const RunConfig& config)
{
  if (!safety::uses_models(config.filter.variant))
    return run_campaign(config, nullptr);

  if (config.checkpoint.empty())
    throw CheckpointError("no checkpoint directory configured");
  const auto models = predictive::load_bundle(config.checkpoint);
  return run_campaign(config, &models);
}

//==============================================================================
AppConfig parse_config(const std::string& text)
{
  json root;
  try
  {
    root = json::parse(text);
  }
  catch (const json::exception& e)
  {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }

  AppConfig c;
  auto& run = c.run;
  Reader r(root, "config");

  r.get("preset", run.preset);
  std::string variant;
  if (r.get("variant", variant))
    c.variant = safety::variant_from_string(variant);
  r.get("episodes", run.n_episodes);
  r.get("seed", run.base_seed);
  r.get("batches", run.n_batches);
  std::string path;
  if (r.get("checkpoint", path))
    run.checkpoint = path;
  if (r.get("out", path))
    run.output_dir = path;
  if (r.get("scene", path))
    run.scene = path;
  r.get("traces", run.write_traces);
  r.get("shaping_w_prox", run.shaping_w_prox);
  r.get("transitions", c.transitions);
  r.get("ablation", c.ablation);

  std::vector<std::string> names;
  if (r.get("compare", names))
  {
    c.compare.clear();
    for (const auto& n : names)
      c.compare.push_back(safety::variant_from_string(n));
  }

  r.sub("episode", [&](Reader& e)
  {
    auto& ep = run.episode;
    const bool counts = e.has("n_vehicles") || e.has("n_robots");
    e.get("n_vehicles", ep.n_vehicles);
    e.get("n_robots", ep.n_robots);
    e.get("max_steps", ep.max_steps);
    e.get("dt", ep.dt);
    e.get("neighbors", ep.neighbors);
    e.sub("weights", [&](Reader& w)
    {
      w.get("w_goal", ep.weights.w_goal);
      w.get("w_time", ep.weights.w_time);
      w.get("w_jerk", ep.weights.w_jerk);
      w.get("w_prox", ep.weights.w_prox);
      w.get("d_safe", ep.weights.d_safe);
    });
    if (counts)
    {
      if (root.contains("preset") && run.preset != "custom")
        throw ConfigError("agent counts given together with preset '" + run.preset + "'");
      run.preset = "custom";
    }
  });

  r.sub("filter", [&](Reader& f)
  {
    auto& fc = run.filter;
    f.get("tau", fc.tau);
    f.get("alpha", fc.alpha);
    f.get("horizon", fc.horizon);
    f.get("backtracking", fc.backtracking);
    f.get("max_backtracks", fc.max_backtracks);
    f.get("vehicle_candidates", fc.vehicle_candidates);
    f.get("robot_candidates", fc.robot_candidates);
    f.get("vehicle_push", fc.vehicle_push);
    f.get("robot_push", fc.robot_push);
  });

  r.sub("nominal", [&](Reader& n)
  {
    auto& nc = run.nominal;
    n.get("vehicle_cruise", nc.vehicle_cruise);
    n.get("robot_cruise", nc.robot_cruise);
    n.get("speed_gain", nc.speed_gain);
    n.get("cross_track_gain", nc.cross_track_gain);
    n.get("steering_gain", nc.steering_gain);
    n.get("proximity_gain", nc.proximity_gain);
    n.get("lookahead", nc.lookahead);
    n.get("neighbor_radius_factor", nc.neighbor_radius_factor);
    n.get("headway", nc.headway);
    n.get("vehicle_standstill", nc.vehicle_standstill);
    n.get("robot_standstill", nc.robot_standstill);
    n.get("path_margin", nc.path_margin);
    n.get("parallel_speed", nc.parallel_speed);
    n.get("vehicle_accel_noise", nc.vehicle_accel_noise);
    n.get("vehicle_steering_noise", nc.vehicle_steering_noise);
    n.get("robot_accel_noise", nc.robot_accel_noise);
  });

  r.sub("model", [&](Reader& m)
  {
    auto& mc = c.model;
    m.get("latent_dim", mc.latent_dim);
    m.get("horizon", mc.horizon);
    m.get("encoder_hidden", mc.encoder_hidden);
    m.get("dynamics_hidden", mc.dynamics_hidden);
    m.get("critic_hidden", mc.critic_hidden);
    std::string s;
    if (m.get("activation", s))
    {
      try
      {
        mc.activation = autodiff::activation_from_string(s);
      }
      catch (const ValidationError& e)
      {
        throw ConfigError(e.what());
      }
    }
    if (m.get("pooling", s))
    {
      if (s == "max")
        mc.pooling = predictive::Pooling::Max;
      else if (s == "logsumexp")
        mc.pooling = predictive::Pooling::LogSumExp;
      else
        throw ConfigError("unknown pooling '" + s + "'");
    }
    m.get("temperature", mc.temperature);
    m.get("seed", mc.seed);
  });

  r.sub("train", [&](Reader& t)
  {
    auto& tc = c.train;
    t.get("epochs", tc.epochs);
    t.get("lambda_dyn", tc.lambda_dyn);
    t.get("lambda_critic", tc.lambda_critic);
    t.get("learning_rate", tc.learning_rate);
    t.get("batch_size", tc.batch_size);
    t.get("seed", tc.seed);
  });

  r.sub("collect", [&](Reader& k)
  {
    auto& cc = c.collect;
    k.get("vehicle_accel_sigma", cc.vehicle_accel_sigma);
    k.get("vehicle_steering_sigma", cc.vehicle_steering_sigma);
    k.get("robot_accel_sigma", cc.robot_accel_sigma);
    k.get("reckless_fraction", cc.reckless_fraction);
    k.get("reckless_hold_min", cc.reckless_hold_min);
    k.get("reckless_hold_max", cc.reckless_hold_max);
    k.get("label_d_safe", cc.label_d_safe);
  });

  r.finish();
  run.filter.variant = c.variant;
  validate(run);
  return c;
}

//==============================================================================
AppConfig load_config(const std::filesystem::path& file)
{
  std::ifstream in(file);
  if (!in)
    throw ConfigError("cannot read config " + file.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

//==============================================================================
std::string config_to_json(const AppConfig& c)
{
  const auto& run = c.run;
  const auto& ep = run.episode;
  const auto& fc = run.filter;
  const auto& nc = run.nominal;
  const auto& mc = c.model;
  const auto& tc = c.train;
  const auto& cc = c.collect;

  json compare = json::array();
  for (const auto v : c.compare)
    compare.push_back(safety::to_string(v));

  json j = {
    {"preset", run.preset},
    {"variant", safety::to_string(c.variant)},
    {"episodes", run.n_episodes},
    {"seed", run.base_seed},
    {"batches", run.n_batches},
    {"checkpoint", run.checkpoint.generic_string()},
    {"out", run.output_dir.generic_string()},
    {"scene", run.scene.generic_string()},
    {"traces", run.write_traces},
    {"shaping_w_prox", run.shaping_w_prox},
    {"transitions", c.transitions},
    {"ablation", c.ablation},
    {"compare", compare},
    {"episode", {
      {"max_steps", ep.max_steps},
      {"dt", ep.dt},
      {"neighbors", ep.neighbors},
      {"weights", {
        {"w_goal", ep.weights.w_goal},
        {"w_time", ep.weights.w_time},
        {"w_jerk", ep.weights.w_jerk},
        {"w_prox", ep.weights.w_prox},
        {"d_safe", ep.weights.d_safe}}}}},
    {"filter", {
      {"tau", fc.tau},
      {"alpha", fc.alpha},
      {"horizon", fc.horizon},
      {"backtracking", fc.backtracking},
      {"max_backtracks", fc.max_backtracks},
      {"vehicle_candidates", fc.vehicle_candidates},
      {"robot_candidates", fc.robot_candidates},
      {"vehicle_push", fc.vehicle_push},
      {"robot_push", fc.robot_push}}},
    {"nominal", {
      {"vehicle_cruise", nc.vehicle_cruise},
      {"robot_cruise", nc.robot_cruise},
      {"speed_gain", nc.speed_gain},
      {"cross_track_gain", nc.cross_track_gain},
      {"steering_gain", nc.steering_gain},
      {"proximity_gain", nc.proximity_gain},
      {"lookahead", nc.lookahead},
      {"neighbor_radius_factor", nc.neighbor_radius_factor},
      {"headway", nc.headway},
      {"vehicle_standstill", nc.vehicle_standstill},
      {"robot_standstill", nc.robot_standstill},
      {"path_margin", nc.path_margin},
      {"parallel_speed", nc.parallel_speed},
      {"vehicle_accel_noise", nc.vehicle_accel_noise},
      {"vehicle_steering_noise", nc.vehicle_steering_noise},
      {"robot_accel_noise", nc.robot_accel_noise}}},
    {"model", {
      {"latent_dim", mc.latent_dim},
      {"horizon", mc.horizon},
      {"encoder_hidden", mc.encoder_hidden},
      {"dynamics_hidden", mc.dynamics_hidden},
      {"critic_hidden", mc.critic_hidden},
      {"activation", autodiff::to_string(mc.activation)},
      {"pooling", mc.pooling == predictive::Pooling::Max ? "max" : "logsumexp"},
      {"temperature", mc.temperature},
      {"seed", mc.seed}}},
    {"train", {
      {"epochs", tc.epochs},
      {"lambda_dyn", tc.lambda_dyn},
      {"lambda_critic", tc.lambda_critic},
      {"learning_rate", tc.learning_rate},
      {"batch_size", tc.batch_size},
      {"seed", tc.seed}}},
    {"collect", {
      {"vehicle_accel_sigma", cc.vehicle_accel_sigma},
      {"vehicle_steering_sigma", cc.vehicle_steering_sigma},
      {"robot_accel_sigma", cc.robot_accel_sigma},
      {"reckless_fraction", cc.reckless_fraction},
      {"reckless_hold_min", cc.reckless_hold_min},
      {"reckless_hold_max", cc.reckless_hold_max},
      {"label_d_safe", cc.label_d_safe}}}};

  // Counts only matter for the custom preset and would clash otherwise.
  if (run.preset == "custom")
  {
    j["episode"]["n_vehicles"] = ep.n_vehicles;
    j["episode"]["n_robots"] = ep.n_robots;
  }
  return j.dump();
}

//==============================================================================
predictive::Policy collection_policy(const RunConfig& config)
{
  const safety::NominalConfig nominal = config.nominal;
  const env::EpisodeConfig episode = effective_episode(config);
  return [nominal, episode](
    const env::WorldState&, const env::AgentRecord&, const env::Observation& obs)
  {
    return safety::nominal_policy(obs, nominal, episode.weights, episode.params);
  };
}

//==============================================================================
TrainOutcome train_models_command(
  const AppConfig& config,
  const std::optional<std::filesystem::path>& out)
{
  validate(config.run);
  const env::EpisodeConfig episode = effective_episode(config.run);
  const auto data = predictive::collect_dataset(
    episode, collection_policy(config.run), config.transitions,
    config.train.seed, config.collect);

  TrainOutcome result;
  result.models = predictive::make_bundle(episode.neighbors, config.model, episode.params);
  std::vector<predictive::TrainResult> runs;
  for (const auto kind : {agents::AgentKind::Vehicle, agents::AgentKind::Robot})
  {
    const auto part = data.of_kind(kind);
    (kind == agents::AgentKind::Vehicle ? result.vehicle_samples : result.robot_samples) =
      part.size();
    if (part.empty())
    {
      runs.emplace_back();
      runs.back().models = result.models.of(kind);
      continue;
    }
    runs.push_back(predictive::train(result.models.of(kind), part, config.train));
    result.models.of(kind) = runs.back().models;
  }
  result.vehicle_loss = runs[0].loss_history;
  result.robot_loss = runs[1].loss_history;

  if (out)
  {
    predictive::save_bundle(*out, result.models);
    std::ostringstream csv;
    csv << "epoch,vehicle_total,vehicle_dynamics,vehicle_critic,"
           "robot_total,robot_dynamics,robot_critic\n";
    const auto at = [](const std::vector<double>& v, int i)
    {
      return i < static_cast<int>(v.size())
        ? number(v[static_cast<std::size_t>(i)]) : std::string("nan");
    };
    for (int e = 0; e < config.train.epochs; ++e)
    {
      csv << e;
      for (const auto& r : runs)
      {
        csv << ',' << at(r.loss_history, e) << ',' << at(r.dynamics_history, e)
            << ',' << at(r.critic_history, e);
      }
      csv << '\n';
    }
    write_file(*out / "losses.csv", csv.str());
  }
  return result;
}

//==============================================================================
ComparisonTable compare_reports(const std::vector<MetricsReport>& reports, bool ablation)
{
  if (reports.size() < 2)
    throw ConfigError("a comparison needs at least two reports");

  ComparisonTable t;
  std::vector<const VariantMetrics*> rows;
  for (const auto& r : reports)
  {
    for (const auto& row : r.rows)
      rows.push_back(&row);
    if (r.episodes != reports.front().episodes)
    {
      t.warnings.push_back(
        "episode counts differ: " + std::to_string(reports.front().episodes)
        + " vs " + std::to_string(r.episodes));
    }
  }

  if (ablation)
  {
    t.columns = {"Ablation Variant", "Total Collisions (%)", "Success Rate (%)"};
    for (const auto v : ablation_variants())
    {
      const auto name = std::string(safety::to_string(v));
      const auto it = std::find_if(rows.begin(), rows.end(),
        [&](const VariantMetrics* m) { return m->variant == name; });
      if (it == rows.end())
        throw ConfigError("ablation table is missing variant " + name);
      t.rows.push_back({name, cell((*it)->collisions), cell((*it)->success)});
    }
    return t;
  }

  t.columns = {
    "Method", "Collisions (%)", "Vehicle-Robot Collisions (%)",
    "Success Rate (%)", "Average Delay (s)"};
  for (const auto* m : rows)
  {
    t.rows.push_back({
      m->variant, cell(m->collisions), cell(m->vehicle_robot),
      cell(m->success), cell(m->delay)});
  }
  return t;
}

//==============================================================================
std::string comparison_csv(const ComparisonTable& table)
{
  std::ostringstream out;
  for (std::size_t i = 0; i < table.columns.size(); ++i)
    out << (i ? "," : "") << table.columns[i];
  out << '\n';
  for (const auto& row : table.rows)
  {
    for (std::size_t i = 0; i < row.size(); ++i)
      out << (i ? "," : "") << row[i];
    out << '\n';
  }
  return out.str();
}

//==============================================================================
std::string comparison_text(const std::vector<MetricsReport>& reports, bool ablation)
{
  const auto table = compare_reports(reports, ablation);
  std::vector<std::vector<std::string>> cells;
  cells.push_back(table.columns);

  const auto find = [&](const std::string& name) -> const VariantMetrics&
  {
    for (const auto& r : reports)
    {
      for (const auto& row : r.rows)
      {
        if (row.variant == name)
          return row;
      }
    }
    throw ConfigError("no report row for " + name);
  };

  for (const auto& row : table.rows)
  {
    const auto& m = find(row[0]);
    if (ablation)
      cells.push_back({m.variant, short_cell(m.collisions), short_cell(m.success)});
    else
    {
      cells.push_back({
        m.variant, short_cell(m.collisions), short_cell(m.vehicle_robot),
        short_cell(m.success), short_cell(m.delay)});
    }
  }

  // Display width counts the two-byte sign as one column.
  const auto width = [](const std::string& s)
  {
    std::size_t w = 0;
    for (unsigned char ch : s)
      w += (ch & 0xC0) != 0x80;
    return w;
  };
  std::vector<std::size_t> widths(table.columns.size(), 0);
  for (const auto& row : cells)
  {
    for (std::size_t i = 0; i < row.size(); ++i)
      widths[i] = std::max(widths[i], width(row[i]));
  }

  std::ostringstream out;
  for (std::size_t r = 0; r < cells.size(); ++r)
  {
    for (std::size_t i = 0; i < cells[r].size(); ++i)
    {
      out << cells[r][i];
      if (i + 1 < cells[r].size())
        out << std::string(widths[i] - width(cells[r][i]) + 2, ' ');
    }
    out << '\n';
    if (r == 0)
    {
      std::size_t total = 0;
      for (auto w : widths)
        total += w + 2;
      out << std::string(total - 2, '-') << '\n';
    }
  }
  for (const auto& w : table.warnings)
    out << "warning: " << w << '\n';
  return out.str();
}

//==============================================================================
std::vector<std::vector<Stat>> parse_comparison_csv(const std::string& csv)
{
  std::istringstream in(csv);
  std::string line;
  std::vector<std::vector<Stat>> out;
  bool header = true;
  while (std::getline(in, line))
  {
    if (header)
    {
      header = false;
      continue;
    }
    if (line.empty())
      continue;
    const auto fields = split_csv_line(line);
    std::vector<Stat> row;
    for (std::size_t i = 1; i < fields.size(); ++i)
    {
      const auto& f = fields[i];
      const auto sep = f.find(plus_minus);
      if (sep == std::string::npos)
        throw ConfigError("comparison cell without a spread: " + f);
      Stat s;
      s.mean = std::strtod(f.substr(0, sep).c_str(), nullptr);
      s.sd = std::strtod(f.substr(sep + std::char_traits<char>::length(plus_minus)).c_str(), nullptr);
      row.push_back(s);
    }
    out.push_back(std::move(row));
  }
  return out;
}

//==============================================================================
std::vector<MetricsReport> compare_command(const std::vector<RunConfig>& configs)
{
  if (configs.size() < 2)
    throw ConfigError("compare needs at least two run configs");

  std::optional<predictive::ModelBundle> models;
  std::filesystem::path loaded_from;
  std::vector<MetricsReport> reports;
  for (const auto& c : configs)
  {
    if (!safety::uses_models(c.filter.variant))
    {
      reports.push_back(run_campaign(c, nullptr));
      continue;
    }
    if (c.checkpoint.empty())
      throw CheckpointError("no checkpoint directory configured");
    if (!models || loaded_from != c.checkpoint)
    {
      models = predictive::load_bundle(c.checkpoint);
      loaded_from = c.checkpoint;
    }
    reports.push_back(run_campaign(c, &*models));
  }
  return reports;
}

} // namespace harness
} // namespace mixsafe
