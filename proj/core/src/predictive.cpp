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

#include <mixsafe/checkpoint.hpp>
#include <mixsafe/errors.hpp>
#include <mixsafe/predictive.hpp>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

namespace mixsafe {
namespace predictive {

using autodiff::Tape;

namespace {

//==============================================================================
std::vector<int> layer_dims(int in, const std::vector<int>& hidden, int out)
{
  std::vector<int> dims{in};
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(out);
  return dims;
}

//==============================================================================
Eigen::VectorXd action_scale_of(AgentKind kind, const agents::AgentParams& p)
{
  if (kind == AgentKind::Vehicle)
  {
    Eigen::VectorXd s(2);
    s << std::max(-p.vehicle.min_accel, p.vehicle.max_accel),
      p.vehicle.max_steering_rate;
    return s;
  }
  Eigen::VectorXd s(1);
  s << std::max(-p.robot.min_accel, p.robot.max_accel);
  return s;
}

//==============================================================================
Matrix normalized(const Matrix& raw, const Eigen::VectorXd& scale)
{
  return (raw.array().colwise() / scale.array()).matrix();
}

//==============================================================================
// Elementwise reciprocal of the action scale, one copy per column.
Matrix inverse_action_scale(const PredictiveModels& m, Eigen::Index cols)
{
  return m.action_scale.cwiseInverse().replicate(1, cols);
}

//==============================================================================
// Must stay arithmetically identical to Tape::log_sum_exp and
// Tape::max_over_list.
double pool(const std::vector<double>& c, Pooling pooling, double temperature)
{
  if (pooling == Pooling::Max)
  {
    double best = c[0];
    for (double x : c)
    {
      if (x > best)
        best = x;
    }
    return best;
  }

  std::vector<double> s;
  s.reserve(c.size());
  for (double x : c)
    s.push_back(x / temperature);
  double peak = s[0];
  for (double x : s)
    peak = std::max(peak, x);
  double total = 0.0;
  for (double x : s)
    total += std::exp(x - peak);
  return temperature*(peak + std::log(total));
}

//==============================================================================
std::string_view to_string(Pooling p)
{
  return p == Pooling::Max ? "max" : "logsumexp";
}

//==============================================================================
Pooling pooling_from_string(const std::string& s)
{
  if (s == "max")
    return Pooling::Max;
  if (s == "logsumexp")
    return Pooling::LogSumExp;
  throw CheckpointError("unknown pooling '" + s + "'");
}

//==============================================================================
std::string kind_name(AgentKind k)
{
  return std::string(agents::to_string(k));
}

//==============================================================================
AgentKind kind_from_name(const std::string& s)
{
  if (s == "vehicle")
    return AgentKind::Vehicle;
  if (s == "robot")
    return AgentKind::Robot;
  throw ValidationError("unknown agent kind '" + s + "'");
}

//==============================================================================
std::vector<double> to_list(const Eigen::VectorXd& v)
{
  return std::vector<double>(v.data(), v.data() + v.size());
}

//==============================================================================
Eigen::VectorXd from_list(const std::vector<double>& v)
{
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

//==============================================================================
struct Columns
{
  Matrix obs;
  Matrix actions;
  Matrix next_obs;
  Eigen::RowVectorXd costs;
};

Columns gather(const TransitionBatch& batch, std::span<const std::size_t> idx)
{
  const auto& first = batch.items.at(idx[0]);
  Columns c;
  const auto n = static_cast<Eigen::Index>(idx.size());
  c.obs.resize(first.obs.size(), n);
  c.actions.resize(first.action.size(), n);
  c.next_obs.resize(first.next_obs.size(), n);
  c.costs.resize(n);
  for (Eigen::Index j = 0; j < n; ++j)
  {
    const auto& t = batch.items[idx[static_cast<std::size_t>(j)]];
    if (t.obs.size() != c.obs.rows() || t.action.size() != c.actions.rows()
      || t.next_obs.size() != c.next_obs.rows())
    {
      throw ShapeError("transition batch has inconsistent widths");
    }
    c.obs.col(j) = t.obs;
    c.actions.col(j) = t.action;
    c.next_obs.col(j) = t.next_obs;
    c.costs[j] = t.cost;
  }
  return c;
}

} // anonymous namespace

//==============================================================================
bool PredictiveModels::operator==(const PredictiveModels& o) const
{
  return kind == o.kind && encoder == o.encoder && dynamics == o.dynamics
    && critic == o.critic && latent_dim == o.latent_dim && horizon == o.horizon
    && obs_dim == o.obs_dim && action_dim == o.action_dim
    && pooling == o.pooling && temperature == o.temperature
    && obs_scale == o.obs_scale && action_scale == o.action_scale;
}

//==============================================================================
Eigen::VectorXd observation_scale(
  AgentKind kind, int neighbors, const agents::AgentParams& params)
{
  const bool vehicle = kind == AgentKind::Vehicle;
  Eigen::VectorXd s(env::ObservationLayout::width(neighbors));
  if (vehicle)
  {
    s.head(env::ObservationLayout::ego_width) << 1.0,
      0.4*params.vehicle.max_speed, params.vehicle.max_steering, 2.0, 0.5, 50.0;
  }
  else
  {
    s.head(env::ObservationLayout::ego_width) << 1.0,
      0.4*params.robot.max_speed, 1.0, 10.0, 1.0, 10.0;
  }

  const double reach = vehicle ? 20.0 : 10.0;
  for (int k = 0; k < neighbors; ++k)
  {
    s.segment(env::ObservationLayout::ego_width
      + k*env::ObservationLayout::neighbor_width,
      env::ObservationLayout::neighbor_width) << reach, reach, 5.0, 5.0, 1.0, 3.0;
  }
  return s;
}

//==============================================================================
PredictiveModels make_models(
  AgentKind kind,
  int neighbors,
  const ModelConfig& config,
  const agents::AgentParams& params)
{
  if (config.latent_dim < 1)
    throw ValidationError("latent_dim must be at least 1");
  if (config.horizon < 1)
    throw ValidationError("horizon must be at least 1");
  if (neighbors < 0)
    throw ValidationError("neighbor count must be non-negative");
  if (!(config.temperature > 0.0))
    throw ValidationError("pooling temperature must be positive");

  PredictiveModels m;
  m.kind = kind;
  m.latent_dim = config.latent_dim;
  m.horizon = config.horizon;
  m.obs_dim = env::ObservationLayout::width(neighbors);
  m.action_dim = agents::action_dim(kind);
  m.pooling = config.pooling;
  m.temperature = config.temperature;
  m.obs_scale = observation_scale(kind, neighbors, params);
  m.action_scale = action_scale_of(kind, params);

  // Distinct seeds per network and per kind.
  const std::uint64_t base = config.seed*4 + (kind == AgentKind::Vehicle ? 0 : 2);
  const int L = config.latent_dim;
  m.encoder = autodiff::make_mlp(
    layer_dims(m.obs_dim, config.encoder_hidden, L), config.activation, base*3 + 11);
  m.dynamics = autodiff::make_mlp(
    layer_dims(L + m.action_dim, config.dynamics_hidden, L),
    config.activation, base*3 + 12);
  m.critic = autodiff::make_mlp(
    layer_dims(L, config.critic_hidden, 1), config.activation, base*3 + 13);
  return m;
}

//==============================================================================
ModelBundle make_bundle(
  int neighbors,
  const ModelConfig& config,
  const agents::AgentParams& params)
{
  return ModelBundle{
    make_models(AgentKind::Vehicle, neighbors, config, params),
    make_models(AgentKind::Robot, neighbors, config, params)};
}

//==============================================================================
BoundModels bind(Tape& tape, const PredictiveModels& models, bool trainable)
{
  BoundModels b;
  b.models = &models;
  b.tape = &tape;
  b.encoder = autodiff::bind(tape, models.encoder, trainable);
  b.dynamics = autodiff::bind(tape, models.dynamics, trainable);
  b.critic = autodiff::bind(tape, models.critic, trainable);
  return b;
}

//==============================================================================
Var encode(const BoundModels& bound, const Matrix& observations)
{
  const auto& m = *bound.models;
  if (observations.rows() != m.obs_dim)
  {
    throw ShapeError(
      "observation width " + std::to_string(observations.rows())
      + " does not match model width " + std::to_string(m.obs_dim));
  }
  Var x = bound.tape->constant(normalized(observations, m.obs_scale));
  return autodiff::mlp_forward(m.encoder, bound.encoder, x);
}

//==============================================================================
Var target_latent(const BoundModels& bound, const Matrix& next_observations)
{
  return stop_gradient(encode(bound, next_observations));
}

//==============================================================================
Var predict_next(const BoundModels& bound, Var latent, Var action)
{
  const auto& m = *bound.models;
  if (latent.rows() != m.latent_dim)
  {
    throw ShapeError(
      "latent width " + std::to_string(latent.rows())
      + " does not match " + std::to_string(m.latent_dim));
  }
  if (action.rows() != m.action_dim || action.cols() != latent.cols())
  {
    throw ShapeError(
      "action of shape " + std::to_string(action.rows()) + "x"
      + std::to_string(action.cols()) + " does not fit the "
      + std::string(agents::to_string(m.kind)) + " model");
  }
  Var scaled = action*bound.tape->constant(inverse_action_scale(m, action.cols()));
  return autodiff::mlp_forward(m.dynamics, bound.dynamics, concat(latent, scaled));
}

//==============================================================================
std::vector<Var> unroll(const BoundModels& bound, Var z0, Var action, int horizon)
{
  if (horizon < 1)
    throw ContractError("unroll horizon must be at least 1");

  std::vector<Var> out;
  out.reserve(static_cast<std::size_t>(horizon));
  Var z = z0;
  for (int k = 0; k < horizon; ++k)
  {
    z = predict_next(bound, z, action);
    out.push_back(z);
  }
  return out;
}

//==============================================================================
Var critic(const BoundModels& bound, Var latent)
{
  const auto& m = *bound.models;
  return sigmoid(autodiff::mlp_forward(m.critic, bound.critic, latent));
}

//==============================================================================
Var trajectory_cost(const BoundModels& bound, std::span<const Var> latents)
{
  if (latents.empty())
    throw ContractError("trajectory_cost needs at least one latent");

  std::vector<Var> c;
  c.reserve(latents.size());
  for (const auto& z : latents)
    c.push_back(critic(bound, z));

  const auto& m = *bound.models;
  if (m.pooling == Pooling::Max)
    return max_over_list(c);
  return log_sum_exp(c, m.temperature);
}

//==============================================================================
Eigen::VectorXd encode_value(const PredictiveModels& m, const Eigen::VectorXd& obs)
{
  if (obs.size() != m.obs_dim)
  {
    throw ShapeError(
      "observation width " + std::to_string(obs.size())
      + " does not match model width " + std::to_string(m.obs_dim));
  }
  return autodiff::mlp_eval(m.encoder, normalized(obs, m.obs_scale)).col(0);
}

//==============================================================================
std::vector<double> critic_profile(
  const PredictiveModels& m,
  const Eigen::VectorXd& observation,
  const Eigen::VectorXd& action,
  int horizon)
{
  if (horizon < 1)
    throw ContractError("unroll horizon must be at least 1");
  if (action.size() != m.action_dim)
    throw ShapeError("action width does not match the model");

  const Matrix scaled = Matrix(action).cwiseProduct(inverse_action_scale(m, 1));
  Matrix z = encode_value(m, observation);
  Matrix input(m.latent_dim + m.action_dim, 1);
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(horizon));
  for (int k = 0; k < horizon; ++k)
  {
    input.topRows(m.latent_dim) = z;
    input.bottomRows(m.action_dim) = scaled;
    z = autodiff::mlp_eval(m.dynamics, input);
    out.push_back(autodiff::kernels::sigmoid(autodiff::mlp_eval(m.critic, z))(0, 0));
  }
  return out;
}

//==============================================================================
double predicted_cost(
  const PredictiveModels& m,
  const Eigen::VectorXd& observation,
  const Eigen::VectorXd& action,
  int horizon)
{
  return pool(critic_profile(m, observation, action, horizon), m.pooling, m.temperature);
}

//==============================================================================
TransitionBatch TransitionBatch::of_kind(AgentKind kind) const
{
  TransitionBatch out;
  for (const auto& t : items)
  {
    if (t.kind == kind)
      out.items.push_back(t);
  }
  return out;
}

//==============================================================================
std::pair<TransitionBatch, TransitionBatch> TransitionBatch::split(
  double fraction, std::uint64_t seed) const
{
  if (!(fraction >= 0.0 && fraction <= 1.0))
    throw ValidationError("split fraction must lie in [0, 1]");

  std::vector<std::size_t> order(items.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  const auto n_first = static_cast<std::size_t>(
    std::llround(fraction*static_cast<double>(items.size())));
  std::pair<TransitionBatch, TransitionBatch> out;
  for (std::size_t i = 0; i < order.size(); ++i)
    (i < n_first ? out.first : out.second).items.push_back(items[order[i]]);
  return out;
}

//==============================================================================
void write_transitions(const std::filesystem::path& file, const TransitionBatch& batch)
{
  std::ofstream out(file);
  if (!out)
    throw ConfigError("cannot write " + file.string());
  for (const auto& t : batch.items)
  {
    nlohmann::json j;
    j["kind"] = kind_name(t.kind);
    j["obs"] = to_list(t.obs);
    j["action"] = to_list(t.action);
    j["next_obs"] = to_list(t.next_obs);
    j["cost"] = t.cost;
    out << j.dump() << '\n';
  }
}

//==============================================================================
TransitionBatch read_transitions(const std::filesystem::path& file)
{
  std::ifstream in(file);
  if (!in)
    throw ConfigError("cannot read " + file.string());

  TransitionBatch batch;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line))
  {
    ++line_no;
    if (line.empty())
      continue;
    try
    {
      const auto j = nlohmann::json::parse(line);
      Transition t;
      t.kind = kind_from_name(j.at("kind").get<std::string>());
      t.obs = from_list(j.at("obs").get<std::vector<double>>());
      t.action = from_list(j.at("action").get<std::vector<double>>());
      t.next_obs = from_list(j.at("next_obs").get<std::vector<double>>());
      t.cost = j.at("cost").get<double>();
      batch.items.push_back(std::move(t));
    }
    catch (const nlohmann::json::exception& e)
    {
      throw ConfigError(
        file.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return batch;
}

//==============================================================================
TransitionBatch collect_dataset(
  const env::EpisodeConfig& config,
  const Policy& policy,
  std::size_t n_transitions,
  std::uint64_t seed,
  const CollectConfig& collect)
{
  env::validate(config);
  if (!(collect.reckless_fraction >= 0.0 && collect.reckless_fraction <= 1.0))
    throw ValidationError("reckless_fraction must lie in [0, 1]");
  if (collect.reckless_hold_min < 1 || collect.reckless_hold_max < collect.reckless_hold_min)
    throw ValidationError("reckless hold range must satisfy 1 <= min <= max");

  const auto& p = config.params;
  std::mt19937_64 noise(seed ^ 0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  TransitionBatch batch;
  batch.items.reserve(n_transitions);
  std::uniform_int_distribution<int> hold(collect.reckless_hold_min, collect.reckless_hold_max);
  for (std::uint64_t episode = 0; batch.size() < n_transitions; ++episode)
  {
    env::WorldState world = env::reset(config, (seed + 1)*1000003ULL + episode);

    // Reckless agents ignore everyone else: their acceleration is drawn
    // uniformly over the admissible range and held for a random number of
    // steps. Vehicles keep tracking their lane so the data stays on the road.
    struct Held
    {
      double accel = 0.0;
      int steps_left = 0;
    };
    std::map<int, Held> reckless;
    for (const auto& a : world.agents)
    {
      if (unit(noise) < collect.reckless_fraction)
        reckless[a.id] = Held{};
    }
    const auto reckless_accel = [&](int id, double lo, double hi)
    {
      Held& h = reckless.at(id);
      if (h.steps_left <= 0)
      {
        h.accel = lo + (hi - lo)*unit(noise);
        h.steps_left = hold(noise);
      }
      --h.steps_left;
      return h.accel;
    };

    while (!env::episode_over(world, config) && batch.size() < n_transitions)
    {
      env::JointAction joint;
      std::map<int, Eigen::VectorXd> observations;
      for (const auto& a : world.agents)
      {
        if (!a.active())
          continue;
        const auto obs = env::observe(world, a.id, config);
        const bool is_reckless = reckless.count(a.id) > 0;
        agents::Action act;
        if (a.kind == AgentKind::Vehicle)
        {
          auto v = std::get<agents::VehicleAction>(policy(world, a, obs));
          if (is_reckless)
            v.accel = reckless_accel(a.id, p.vehicle.min_accel, p.vehicle.max_accel);
          else
            v.accel += collect.vehicle_accel_sigma*gauss(noise);
          v.steering_rate += collect.vehicle_steering_sigma*gauss(noise);
          act = agents::clip_action(v, p.vehicle);
        }
        else
        {
          auto r = std::get<agents::RobotAction>(policy(world, a, obs));
          if (is_reckless)
            r.accel = reckless_accel(a.id, p.robot.min_accel, p.robot.max_accel);
          else
            r.accel += collect.robot_accel_sigma*gauss(noise);
          act = agents::clip_action(r, p.robot);
        }
        joint[a.id] = act;
        observations[a.id] = obs.values;
      }

      env::step(world, joint, config);
      for (const auto& [id, obs] : observations)
      {
        if (batch.size() >= n_transitions)
          break;
        const auto& a = world.agent(id);
        Transition t;
        t.kind = a.kind;
        t.obs = obs;
        t.action = agents::to_vector(joint.at(id));
        t.next_obs = env::observe(world, id, config, true).values;
        t.cost = env::ground_truth_cost(world, id, collect.label_d_safe, config);
        batch.items.push_back(std::move(t));
      }
    }
  }
  return batch;
}

//==============================================================================
JointLoss joint_loss(
  const BoundModels& bound,
  const Matrix& obs,
  const Matrix& actions,
  const Matrix& next_obs,
  const Eigen::RowVectorXd& costs,
  double lambda_dyn,
  double lambda_critic)
{
  auto& tape = *bound.tape;
  const auto B = obs.cols();
  if (B == 0 || actions.cols() != B || next_obs.cols() != B || costs.size() != B)
    throw ShapeError("joint_loss: inconsistent batch sizes");

  const double inv_b = 1.0 / static_cast<double>(B);
  const Var z = encode(bound, obs);
  const Var z_next = predict_next(bound, z, tape.constant(actions));
  const Var target = target_latent(bound, next_obs);

  JointLoss loss;
  loss.dynamics = sum(square(z_next - target))*inv_b;
  loss.critic = sum(square(critic(bound, z_next) - tape.constant(costs)))*inv_b;
  loss.total = loss.dynamics*lambda_dyn + loss.critic*lambda_critic;
  return loss;
}

//==============================================================================
TrainResult train(
  const PredictiveModels& models,
  const TransitionBatch& batch,
  const TrainConfig& config)
{
  if (batch.empty())
    throw TrainingError("training batch is empty");
  if (config.epochs < 0)
    throw ValidationError("epochs must be non-negative");
  if (!(config.learning_rate > 0.0))
    throw ValidationError("learning rate must be positive");
  for (const auto& t : batch.items)
  {
    if (t.kind != models.kind)
    {
      throw TrainingError(
        "a " + kind_name(t.kind) + " transition was passed to the "
        + kind_name(models.kind) + " model");
    }
  }

  TrainResult result;
  result.models = models;
  auto& m = result.models;
  auto adam_enc = autodiff::make_adam(m.encoder);
  auto adam_dyn = autodiff::make_adam(m.dynamics);
  auto adam_crit = autodiff::make_adam(m.critic);

  const std::size_t n = batch.size();
  const std::size_t bs = config.batch_size == 0 ? n : std::min(config.batch_size, n);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(config.seed);

  for (int epoch = 0; epoch < config.epochs; ++epoch)
  {
    if (bs < n)
      std::shuffle(order.begin(), order.end(), rng);

    double total = 0.0, dyn = 0.0, crit = 0.0;
    for (std::size_t start = 0; start < n; start += bs)
    {
      const std::size_t count = std::min(bs, n - start);
      const auto cols = gather(
        batch, std::span<const std::size_t>(order.data() + start, count));

      Tape tape;
      const auto bound = bind(tape, m, true);
      const auto loss = joint_loss(
        bound, cols.obs, cols.actions, cols.next_obs, cols.costs,
        config.lambda_dyn, config.lambda_critic);

      const double value = loss.total.scalar();
      if (!std::isfinite(value))
      {
        throw TrainingError(
          "non-finite loss at epoch " + std::to_string(epoch));
      }
      const double w = static_cast<double>(count) / static_cast<double>(n);
      total += w*value;
      dyn += w*loss.dynamics.scalar();
      crit += w*loss.critic.scalar();

      tape.backward(loss.total);
      m.encoder = autodiff::optimizer_step(
        m.encoder, autodiff::gradients(m.encoder, bound.encoder),
        adam_enc, config.learning_rate);
      m.dynamics = autodiff::optimizer_step(
        m.dynamics, autodiff::gradients(m.dynamics, bound.dynamics),
        adam_dyn, config.learning_rate);
      m.critic = autodiff::optimizer_step(
        m.critic, autodiff::gradients(m.critic, bound.critic),
        adam_crit, config.learning_rate);
    }
    result.loss_history.push_back(total);
    result.dynamics_history.push_back(dyn);
    result.critic_history.push_back(crit);
  }
  return result;
}

//==============================================================================
double critic_mae(const PredictiveModels& m, const TransitionBatch& batch)
{
  if (batch.empty())
    throw ValidationError("critic_mae needs a non-empty batch");

  std::vector<std::size_t> idx(batch.size());
  std::iota(idx.begin(), idx.end(), 0);
  const auto cols = gather(batch, idx);

  const Matrix z = autodiff::mlp_eval(m.encoder, normalized(cols.obs, m.obs_scale));
  Matrix input(m.latent_dim + m.action_dim, z.cols());
  input.topRows(m.latent_dim) = z;
  input.bottomRows(m.action_dim) =
    cols.actions.cwiseProduct(inverse_action_scale(m, z.cols()));
  const Matrix c = autodiff::kernels::sigmoid(
    autodiff::mlp_eval(m.critic, autodiff::mlp_eval(m.dynamics, input)));
  return (c.row(0) - cols.costs).cwiseAbs().mean();
}

//==============================================================================
void save_models(const std::filesystem::path& file, const PredictiveModels& m)
{
  nlohmann::json meta;
  meta["kind"] = kind_name(m.kind);
  meta["latent_dim"] = m.latent_dim;
  meta["horizon"] = m.horizon;
  meta["obs_dim"] = m.obs_dim;
  meta["action_dim"] = m.action_dim;
  meta["pooling"] = to_string(m.pooling);
  meta["temperature"] = m.temperature;
  meta["obs_scale"] = to_list(m.obs_scale);
  meta["action_scale"] = to_list(m.action_scale);

  autodiff::Checkpoint ck;
  ck.networks = {
    {"encoder", m.encoder}, {"dynamics", m.dynamics}, {"critic", m.critic}};
  ck.meta_json = meta.dump();
  autodiff::save_checkpoint(file, ck);
}

//==============================================================================
PredictiveModels load_models(const std::filesystem::path& file)
{
  const auto ck = autodiff::load_checkpoint(file);
  PredictiveModels m;
  try
  {
    const auto meta = nlohmann::json::parse(ck.meta_json);
    m.kind = kind_from_name(meta.at("kind").get<std::string>());
    m.latent_dim = meta.at("latent_dim").get<int>();
    m.horizon = meta.at("horizon").get<int>();
    m.obs_dim = meta.at("obs_dim").get<int>();
    m.action_dim = meta.at("action_dim").get<int>();
    m.pooling = pooling_from_string(meta.at("pooling").get<std::string>());
    m.temperature = meta.at("temperature").get<double>();
    m.obs_scale = from_list(meta.at("obs_scale").get<std::vector<double>>());
    m.action_scale = from_list(meta.at("action_scale").get<std::vector<double>>());
  }
  catch (const nlohmann::json::exception& e)
  {
    throw CheckpointError(file.string() + ": bad model metadata: " + e.what());
  }
  catch (const ValidationError& e)
  {
    throw CheckpointError(file.string() + ": " + e.what());
  }

  try
  {
    m.encoder = ck.network("encoder");
    m.dynamics = ck.network("dynamics");
    m.critic = ck.network("critic");
  }
  catch (const LookupError& e)
  {
    throw CheckpointError(file.string() + ": " + e.what());
  }

  if (m.encoder.input_dim() != m.obs_dim || m.encoder.output_dim() != m.latent_dim
    || m.dynamics.input_dim() != m.latent_dim + m.action_dim
    || m.dynamics.output_dim() != m.latent_dim
    || m.critic.input_dim() != m.latent_dim || m.critic.output_dim() != 1
    || m.obs_scale.size() != m.obs_dim || m.action_scale.size() != m.action_dim)
  {
    throw CheckpointError(file.string() + ": network shapes disagree with metadata");
  }
  return m;
}

//==============================================================================
void save_bundle(const std::filesystem::path& dir, const ModelBundle& bundle)
{
  std::filesystem::create_directories(dir);
  save_models(dir / "vehicle.ckpt", bundle.vehicle);
  save_models(dir / "robot.ckpt", bundle.robot);
}

//==============================================================================
ModelBundle load_bundle(const std::filesystem::path& dir)
{
  ModelBundle b;
  for (const auto kind : {AgentKind::Vehicle, AgentKind::Robot})
  {
    const auto file = dir / (kind_name(kind) + ".ckpt");
    if (!std::filesystem::exists(file))
      throw CheckpointError("missing checkpoint " + file.string());
    b.of(kind) = load_models(file);
    if (b.of(kind).kind != kind)
      throw CheckpointError(file.string() + " holds a model for another kind");
  }
  return b;
}

} // namespace predictive
} // namespace mixsafe
