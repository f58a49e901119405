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

#include <mixsafe/mlp.hpp>
#include <mixsafe/errors.hpp>

#include <cmath>
#include <random>

namespace mixsafe {
namespace autodiff {

namespace {

//==============================================================================
Var activate(Activation a, Var x)
{
  switch (a)
  {
    case Activation::Tanh: return tanh(x);
    case Activation::Relu: return relu(x);
    case Activation::Identity: return x;
  }
  return x;
}

//==============================================================================
Matrix activate(Activation a, Matrix x)
{
  switch (a)
  {
    case Activation::Tanh: return kernels::tanh(x);
    case Activation::Relu: return kernels::relu(x);
    case Activation::Identity: return x;
  }
  return x;
}

} // anonymous namespace

//==============================================================================
std::string_view to_string(Activation a)
{
  switch (a)
  {
    case Activation::Identity: return "identity";
    case Activation::Tanh: return "tanh";
    case Activation::Relu: return "relu";
  }
  return "identity";
}

//==============================================================================
Activation activation_from_string(std::string_view name)
{
  if (name == "identity")
    return Activation::Identity;
  if (name == "tanh")
    return Activation::Tanh;
  if (name == "relu")
    return Activation::Relu;
  throw ValidationError("unknown activation '" + std::string(name) + "'");
}

//==============================================================================
bool DenseLayer::operator==(const DenseLayer& other) const
{
  return activation == other.activation
    && weight.rows() == other.weight.rows()
    && weight.cols() == other.weight.cols()
    && bias.size() == other.bias.size()
    && weight == other.weight && bias == other.bias;
}

//==============================================================================
int MlpParams::input_dim() const
{
  return layers.empty() ? 0 : static_cast<int>(layers.front().weight.cols());
}

//==============================================================================
int MlpParams::output_dim() const
{
  return layers.empty() ? 0 : static_cast<int>(layers.back().weight.rows());
}

//==============================================================================
std::size_t MlpParams::parameter_count() const
{
  std::size_t n = 0;
  for (const auto& l : layers)
    n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  return n;
}

//==============================================================================
bool MlpParams::operator==(const MlpParams& other) const
{
  return seed == other.seed && layers == other.layers;
}

//==============================================================================
MlpParams make_mlp(
  std::span<const int> dims,
  Activation hidden,
  std::uint64_t seed)
{
  if (dims.size() < 2)
    throw ShapeError("an MLP needs at least an input and an output width");
  for (int d : dims)
  {
    if (d < 1)
      throw ShapeError("MLP widths must be positive");
  }

  std::mt19937_64 rng(seed);
  MlpParams params;
  params.seed = seed;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i)
  {
    const int fan_in = dims[i];
    const int fan_out = dims[i+1];
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));

    DenseLayer layer;
    layer.weight.resize(fan_out, fan_in);
    for (Eigen::Index c = 0; c < layer.weight.cols(); ++c)
    {
      for (Eigen::Index r = 0; r < layer.weight.rows(); ++r)
      {
        const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
        layer.weight(r, c) = limit*(2.0*u - 1.0);
      }
    }
    layer.bias = Eigen::VectorXd::Zero(fan_out);
    layer.activation = (i + 2 == dims.size()) ? Activation::Identity : hidden;
    params.layers.push_back(std::move(layer));
  }
  return params;
}

//==============================================================================
MlpParams zeros_like(const MlpParams& params)
{
  MlpParams out = params;
  for (auto& l : out.layers)
  {
    l.weight.setZero();
    l.bias.setZero();
  }
  return out;
}

//==============================================================================
void require_same_shapes(const MlpParams& a, const MlpParams& b)
{
  if (a.layers.size() != b.layers.size())
    throw ShapeError("parameter sets differ in layer count");
  for (std::size_t i = 0; i < a.layers.size(); ++i)
  {
    const auto& x = a.layers[i];
    const auto& y = b.layers[i];
    if (x.weight.rows() != y.weight.rows() || x.weight.cols() != y.weight.cols()
      || x.bias.size() != y.bias.size())
    {
      throw ShapeError("parameter sets differ in layer " + std::to_string(i));
    }
  }
}

//==============================================================================
MlpVars bind(Tape& tape, const MlpParams& params, bool trainable)
{
  MlpVars vars;
  for (const auto& l : params.layers)
  {
    vars.weights.push_back(tape.leaf(l.weight, trainable));
    vars.biases.push_back(tape.leaf(l.bias, trainable));
  }
  return vars;
}

//==============================================================================
Var mlp_forward(const MlpParams& params, const MlpVars& vars, Var input)
{
  if (input.rows() != params.input_dim())
  {
    throw ShapeError(
      "MLP expects input width " + std::to_string(params.input_dim())
      + ", got " + std::to_string(input.rows()));
  }

  Var x = input;
  for (std::size_t i = 0; i < params.layers.size(); ++i)
  {
    x = affine(vars.weights[i], x, vars.biases[i]);
    x = activate(params.layers[i].activation, x);
  }
  return x;
}

//==============================================================================
Matrix mlp_eval(const MlpParams& params, const Matrix& input)
{
  if (input.rows() != params.input_dim())
  {
    throw ShapeError(
      "MLP expects input width " + std::to_string(params.input_dim())
      + ", got " + std::to_string(input.rows()));
  }

  Matrix x = input;
  for (const auto& l : params.layers)
    x = activate(l.activation, kernels::affine(l.weight, x, l.bias));
  return x;
}

//==============================================================================
MlpParams gradients(const MlpParams& params, const MlpVars& vars)
{
  MlpParams out = zeros_like(params);
  for (std::size_t i = 0; i < params.layers.size(); ++i)
  {
    if (vars.weights[i].requires_grad())
      out.layers[i].weight = vars.weights[i].grad();
    if (vars.biases[i].requires_grad())
      out.layers[i].bias = vars.biases[i].grad().col(0);
  }
  return out;
}

//==============================================================================
AdamState make_adam(const MlpParams& params)
{
  AdamState s;
  s.m = zeros_like(params);
  s.v = zeros_like(params);
  return s;
}

//==============================================================================
MlpParams optimizer_step(
  const MlpParams& params,
  const MlpParams& grads,
  AdamState& state,
  double learning_rate)
{
  require_same_shapes(params, grads);
  require_same_shapes(params, state.m);
  require_same_shapes(params, state.v);

  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);

  const auto update = [&](auto& p, const auto& g, auto& m, auto& v)
  {
    m = state.beta1*m + (1.0 - state.beta1)*g;
    v = state.beta2*v + (1.0 - state.beta2)*g.cwiseProduct(g);
    p.array() -= learning_rate*(m.array() / c1)
      / ((v.array() / c2).sqrt() + state.epsilon);
  };

  MlpParams out = params;
  for (std::size_t i = 0; i < out.layers.size(); ++i)
  {
    update(out.layers[i].weight, grads.layers[i].weight,
      state.m.layers[i].weight, state.v.layers[i].weight);
    update(out.layers[i].bias, grads.layers[i].bias,
      state.m.layers[i].bias, state.v.layers[i].bias);
  }
  return out;
}

} // namespace autodiff
} // namespace mixsafe
