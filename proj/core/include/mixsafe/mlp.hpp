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

#ifndef MIXSAFE__MLP_HPP
#define MIXSAFE__MLP_HPP

#include <mixsafe/autodiff.hpp>

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace mixsafe {
namespace autodiff {

enum class Activation
{
  Identity,
  Tanh,
  Relu
};

std::string_view to_string(Activation a);

/// Throws ValidationError for unknown names.
Activation activation_from_string(std::string_view name);

//==============================================================================
struct DenseLayer
{
  Matrix weight;
  Eigen::VectorXd bias;
  Activation activation = Activation::Identity;

  bool operator==(const DenseLayer& other) const;
};

//==============================================================================
struct MlpParams
{
  std::vector<DenseLayer> layers;
  std::uint64_t seed = 0;

  int input_dim() const;
  int output_dim() const;
  std::size_t parameter_count() const;

  bool operator==(const MlpParams& other) const;
};

/// Layer widths dims[0] -> dims[1] -> ... -> dims.back(). Hidden layers use
/// the given activation, the last layer is linear. Weights are drawn
/// uniformly in +-sqrt(6 / (fan_in + fan_out)) from a seeded generator and
/// biases start at zero. Throws ShapeError for fewer than two widths or
/// non-positive widths.
MlpParams make_mlp(
  std::span<const int> dims,
  Activation hidden,
  std::uint64_t seed);

/// Same shapes as params, every entry zero.
MlpParams zeros_like(const MlpParams& params);

/// Throws ShapeError unless both parameter sets have identical layer shapes.
void require_same_shapes(const MlpParams& a, const MlpParams& b);

//==============================================================================
/// Parameters of one MLP recorded on a tape.
struct MlpVars
{
  std::vector<Var> weights;
  std::vector<Var> biases;
};

/// Records every parameter as a leaf. Frozen parameters do not accumulate
/// gradients, which skips their share of the reverse sweep.
MlpVars bind(Tape& tape, const MlpParams& params, bool trainable);

/// Alternating affine + activation, linear final layer. Throws ShapeError when
/// the input height differs from the first layer's fan-in.
Var mlp_forward(const MlpParams& params, const MlpVars& vars, Var input);

/// Tape-free evaluation with arithmetic identical to mlp_forward.
Matrix mlp_eval(const MlpParams& params, const Matrix& input);

/// Gradients accumulated on bound parameters after Tape::backward, shaped
/// like params. Frozen parameters report zero.
MlpParams gradients(const MlpParams& params, const MlpVars& vars);

//==============================================================================
struct AdamState
{
  MlpParams m;
  MlpParams v;
  long step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

AdamState make_adam(const MlpParams& params);

/// One bias-corrected Adam update. Moments are carried in state. Throws
/// ShapeError when grads or the state do not match params.
MlpParams optimizer_step(
  const MlpParams& params,
  const MlpParams& grads,
  AdamState& state,
  double learning_rate);

} // namespace autodiff
} // namespace mixsafe

#endif // MIXSAFE__MLP_HPP
