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

#ifndef MIXSAFE__AUTODIFF_HPP
#define MIXSAFE__AUTODIFF_HPP

#include <Eigen/Core>

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace mixsafe {
namespace autodiff {

using Matrix = Eigen::MatrixXd;

class Tape;

//==============================================================================
/// Handle to a node recorded on a Tape. Cheap to copy; only valid while the
/// tape that produced it is alive and has not been cleared.
class Var
{
public:
  Var() = default;

  const Matrix& value() const;
  const Matrix& grad() const;

  /// Value of a 1x1 node.
  double scalar() const;

  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }

  bool requires_grad() const;
  Tape* tape() const { return _tape; }
  std::size_t index() const { return _index; }

private:
  friend class Tape;
  Var(Tape* tape, std::size_t index) : _tape(tape), _index(index) {}

  Tape* _tape = nullptr;
  std::size_t _index = 0;
};

//==============================================================================
enum class Op
{
  Leaf,
  Affine,
  Tanh,
  Relu,
  Sigmoid,
  Square,
  Sum,
  MaxOverList,
  LogSumExp,
  Add,
  Sub,
  Mul,
  Scale,
  Shift,
  Concat
};

//==============================================================================
/// Append-only record of a computation. Nodes are stored in creation order,
/// which is a topological order of the graph, so the reverse sweep is a plain
/// descending loop.
class Tape
{
public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Input or parameter. Gradients are accumulated only for leaves that
  /// require them and for nodes downstream of such leaves.
  Var leaf(Matrix value, bool requires_grad = true);
  Var constant(Matrix value) { return leaf(std::move(value), false); }

  /// Copies the value of x into a new constant node, cutting the graph.
  Var stop_gradient(Var x);

  /// W (m x n) times x (n x B) plus b (m x 1) broadcast across columns.
  Var affine(Var weight, Var x, Var bias);

  Var tanh(Var x);

  /// Subgradient at exactly zero is zero.
  Var relu(Var x);
  Var sigmoid(Var x);
  Var square(Var x);

  /// Sum of all entries, a 1x1 node.
  Var sum(Var x);

  /// Maximum of 1x1 nodes. Backward routes the full gradient to the first
  /// index attaining the maximum.
  Var max_over_list(std::span<const Var> items);

  /// temperature * log(sum(exp(s_i / temperature))) of 1x1 nodes.
  Var log_sum_exp(std::span<const Var> items, double temperature);

  Var add(Var a, Var b);
  Var sub(Var a, Var b);

  /// Elementwise product of same-shaped nodes.
  Var mul(Var a, Var b);
  Var scale(Var a, double factor);
  Var shift(Var a, double offset);

  /// Stacks a (m x B) over b (n x B).
  Var concat(Var a, Var b);

  /// Reverse sweep from a 1x1 output. Resets every gradient, seeds the
  /// output with 1 and accumulates into all reachable nodes that require
  /// gradients. Throws ContractError for non-scalar outputs.
  void backward(Var output);

  std::size_t size() const { return _nodes.size(); }
  void clear() { _nodes.clear(); }

  Op op(Var v) const { return node(v).op; }

private:
  friend class Var;

  struct Node
  {
    Matrix value;
    Matrix grad;
    Op op = Op::Leaf;
    std::array<std::size_t, 3> parents{};
    std::size_t n_parents = 0;
    std::vector<std::size_t> list;
    std::vector<double> weights;
    double constant = 0.0;
    bool requires_grad = false;
  };

  const Node& node(Var v) const;
  Var push(Node n);
  void check_owner(Var v) const;

  std::vector<Node> _nodes;
};

//==============================================================================
// Free-function spellings so model code reads like math.
Var affine(Var weight, Var x, Var bias);
Var tanh(Var x);
Var relu(Var x);
Var sigmoid(Var x);
Var square(Var x);
Var sum(Var x);
Var max_over_list(std::span<const Var> items);
Var log_sum_exp(std::span<const Var> items, double temperature);
Var concat(Var a, Var b);
Var stop_gradient(Var x);

Var operator+(Var a, Var b);
Var operator-(Var a, Var b);
Var operator*(Var a, Var b);
Var operator*(Var a, double k);
Var operator*(double k, Var a);
Var operator+(Var a, double k);
Var operator-(Var a, double k);

//==============================================================================
/// Value kernels shared by the taped ops and tape-free inference so both
/// produce bitwise identical results.
namespace kernels {

Matrix affine(const Matrix& weight, const Matrix& x, const Matrix& bias);
Matrix tanh(const Matrix& x);
Matrix relu(const Matrix& x);
Matrix sigmoid(const Matrix& x);

} // namespace kernels

} // namespace autodiff
} // namespace mixsafe

#endif // MIXSAFE__AUTODIFF_HPP
