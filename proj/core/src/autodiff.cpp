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

#include <mixsafe/autodiff.hpp>
#include <mixsafe/errors.hpp>

#include <cmath>
#include <sstream>

namespace mixsafe {
namespace autodiff {

namespace {

//==============================================================================
std::string shape(const Matrix& m)
{
  std::ostringstream s;
  s << m.rows() << "x" << m.cols();
  return s.str();
}

//==============================================================================
void require_same_shape(const Matrix& a, const Matrix& b, const char* op)
{
  if (a.rows() != b.rows() || a.cols() != b.cols())
  {
    throw ShapeError(
      std::string(op) + ": shape mismatch " + shape(a) + " vs " + shape(b));
  }
}

//==============================================================================
void require_scalar(const Matrix& a, const char* op)
{
  if (a.rows() != 1 || a.cols() != 1)
    throw ShapeError(std::string(op) + ": expected a 1x1 node, got " + shape(a));
}

} // anonymous namespace

//==============================================================================
namespace kernels {

Matrix affine(const Matrix& weight, const Matrix& x, const Matrix& bias)
{
  Matrix out = weight*x;
  out.colwise() += bias.col(0);
  return out;
}

Matrix tanh(const Matrix& x)
{
  return x.array().tanh().matrix();
}

Matrix relu(const Matrix& x)
{
  return x.cwiseMax(0.0);
}

Matrix sigmoid(const Matrix& x)
{
  return (1.0 / (1.0 + (-x.array()).exp())).matrix();
}

} // namespace kernels

//==============================================================================
const Matrix& Var::value() const
{
  return _tape->node(*this).value;
}

//==============================================================================
const Matrix& Var::grad() const
{
  return _tape->node(*this).grad;
}

//==============================================================================
double Var::scalar() const
{
  const auto& v = value();
  require_scalar(v, "scalar");
  return v(0, 0);
}

//==============================================================================
bool Var::requires_grad() const
{
  return _tape->node(*this).requires_grad;
}

//==============================================================================
const Tape::Node& Tape::node(Var v) const
{
  check_owner(v);
  return _nodes[v._index];
}

//==============================================================================
void Tape::check_owner(Var v) const
{
  if (v._tape != this || v._index >= _nodes.size())
    throw ContractError("variable does not belong to this tape");
}

//==============================================================================
Var Tape::push(Node n)
{
  for (std::size_t i = 0; i < n.n_parents; ++i)
    n.requires_grad = n.requires_grad || _nodes[n.parents[i]].requires_grad;
  for (std::size_t p : n.list)
    n.requires_grad = n.requires_grad || _nodes[p].requires_grad;

  _nodes.push_back(std::move(n));
  return Var(this, _nodes.size() - 1);
}

//==============================================================================
Var Tape::leaf(Matrix value, bool requires_grad)
{
  Node n;
  n.value = std::move(value);
  n.op = Op::Leaf;
  n.requires_grad = requires_grad;
  return push(std::move(n));
}

//==============================================================================
Var Tape::stop_gradient(Var x)
{
  return leaf(node(x).value, false);
}

//==============================================================================
Var Tape::affine(Var weight, Var x, Var bias)
{
  const auto& W = node(weight).value;
  const auto& X = node(x).value;
  const auto& b = node(bias).value;
  if (W.cols() != X.rows() || b.rows() != W.rows() || b.cols() != 1)
  {
    throw ShapeError(
      "affine: weight " + shape(W) + ", input " + shape(X) + ", bias " + shape(b));
  }

  Node n;
  n.value = kernels::affine(W, X, b);
  n.op = Op::Affine;
  n.parents = {weight._index, x._index, bias._index};
  n.n_parents = 3;
  return push(std::move(n));
}

//==============================================================================
Var Tape::tanh(Var x)
{
  Node n;
  n.value = kernels::tanh(node(x).value);
  n.op = Op::Tanh;
  n.parents[0] = x._index;
  n.n_parents = 1;
  return push(std::move(n));
}

//==============================================================================
Var Tape::relu(Var x)
{
  Node n;
  n.value = kernels::relu(node(x).value);
  n.op = Op::Relu;
  n.parents[0] = x._index;
  n.n_parents = 1;
  return push(std::move(n));
}

//==============================================================================
Var Tape::sigmoid(Var x)
{
  Node n;
  n.value = kernels::sigmoid(node(x).value);
  n.op = Op::Sigmoid;
  n.parents[0] = x._index;
  n.n_parents = 1;
  return push(std::move(n));
}

//==============================================================================
Var Tape::square(Var x)
{
  Node n;
  n.value = node(x).value.array().square().matrix();
  n.op = Op::Square;
  n.parents[0] = x._index;
  n.n_parents = 1;
  return push(std::move(n));
}

//==============================================================================
Var Tape::sum(Var x)
{
  Node n;
  n.value = Matrix::Constant(1, 1, node(x).value.sum());
  n.op = Op::Sum;
  n.parents[0] = x._index;
  n.n_parents = 1;
  return push(std::move(n));
}

//==============================================================================
Var Tape::max_over_list(std::span<const Var> items)
{
  if (items.empty())
    throw ContractError("max_over_list: empty list");

  Node n;
  n.op = Op::MaxOverList;
  std::size_t best = 0;
  double best_value = 0.0;
  for (std::size_t i = 0; i < items.size(); ++i)
  {
    const auto& v = node(items[i]).value;
    require_scalar(v, "max_over_list");
    n.list.push_back(items[i]._index);
    if (i == 0 || v(0, 0) > best_value)
    {
      best = i;
      best_value = v(0, 0);
    }
  }

  n.value = Matrix::Constant(1, 1, best_value);
  n.weights.assign(items.size(), 0.0);
  n.weights[best] = 1.0;
  return push(std::move(n));
}

//==============================================================================
Var Tape::log_sum_exp(std::span<const Var> items, double temperature)
{
  if (items.empty())
    throw ContractError("log_sum_exp: empty list");
  if (!(temperature > 0.0))
    throw ContractError("log_sum_exp: temperature must be positive");

  Node n;
  n.op = Op::LogSumExp;
  std::vector<double> s;
  for (const auto& item : items)
  {
    const auto& v = node(item).value;
    require_scalar(v, "log_sum_exp");
    n.list.push_back(item._index);
    s.push_back(v(0, 0) / temperature);
  }

  double peak = s[0];
  for (double x : s)
    peak = std::max(peak, x);

  double total = 0.0;
  for (double x : s)
    total += std::exp(x - peak);

  n.weights.reserve(s.size());
  for (double x : s)
    n.weights.push_back(std::exp(x - peak) / total);

  n.value = Matrix::Constant(1, 1, temperature*(peak + std::log(total)));
  return push(std::move(n));
}

//==============================================================================
Var Tape::add(Var a, Var b)
{
  require_same_shape(node(a).value, node(b).value, "add");
  Node n;
  n.value = node(a).value + node(b).value;
  n.op = Op::Add;
  n.parents = {a._index, b._index, 0};
  n.n_parents = 2;
  return push(std::move(n));
}

//==============================================================================
Var Tape::sub(Var a, Var b)
{
  require_same_shape(node(a).value, node(b).value, "sub");
  Node n;
  n.value = node(a).value - node(b).value;
  n.op = Op::Sub;
  n.parents = {a._index, b._index, 0};
  n.n_parents = 2;
  return push(std::move(n));
}

//==============================================================================
Var Tape::mul(Var a, Var b)
{
  require_same_shape(node(a).value, node(b).value, "mul");
  Node n;
  n.value = node(a).value.cwiseProduct(node(b).value);
  n.op = Op::Mul;
  n.parents = {a._index, b._index, 0};
  n.n_parents = 2;
  return push(std::move(n));
}

//==============================================================================
Var Tape::scale(Var a, double factor)
{
  Node n;
  n.value = node(a).value*factor;
  n.op = Op::Scale;
  n.constant = factor;
  n.parents[0] = a._index;
  n.n_parents = 1;
  return push(std::move(n));
}

//==============================================================================
Var Tape::shift(Var a, double offset)
{
  Node n;
  n.value = (node(a).value.array() + offset).matrix();
  n.op = Op::Shift;
  n.constant = offset;
  n.parents[0] = a._index;
  n.n_parents = 1;
  return push(std::move(n));
}

//==============================================================================
Var Tape::concat(Var a, Var b)
{
  const auto& A = node(a).value;
  const auto& B = node(b).value;
  if (A.cols() != B.cols())
    throw ShapeError("concat: column mismatch " + shape(A) + " vs " + shape(B));

  Node n;
  n.value.resize(A.rows() + B.rows(), A.cols());
  n.value.topRows(A.rows()) = A;
  n.value.bottomRows(B.rows()) = B;
  n.op = Op::Concat;
  n.parents = {a._index, b._index, 0};
  n.n_parents = 2;
  return push(std::move(n));
}

//==============================================================================
void Tape::backward(Var output)
{
  check_owner(output);
  const auto& out = _nodes[output._index].value;
  if (out.rows() != 1 || out.cols() != 1)
  {
    throw ContractError(
      "backward needs a scalar output, got " + shape(out));
  }

  for (auto& n : _nodes)
  {
    if (n.requires_grad)
      n.grad.setZero(n.value.rows(), n.value.cols());
    else
      n.grad.resize(0, 0);
  }

  if (!_nodes[output._index].requires_grad)
    return;

  std::vector<char> reachable(output._index + 1, 0);
  reachable[output._index] = 1;
  _nodes[output._index].grad(0, 0) = 1.0;

  const auto wants = [&](std::size_t i) -> Matrix*
  {
    reachable[i] = 1;
    return _nodes[i].requires_grad ? &_nodes[i].grad : nullptr;
  };

  for (std::size_t k = output._index + 1; k-- > 0;)
  {
    if (!reachable[k])
      continue;
    Node& n = _nodes[k];
    if (!n.requires_grad || n.op == Op::Leaf)
      continue;

    const Matrix& g = n.grad;
    switch (n.op)
    {
      case Op::Affine:
      {
        const Matrix& W = _nodes[n.parents[0]].value;
        const Matrix& X = _nodes[n.parents[1]].value;
        if (Matrix* dW = wants(n.parents[0]))
          dW->noalias() += g*X.transpose();
        if (Matrix* dX = wants(n.parents[1]))
          dX->noalias() += W.transpose()*g;
        if (Matrix* db = wants(n.parents[2]))
          *db += g.rowwise().sum();
        break;
      }
      case Op::Tanh:
      {
        if (Matrix* dx = wants(n.parents[0]))
          *dx += (g.array()*(1.0 - n.value.array().square())).matrix();
        break;
      }
      case Op::Relu:
      {
        const Matrix& x = _nodes[n.parents[0]].value;
        if (Matrix* dx = wants(n.parents[0]))
          *dx += (x.array() > 0.0).select(g.array(), 0.0).matrix();
        break;
      }
      case Op::Sigmoid:
      {
        if (Matrix* dx = wants(n.parents[0]))
        {
          *dx += (g.array()*n.value.array()*(1.0 - n.value.array())).matrix();
        }
        break;
      }
      case Op::Square:
      {
        const Matrix& x = _nodes[n.parents[0]].value;
        if (Matrix* dx = wants(n.parents[0]))
          *dx += (2.0*g.array()*x.array()).matrix();
        break;
      }
      case Op::Sum:
      {
        if (Matrix* dx = wants(n.parents[0]))
          dx->array() += g(0, 0);
        break;
      }
      case Op::MaxOverList:
      case Op::LogSumExp:
      {
        for (std::size_t i = 0; i < n.list.size(); ++i)
        {
          Matrix* d = wants(n.list[i]);
          if (d && n.weights[i] != 0.0)
            (*d)(0, 0) += n.weights[i]*g(0, 0);
        }
        break;
      }
      case Op::Add:
      {
        if (Matrix* da = wants(n.parents[0]))
          *da += g;
        if (Matrix* db = wants(n.parents[1]))
          *db += g;
        break;
      }
      case Op::Sub:
      {
        if (Matrix* da = wants(n.parents[0]))
          *da += g;
        if (Matrix* db = wants(n.parents[1]))
          *db -= g;
        break;
      }
      case Op::Mul:
      {
        const Matrix& a = _nodes[n.parents[0]].value;
        const Matrix& b = _nodes[n.parents[1]].value;
        if (Matrix* da = wants(n.parents[0]))
          *da += g.cwiseProduct(b);
        if (Matrix* db = wants(n.parents[1]))
          *db += g.cwiseProduct(a);
        break;
      }
      case Op::Scale:
      {
        if (Matrix* da = wants(n.parents[0]))
          *da += n.constant*g;
        break;
      }
      case Op::Shift:
      {
        if (Matrix* da = wants(n.parents[0]))
          *da += g;
        break;
      }
      case Op::Concat:
      {
        const Eigen::Index top = _nodes[n.parents[0]].value.rows();
        if (Matrix* da = wants(n.parents[0]))
          *da += g.topRows(top);
        if (Matrix* db = wants(n.parents[1]))
          *db += g.bottomRows(g.rows() - top);
        break;
      }
      case Op::Leaf:
        break;
    }
  }
}

//==============================================================================
Var affine(Var weight, Var x, Var bias) { return x.tape()->affine(weight, x, bias); }
Var tanh(Var x) { return x.tape()->tanh(x); }
Var relu(Var x) { return x.tape()->relu(x); }
Var sigmoid(Var x) { return x.tape()->sigmoid(x); }
Var square(Var x) { return x.tape()->square(x); }
Var sum(Var x) { return x.tape()->sum(x); }
Var concat(Var a, Var b) { return a.tape()->concat(a, b); }
Var stop_gradient(Var x) { return x.tape()->stop_gradient(x); }

//==============================================================================
Var max_over_list(std::span<const Var> items)
{
  if (items.empty())
    throw ContractError("max_over_list: empty list");
  return items.front().tape()->max_over_list(items);
}

//==============================================================================
Var log_sum_exp(std::span<const Var> items, double temperature)
{
  if (items.empty())
    throw ContractError("log_sum_exp: empty list");
  return items.front().tape()->log_sum_exp(items, temperature);
}

Var operator+(Var a, Var b) { return a.tape()->add(a, b); }
Var operator-(Var a, Var b) { return a.tape()->sub(a, b); }
Var operator*(Var a, Var b) { return a.tape()->mul(a, b); }
Var operator*(Var a, double k) { return a.tape()->scale(a, k); }
Var operator*(double k, Var a) { return a.tape()->scale(a, k); }
Var operator+(Var a, double k) { return a.tape()->shift(a, k); }
Var operator-(Var a, double k) { return a.tape()->shift(a, -k); }

} // namespace autodiff
} // namespace mixsafe
