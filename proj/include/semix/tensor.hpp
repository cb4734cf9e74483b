// Copyright (c) 2026 The semix Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Reverse-mode differentiation over small dense matrices.
//
// A Tape records operations in the order they are built. Every operation
// has a hand-written backward rule; backward() walks the tape in exact
// reverse order and accumulates gradients additively. All reductions
// (matrix products, pooling, softmax normalisation, log-likelihood) run
// sequentially in double precision, so appending zero-weight rows to an
// input never changes a result bit.

#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "semix/core.hpp"
#include "semix/rng.hpp"

namespace semix::tensor {

enum class Op : std::uint8_t {
  Input,
  Parameter,
  GatherRows,
  MatMul,
  AddBias,
  Add,
  Scale,
  Tanh,
  Softmax,
  MeanPoolMasked,
  CrossEntropy,
};

/// Probabilities are clamped to this floor before taking logs.
inline constexpr double kProbFloor = 1e-12;

struct Var {
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
  std::size_t id = npos;
  bool valid() const { return id != npos; }
};

template <typename Scalar>
using NamedTensors = std::map<std::string, Matrix<Scalar>>;

template <typename Scalar>
class Tape {
 public:
  using Mat = Matrix<Scalar>;

  struct Node {
    Op op = Op::Input;
    std::size_t lhs = Var::npos;
    std::size_t rhs = Var::npos;
    Mat value;
    const Mat* external = nullptr;  // parameters are referenced, not copied
    std::string name;
    std::vector<TokenId> indices;  // GatherRows
    Vector<Accum> aux;             // pooling weights or cross-entropy target
    Accum factor = 0;              // Scale
  };

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  Tape(Tape&&) = default;
  Tape& operator=(Tape&&) = default;

  /// A leaf whose gradient can be read back with grad().
  Var input(Mat value) {
    Node n;
    n.op = Op::Input;
    n.value = std::move(value);
    return record(std::move(n));
  }

  /// Registers a named parameter. The matrix must outlive the tape.
  /// Registering the same name twice returns the original handle.
  Var parameter(const std::string& name, const Mat& value) {
    if (auto it = param_ids_.find(name); it != param_ids_.end()) return Var{it->second};
    Node n;
    n.op = Op::Parameter;
    n.external = &value;
    n.name = name;
    Var v = record(std::move(n));
    param_ids_.emplace(name, v.id);
    return v;
  }

  Var record(Node node) {
    check_finite(node);
    nodes_.push_back(std::move(node));
    return Var{nodes_.size() - 1};
  }

  const Mat& value(Var v) const {
    const Node& n = node(v);
    return n.external != nullptr ? *n.external : n.value;
  }

  const Node& node(Var v) const {
    if (!v.valid() || v.id >= nodes_.size()) throw std::out_of_range("tape: unknown variable");
    return nodes_[v.id];
  }

  /// Gradient of the last backward() target with respect to v.
  const Mat& grad(Var v) const {
    if (grads_.size() != nodes_.size()) throw std::logic_error("tape: backward has not been run");
    node(v);
    if (grads_[v.id].size() == 0) {
      zero_cache_ = Mat::Zero(value(v).rows(), value(v).cols());
      return zero_cache_;
    }
    return grads_[v.id];
  }

  std::size_t size() const { return nodes_.size(); }
  bool empty() const { return nodes_.empty(); }

  /// Fault injection for negative controls: flips the sign of one backward rule.
  void inject_fault(std::optional<Op> op) { fault_ = op; }

  NamedTensors<Scalar> backward(Var loss, const Mat& loss_grad);
  NamedTensors<Scalar> backward(Var loss) { return backward(loss, Mat::Ones(1, 1)); }

 private:
  void accumulate(std::size_t id, const Mat& g) {
    Mat& slot = grads_[id];
    if (slot.size() == 0) {
      slot = g;
    } else {
      slot += g;
    }
  }

  Mat& grad_slot(std::size_t id) {
    Mat& slot = grads_[id];
    if (slot.size() == 0) {
      const Mat& v = value(Var{id});
      slot = Mat::Zero(v.rows(), v.cols());
    }
    return slot;
  }

  void check_finite([[maybe_unused]] const Node& n) const {
#ifndef NDEBUG
    const Mat& v = n.external != nullptr ? *n.external : n.value;
    if (!v.allFinite()) throw std::domain_error("tape: non-finite value recorded");
#endif
  }

  Scalar fault_sign(Op op) const { return fault_ == op ? Scalar(-1) : Scalar(1); }

  std::vector<Node> nodes_;
  std::vector<Mat> grads_;
  std::map<std::string, std::size_t> param_ids_;
  std::optional<Op> fault_;
  mutable Mat zero_cache_;
};

namespace detail {

inline void require(bool ok, const char* what) {
  if (!ok) throw ShapeError(what);
}

// C = A * B with sequential double accumulation over the inner dimension.
template <typename Scalar>
Matrix<Scalar> product(const Matrix<Scalar>& a, const Matrix<Scalar>& b) {
  Matrix<Scalar> c(a.rows(), b.cols());
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < b.cols(); ++j) {
      Accum s = 0;
      for (Index k = 0; k < a.cols(); ++k) s += Accum(a(i, k)) * Accum(b(k, j));
      c(i, j) = Scalar(s);
    }
  }
  return c;
}

// A * B^T
template <typename Scalar>
Matrix<Scalar> product_nt(const Matrix<Scalar>& a, const Matrix<Scalar>& b) {
  Matrix<Scalar> c(a.rows(), b.rows());
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < b.rows(); ++j) {
      Accum s = 0;
      for (Index k = 0; k < a.cols(); ++k) s += Accum(a(i, k)) * Accum(b(j, k));
      c(i, j) = Scalar(s);
    }
  }
  return c;
}

// A^T * B, summing over rows in order.
template <typename Scalar>
Matrix<Scalar> product_tn(const Matrix<Scalar>& a, const Matrix<Scalar>& b) {
  Matrix<Accum> acc = Matrix<Accum>::Zero(a.cols(), b.cols());
  for (Index t = 0; t < a.rows(); ++t)
    for (Index i = 0; i < a.cols(); ++i)
      for (Index j = 0; j < b.cols(); ++j) acc(i, j) += Accum(a(t, i)) * Accum(b(t, j));
  return acc.template cast<Scalar>();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Forward operations.

/// Rows of table selected by ids (embedding lookup).
template <typename Scalar>
Var gather_rows(Tape<Scalar>& tape, Var table, std::span<const TokenId> ids) {
  const auto& t = tape.value(table);
  typename Tape<Scalar>::Node n;
  n.op = Op::GatherRows;
  n.lhs = table.id;
  n.indices.assign(ids.begin(), ids.end());
  n.value.resize(static_cast<Index>(ids.size()), t.cols());
  for (Index r = 0; r < n.value.rows(); ++r) {
    const TokenId id = ids[static_cast<std::size_t>(r)];
    detail::require(id >= 0 && id < t.rows(), "gather_rows: id out of range");
    n.value.row(r) = t.row(id);
  }
  return tape.record(std::move(n));
}

template <typename Scalar>
Var matmul(Tape<Scalar>& tape, Var a, Var b) {
  const auto& av = tape.value(a);
  const auto& bv = tape.value(b);
  detail::require(av.cols() == bv.rows(), "matmul: inner dimensions differ");
  typename Tape<Scalar>::Node n;
  n.op = Op::MatMul;
  n.lhs = a.id;
  n.rhs = b.id;
  n.value = detail::product(av, bv);
  return tape.record(std::move(n));
}

/// a [n x m] plus bias [1 x m] on every row.
template <typename Scalar>
Var add_bias(Tape<Scalar>& tape, Var a, Var bias) {
  const auto& av = tape.value(a);
  const auto& bv = tape.value(bias);
  detail::require(bv.rows() == 1 && bv.cols() == av.cols(), "add_bias: bias shape mismatch");
  typename Tape<Scalar>::Node n;
  n.op = Op::AddBias;
  n.lhs = a.id;
  n.rhs = bias.id;
  n.value = av.rowwise() + bv.row(0);
  return tape.record(std::move(n));
}

template <typename Scalar>
Var add(Tape<Scalar>& tape, Var a, Var b) {
  const auto& av = tape.value(a);
  const auto& bv = tape.value(b);
  detail::require(av.rows() == bv.rows() && av.cols() == bv.cols(), "add: shape mismatch");
  typename Tape<Scalar>::Node n;
  n.op = Op::Add;
  n.lhs = a.id;
  n.rhs = b.id;
  n.value = av + bv;
  return tape.record(std::move(n));
}

template <typename Scalar>
Var scale(Tape<Scalar>& tape, Var a, double factor) {
  typename Tape<Scalar>::Node n;
  n.op = Op::Scale;
  n.lhs = a.id;
  n.factor = factor;
  n.value = (tape.value(a).template cast<Accum>() * factor).template cast<Scalar>();
  return tape.record(std::move(n));
}

/// lambda * a + (1 - lambda) * b
template <typename Scalar>
Var interpolate(Tape<Scalar>& tape, Var a, Var b, double lambda) {
  return add(tape, scale(tape, a, lambda), scale(tape, b, 1.0 - lambda));
}

template <typename Scalar>
Var tanh(Tape<Scalar>& tape, Var a) {
  typename Tape<Scalar>::Node n;
  n.op = Op::Tanh;
  n.lhs = a.id;
  n.value = tape.value(a).unaryExpr([](Scalar x) { return Scalar(std::tanh(Accum(x))); });
  return tape.record(std::move(n));
}

/// Row-wise softmax.
template <typename Scalar>
Var softmax(Tape<Scalar>& tape, Var a) {
  const auto& av = tape.value(a);
  typename Tape<Scalar>::Node n;
  n.op = Op::Softmax;
  n.lhs = a.id;
  n.value.resize(av.rows(), av.cols());
  for (Index r = 0; r < av.rows(); ++r) {
    const Accum top = Accum(av.row(r).maxCoeff());
    Accum total = 0;
    for (Index c = 0; c < av.cols(); ++c) total += std::exp(Accum(av(r, c)) - top);
    for (Index c = 0; c < av.cols(); ++c) n.value(r, c) = Scalar(std::exp(Accum(av(r, c)) - top) / total);
  }
  return tape.record(std::move(n));
}

/// Weighted mean over rows: sum_t w_t a_t / sum_t w_t. Weights may be fractional.
template <typename Scalar>
Var mean_pool_masked(Tape<Scalar>& tape, Var a, const Vector<Accum>& weights) {
  const auto& av = tape.value(a);
  detail::require(weights.size() == av.rows(), "mean_pool_masked: weight count differs from rows");
  Accum total = 0;
  for (Index t = 0; t < weights.size(); ++t) total += weights(t);
  if (!(total > 0)) throw DataError("mean_pool_masked: mask weights sum to zero");
  typename Tape<Scalar>::Node n;
  n.op = Op::MeanPoolMasked;
  n.lhs = a.id;
  n.aux = weights;
  n.factor = total;
  n.value.resize(1, av.cols());
  for (Index e = 0; e < av.cols(); ++e) {
    Accum s = 0;
    for (Index t = 0; t < av.rows(); ++t) s += weights(t) * Accum(av(t, e));
    n.value(0, e) = Scalar(s / total);
  }
  return tape.record(std::move(n));
}

/// -sum_c target_c * log(max(p_c, floor)) for a [1 x C] probability row.
template <typename Scalar>
Var cross_entropy(Tape<Scalar>& tape, Var probs, const Vector<Accum>& target) {
  const auto& pv = tape.value(probs);
  detail::require(pv.rows() == 1 && pv.cols() == target.size(), "cross_entropy: size mismatch");
  typename Tape<Scalar>::Node n;
  n.op = Op::CrossEntropy;
  n.lhs = probs.id;
  n.aux = target;
  Accum s = 0;
  for (Index c = 0; c < target.size(); ++c) s -= target(c) * std::log(std::max(Accum(pv(0, c)), kProbFloor));
  n.value = Matrix<Scalar>::Constant(1, 1, Scalar(s));
  return tape.record(std::move(n));
}

// ---------------------------------------------------------------------------
// Backward pass.

template <typename Scalar>
NamedTensors<Scalar> Tape<Scalar>::backward(Var loss, const Mat& loss_grad) {
  if (nodes_.empty() || !loss.valid() || loss.id >= nodes_.size())
    throw std::logic_error("backward: no recorded forward pass");
  const Mat& lv = value(loss);
  if (lv.rows() != 1 || lv.cols() != 1) throw ShapeError("backward: loss must be a scalar");
  if (loss_grad.rows() != 1 || loss_grad.cols() != 1) throw ShapeError("backward: loss_grad must be 1x1");

  grads_.assign(nodes_.size(), Mat());
  grads_[loss.id] = loss_grad;

  for (std::size_t k = loss.id + 1; k-- > 0;) {
    if (grads_[k].size() == 0) continue;
    const Node& n = nodes_[k];
    const Mat& g = grads_[k];
    switch (n.op) {
      case Op::Input:
      case Op::Parameter:
        break;
      case Op::GatherRows: {
        Mat& table = grad_slot(n.lhs);
        const Scalar sign = fault_sign(Op::GatherRows);
        for (std::size_t r = 0; r < n.indices.size(); ++r)
          table.row(n.indices[r]) += sign * g.row(static_cast<Index>(r));
        break;
      }
      case Op::MatMul: {
        const Mat& a = value(Var{n.lhs});
        const Mat& b = value(Var{n.rhs});
        const Scalar sign = fault_sign(Op::MatMul);
        accumulate(n.lhs, sign * detail::product_nt(g, b));
        accumulate(n.rhs, sign * detail::product_tn(a, g));
        break;
      }
      case Op::AddBias: {
        const Scalar sign = fault_sign(Op::AddBias);
        accumulate(n.lhs, sign * g);
        Mat db(1, g.cols());
        for (Index c = 0; c < g.cols(); ++c) {
          Accum s = 0;
          for (Index r = 0; r < g.rows(); ++r) s += Accum(g(r, c));
          db(0, c) = sign * Scalar(s);
        }
        accumulate(n.rhs, db);
        break;
      }
      case Op::Add: {
        const Scalar sign = fault_sign(Op::Add);
        accumulate(n.lhs, sign * g);
        accumulate(n.rhs, sign * g);
        break;
      }
      case Op::Scale:
        accumulate(n.lhs, (g.template cast<Accum>() * (fault_sign(Op::Scale) * n.factor)).template cast<Scalar>());
        break;
      case Op::Tanh: {
        const Scalar sign = fault_sign(Op::Tanh);
        Mat da = g.binaryExpr(n.value, [sign](Scalar dy, Scalar y) {
          return Scalar(sign * Accum(dy) * (1.0 - Accum(y) * Accum(y)));
        });
        accumulate(n.lhs, da);
        break;
      }
      case Op::Softmax: {
        Mat da(g.rows(), g.cols());
        for (Index r = 0; r < g.rows(); ++r) {
          Accum dot = 0;
          for (Index c = 0; c < g.cols(); ++c) dot += Accum(g(r, c)) * Accum(n.value(r, c));
          for (Index c = 0; c < g.cols(); ++c)
            da(r, c) = Scalar(fault_sign(Op::Softmax) * Accum(n.value(r, c)) * (Accum(g(r, c)) - dot));
        }
        accumulate(n.lhs, da);
        break;
      }
      case Op::MeanPoolMasked: {
        const Mat& a = value(Var{n.lhs});
        Mat da(a.rows(), a.cols());
        for (Index t = 0; t < a.rows(); ++t) {
          const Accum w = fault_sign(Op::MeanPoolMasked) * n.aux(t) / n.factor;
          for (Index e = 0; e < a.cols(); ++e) da(t, e) = Scalar(w * Accum(g(0, e)));
        }
        accumulate(n.lhs, da);
        break;
      }
      case Op::CrossEntropy: {
        const Mat& p = value(Var{n.lhs});
        Mat dp(1, p.cols());
        const Accum upstream = fault_sign(Op::CrossEntropy) * Accum(g(0, 0));
        for (Index c = 0; c < p.cols(); ++c) {
          const Accum pc = Accum(p(0, c));
          dp(0, c) = pc > kProbFloor ? Scalar(-upstream * n.aux(c) / pc) : Scalar(0);
        }
        accumulate(n.lhs, dp);
        break;
      }
    }
  }

  NamedTensors<Scalar> out;
  for (const auto& [name, id] : param_ids_) {
    if (grads_[id].size() == 0) {
      const Mat& v = value(Var{id});
      out.emplace(name, Mat::Zero(v.rows(), v.cols()));
    } else {
      out.emplace(name, grads_[id]);
    }
  }
  return out;
}

/// Free-function spelling of Tape::backward.
template <typename Scalar>
NamedTensors<Scalar> backward(Tape<Scalar>& tape, Var loss, const Matrix<Scalar>& loss_grad) {
  return tape.backward(loss, loss_grad);
}

// ---------------------------------------------------------------------------
// Finite-difference verification.

template <typename Scalar>
using LossBuilder = std::function<Var(Tape<Scalar>&, const NamedTensors<Scalar>&)>;

struct GradCheckOptions {
  double epsilon = 1e-3;
  std::size_t samples = 64;
  std::uint64_t seed = 0;
  std::optional<Op> fault;  // corrupt one backward rule (negative control)
};

struct GradCheckResult {
  double max_relative_error = 0;
  std::size_t coordinates = 0;
  std::string worst_param;
  Index worst_index = -1;
};

/// Compares analytic gradients against central differences
/// (L(theta + eps) - L(theta - eps)) / 2 eps on sampled coordinates. The
/// relative error of one coordinate is |a - n| / max(|a|, |n|, 1e-8).
template <typename Scalar>
GradCheckResult grad_check(const LossBuilder<Scalar>& build, NamedTensors<Scalar> params,
                           const GradCheckOptions& options = {}) {
  if (!(options.epsilon >= 1e-5 && options.epsilon <= 1e-2))
    throw std::invalid_argument("grad_check: epsilon must lie in [1e-5, 1e-2]");

  auto evaluate = [&](bool with_grad, NamedTensors<Scalar>* grads) {
    Tape<Scalar> tape;
    tape.inject_fault(options.fault);
    Var loss = build(tape, params);
    const Accum value = Accum(tape.value(loss)(0, 0));
    if (!std::isfinite(value)) throw std::domain_error("grad_check: non-finite loss");
    if (with_grad) *grads = tape.backward(loss);
    return value;
  };

  NamedTensors<Scalar> analytic;
  evaluate(true, &analytic);

  struct Coord {
    const std::string* name;
    Index index;
  };
  std::vector<Coord> coords;
  for (auto& [name, m] : params)
    for (Index i = 0; i < m.size(); ++i) coords.push_back({&name, i});
  if (coords.size() > options.samples) {
    Rng rng = make_rng(options.seed, {0x67726164ULL});
    for (std::size_t i = 0; i < options.samples; ++i) {
      const std::size_t j = i + uniform_index(rng, coords.size() - i);
      std::swap(coords[i], coords[j]);
    }
    coords.resize(options.samples);
  }

  GradCheckResult result;
  result.coordinates = coords.size();
  for (const Coord& c : coords) {
    Scalar& slot = params.at(*c.name).data()[c.index];
    const Scalar original = slot;
    const Scalar plus = Scalar(Accum(original) + options.epsilon);
    const Scalar minus = Scalar(Accum(original) - options.epsilon);
    slot = plus;
    const Accum up = evaluate(false, nullptr);
    slot = minus;
    const Accum down = evaluate(false, nullptr);
    slot = original;
    // Divide by the realised step; it differs from 2 eps when Scalar is float.
    const Accum numeric = (up - down) / (Accum(plus) - Accum(minus));
    const Accum a = Accum(analytic.at(*c.name).data()[c.index]);
    const Accum denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
    const Accum err = std::abs(a - numeric) / denom;
    if (err >= result.max_relative_error) {
      result.max_relative_error = err;
      result.worst_param = *c.name;
      result.worst_index = c.index;
    }
  }
  return result;
}

}  // namespace semix::tensor
