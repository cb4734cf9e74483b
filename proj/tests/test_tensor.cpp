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

#include <doctest.h>

#include "semix/rng.hpp"
#include "semix/tensor.hpp"

using namespace semix;
using namespace semix::tensor;

namespace {

MatrixXd random_matrix(Rng& rng, Index r, Index c, double scale = 1.0) {
  MatrixXd m(r, c);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = (2 * uniform01(rng) - 1) * scale;
  return m;
}

Vector<Accum> one_hot_target(Index c, Index k) {
  Vector<Accum> t = Vector<Accum>::Zero(c);
  t(k) = 1;
  return t;
}

// A three-layer network touching every op: gather, matmul, bias, tanh,
// add, scale, pool, softmax, cross-entropy.
Var three_layer(Tape<double>& tape, const NamedTensors<double>& p, const std::vector<TokenId>& ids,
                const Vector<Accum>& weights, const Vector<Accum>& target) {
  Var table = tape.parameter("table", p.at("table"));
  Var h = gather_rows(tape, table, std::span<const TokenId>(ids));
  for (int l = 0; l < 3; ++l) {
    Var w = tape.parameter("w" + std::to_string(l), p.at("w" + std::to_string(l)));
    Var b = tape.parameter("b" + std::to_string(l), p.at("b" + std::to_string(l)));
    h = add(tape, h, tanh(tape, add_bias(tape, matmul(tape, h, w), b)));
  }
  h = scale(tape, h, 0.7);
  Var pooled = mean_pool_masked(tape, h, weights);
  Var logits = add_bias(tape, matmul(tape, pooled, tape.parameter("head", p.at("head"))),
                        tape.parameter("head_b", p.at("head_b")));
  return cross_entropy(tape, softmax(tape, logits), target);
}

NamedTensors<double> three_layer_params(Rng& rng) {
  NamedTensors<double> p;
  p["table"] = random_matrix(rng, 7, 4, 0.8);
  for (int l = 0; l < 3; ++l) {
    p["w" + std::to_string(l)] = random_matrix(rng, 4, 4, 0.8);
    p["b" + std::to_string(l)] = random_matrix(rng, 1, 4, 0.3);
  }
  p["head"] = random_matrix(rng, 4, 3, 0.8);
  p["head_b"] = random_matrix(rng, 1, 3, 0.3);
  return p;
}

}  // namespace

TEST_CASE("forward op examples") {
  Tape<double> tape;
  Var z = tape.input(MatrixXd::Zero(1, 2));
  CHECK(tape.value(softmax(tape, z)).isApprox(MatrixXd::Constant(1, 2, 0.5)));
  CHECK(tape.value(tanh(tape, z))(0, 0) == 0.0);

  MatrixXd rows(2, 1);
  rows << 2, 4;
  Var r = tape.input(rows);
  Vector<Accum> w(2);
  w << 1, 0;
  CHECK(tape.value(mean_pool_masked(tape, r, w))(0, 0) == 2.0);
  w << 0.5, 0.5;
  CHECK(tape.value(mean_pool_masked(tape, r, w))(0, 0) == 3.0);
}

TEST_CASE("shape and mask errors") {
  Tape<double> tape;
  Var a = tape.input(MatrixXd::Ones(2, 3));
  Var b = tape.input(MatrixXd::Ones(2, 3));
  CHECK_THROWS_AS(matmul(tape, a, b), ShapeError);
  CHECK_THROWS_AS(add(tape, a, tape.input(MatrixXd::Ones(3, 2))), ShapeError);
  CHECK_THROWS_AS(mean_pool_masked(tape, a, Vector<Accum>::Zero(2)), DataError);
  CHECK_THROWS_AS(mean_pool_masked(tape, a, Vector<Accum>::Ones(3)), ShapeError);

  Tape<double> empty;
  CHECK_THROWS_AS(empty.backward(Var{0}), std::logic_error);
  Tape<double> fresh;
  Var x = fresh.input(MatrixXd::Ones(1, 1));
  CHECK_THROWS_AS(fresh.grad(x), std::logic_error);
}

TEST_CASE("softmax rows lie on the simplex") {
  Rng rng = make_rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    Tape<double> tape;
    Var s = softmax(tape, tape.input(random_matrix(rng, 3, 5, 40.0)));
    const MatrixXd& p = tape.value(s);
    CHECK(p.minCoeff() >= 0.0);
    for (Index r = 0; r < p.rows(); ++r) CHECK(std::abs(p.row(r).sum() - 1.0) <= 1e-6);
  }
}

TEST_CASE("backward of a linear map and of an unused parameter") {
  Rng rng = make_rng(4);
  const MatrixXd x = random_matrix(rng, 1, 3);
  const MatrixXd W = random_matrix(rng, 3, 2);
  const MatrixXd unused = random_matrix(rng, 2, 2);
  Tape<double> tape;
  Var xv = tape.input(x);
  Var wv = tape.parameter("W", W);
  tape.parameter("P", unused);
  Var y = matmul(tape, xv, wv);  // [1 x 2]
  Vector<Accum> w(1);
  w << 1;
  // sum over the two outputs: pool is identity over one row, then dot with ones.
  Var loss = matmul(tape, mean_pool_masked(tape, y, w), tape.input(MatrixXd::Ones(2, 1)));
  auto grads = tape.backward(loss);
  MatrixXd expected(3, 2);
  for (Index i = 0; i < 3; ++i) expected.row(i).setConstant(x(0, i));
  CHECK(grads.at("W").isApprox(expected));
  CHECK(grads.at("P").isZero(0.0));
}

TEST_CASE("three-layer network matches central differences") {
  Rng rng = make_rng(5);
  for (int trial = 0; trial < 5; ++trial) {
    auto params = three_layer_params(rng);
    std::vector<TokenId> ids{1, 4, 6, 2, 0};
    Vector<Accum> weights(5);
    weights << 1, 1, 0.6, 0.4, 0;
    const Vector<Accum> target = one_hot_target(3, trial % 3);
    LossBuilder<double> build = [&](Tape<double>& t, const NamedTensors<double>& p) {
      return three_layer(t, p, ids, weights, target);
    };
    GradCheckOptions o;
    o.seed = static_cast<std::uint64_t>(trial);
    const auto r = grad_check(build, params, o);
    CHECK(r.coordinates == 64);
    CHECK(r.max_relative_error <= 1e-3);
  }
}

TEST_CASE("every corrupted backward rule is caught") {
  Rng rng = make_rng(6);
  auto params = three_layer_params(rng);
  std::vector<TokenId> ids{1, 4, 6, 2};
  Vector<Accum> weights(4);
  weights << 1, 1, 0.5, 1;
  const Vector<Accum> target = one_hot_target(3, 1);
  LossBuilder<double> build = [&](Tape<double>& t, const NamedTensors<double>& p) {
    return three_layer(t, p, ids, weights, target);
  };
  for (Op op : {Op::GatherRows, Op::MatMul, Op::AddBias, Op::Add, Op::Scale, Op::Tanh, Op::Softmax,
                Op::MeanPoolMasked, Op::CrossEntropy}) {
    GradCheckOptions o;
    o.samples = 1000;  // every coordinate
    o.fault = op;
    CAPTURE(static_cast<int>(op));
    CHECK(grad_check(build, params, o).max_relative_error >= 1e-1);
  }
}

TEST_CASE("grad_check edge cases") {
  NamedTensors<double> params;
  params["c"] = MatrixXd::Constant(2, 2, 0.3);
  // Loss independent of the parameter: both gradients are zero.
  LossBuilder<double> constant = [](Tape<double>& t, const NamedTensors<double>& p) {
    t.parameter("c", p.at("c"));
    return t.input(MatrixXd::Constant(1, 1, 2.0));
  };
  CHECK(grad_check(constant, params).max_relative_error == 0.0);

  GradCheckOptions bad;
  bad.epsilon = 0.1;
  CHECK_THROWS_AS(grad_check(constant, params, bad), std::invalid_argument);

  LossBuilder<double> nan_loss = [](Tape<double>& t, const NamedTensors<double>& p) {
    t.parameter("c", p.at("c"));
    return t.input(MatrixXd::Constant(1, 1, std::nan("")));
  };
#ifdef NDEBUG
  CHECK_THROWS_AS(grad_check(nan_loss, params), std::domain_error);
#else
  CHECK_THROWS(grad_check(nan_loss, params));
#endif
}

TEST_CASE("gradients are linear in the loss") {
  Rng rng = make_rng(8);
  auto params = three_layer_params(rng);
  std::vector<TokenId> ids{3, 5, 1};
  const Vector<Accum> w = Vector<Accum>::Ones(3);
  auto grads_for = [&](double a, double b) {
    Tape<double> tape;
    Var l1 = three_layer(tape, params, ids, w, one_hot_target(3, 0));
    Var l2 = three_layer(tape, params, ids, w, one_hot_target(3, 2));
    return tape.backward(add(tape, scale(tape, l1, a), scale(tape, l2, b)));
  };
  const auto g1 = grads_for(1, 0);
  const auto g2 = grads_for(0, 1);
  const auto g = grads_for(0.3, -1.7);
  for (const auto& [name, m] : g) CHECK(m.isApprox(0.3 * g1.at(name) - 1.7 * g2.at(name), 1e-12));
}

TEST_CASE("zero-weight padding rows change nothing") {
  Rng rng = make_rng(9);
  auto params = three_layer_params(rng);
  std::vector<TokenId> ids{3, 5, 1};
  std::vector<TokenId> padded{3, 5, 1, 0, 0};
  Vector<Accum> w(3), wp(5);
  w << 1, 0.5, 1;
  wp << 1, 0.5, 1, 0, 0;
  Tape<double> a, b;
  Var la = three_layer(a, params, ids, w, one_hot_target(3, 1));
  Var lb = three_layer(b, params, padded, wp, one_hot_target(3, 1));
  CHECK(a.value(la)(0, 0) == b.value(lb)(0, 0));
  const auto ga = a.backward(la);
  const auto gb = b.backward(lb);
  for (const auto& [name, m] : ga) CHECK(m == gb.at(name));
}
