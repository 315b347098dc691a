// tests/test_autodiff.cc

// Copyright 2026 castkit authors
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

#include <cmath>
#include <vector>

#include "core/ops.h"
#include "core/tensor.h"
#include "doctest.h"
#include "testutil.h"

using namespace cast;
using casttest::CheckGradients;
using casttest::RandomLeaf;
using casttest::RandomLeafAwayFromZero;

TEST_CASE("forward examples") {
  auto z = Tensor::Scalar(0.0);
  CHECK(ad::sigmoid(z)->value[0] == doctest::Approx(0.5));

  auto eye = Tensor::Leaf({2, 2}, {1, 0, 0, 1});
  auto m = Tensor::Leaf({2, 2}, {3.5, -1.25, 0.75, 2.0});
  auto prod = ad::matmul(eye, m);
  for (int i = 0; i < 4; ++i) CHECK(prod->value[i] == m->value[i]);

  auto two_zeros = Tensor::Leaf({2}, {0.0, 0.0});
  CHECK(ad::logsumexp(two_zeros)->value[0] == doctest::Approx(std::log(2.0)).epsilon(1e-9));
}

TEST_CASE("backward basics") {
  auto x = Tensor::Leaf({2, 3}, {1, 2, 3, 4, 5, 6}, true);
  auto root = ad::sum(x);
  Backward(root);
  for (double g : x->grad) CHECK(g == doctest::Approx(1.0));

  auto z = Tensor::Scalar(0.0, true);
  auto s = ad::sigmoid(z);
  Backward(s);
  CHECK(z->grad[0] == doctest::Approx(0.25));

  // repeated backward accumulates additively
  Backward(s);
  CHECK(z->grad[0] == doctest::Approx(0.5));

  // non-scalar root rejected
  CHECK_THROWS_AS(Backward(x), Error);
}

TEST_CASE("diamond graph sums both paths") {
  auto x = Tensor::Scalar(0.7, true);
  auto a = ad::scale(x, 2.0);
  auto b = ad::scale(x, 3.0);
  auto root = ad::sum(ad::add(a, b));
  Backward(root);
  CHECK(x->grad[0] == doctest::Approx(5.0));
}

TEST_CASE("random small graph matches finite differences") {
  Rng rng(11);
  auto x = RandomLeaf({2, 3}, &rng);
  auto y = RandomLeaf({3, 2}, &rng);
  auto build = [&]() {
    auto h = ad::matmul(x, y);        // [2x2]
    auto s = ad::sigmoid(h);
    auto t = ad::add(s, ad::transpose(h));
    return ad::mean(t);
  };
  auto res = CheckGradients(build, {x, y});
  CHECK(res.max_rel_err <= 1e-4);
}

TEST_CASE("gradient suite over every op kind, three shapes each") {
  Rng rng(1234);
  // (rows, cols) triples specialized per op inside the loop
  std::vector<std::pair<int, int>> shapes = {{1, 4}, {3, 5}, {6, 2}};

  for (auto [r, c] : shapes) {
    CAPTURE(r);
    CAPTURE(c);

    SUBCASE("") {}  // keep one scope per shape

    {  // matmul
      auto a = RandomLeaf({r, c}, &rng);
      auto b = RandomLeaf({c, r + 1}, &rng);
      auto w = RandomLeaf({r, r + 1}, &rng, -1.0, 1.0, false);
      auto res = CheckGradients(
          [&] { return ad::sum(ad::mul(ad::matmul(a, b), w)); }, {a, b});
      CHECK_MESSAGE(res.max_rel_err <= 1e-4, "matmul ", res.where);
    }
    {  // add with row broadcast, mul with same shape, scale
      auto a = RandomLeaf({r, c}, &rng);
      auto b = RandomLeaf({c}, &rng);
      auto m = RandomLeaf({r, c}, &rng);
      auto res = CheckGradients(
          [&] { return ad::mean(ad::scale(ad::mul(ad::add(a, b), m), 1.7)); },
          {a, b, m});
      CHECK_MESSAGE(res.max_rel_err <= 1e-4, "add/mul/scale ", res.where);
    }
    {  // sigmoid, swish, softplus, exp chain
      auto x = RandomLeaf({r, c}, &rng);
      auto res = CheckGradients(
          [&] {
            return ad::mean(ad::exp(ad::scale(
                ad::softplus(ad::swish(ad::sigmoid(x))), 0.3)));
          },
          {x});
      CHECK_MESSAGE(res.max_rel_err <= 1e-4, "sigmoid/swish/softplus/exp ", res.where);
    }
    {  // relu away from the kink
      auto x = RandomLeafAwayFromZero({r, c}, &rng);
      auto res = CheckGradients([&] { return ad::mean(ad::relu(x)); }, {x});
      CHECK_MESSAGE(res.max_rel_err <= 1e-4, "relu ", res.where);
    }
    {  // prelu with slope grads
      auto z = RandomLeafAwayFromZero({r, c}, &rng);
      auto alpha = RandomLeaf({c}, &rng, 0.5, 1.5);
      auto beta = RandomLeaf({c}, &rng, -0.5, 0.5);
      auto res = CheckGradients(
          [&] { return ad::mean(ad::prelu(z, alpha, beta)); }, {z, alpha, beta});
      CHECK_MESSAGE(res.max_rel_err <= 1e-4, "prelu ", res.where);
    }
    {  // softmax / log-softmax / logsumexp (full and axis)
      auto x = RandomLeaf({r, c}, &rng, -2.0, 2.0);
      auto res = CheckGradients(
          [&] {
            auto s = ad::softmax(x);
            auto ls = ad::log_softmax(x);
            auto l0 = ad::logsumexp_axis(x, 0);
            auto l1 = ad::logsumexp_axis(x, 1);
            return ad::add(ad::add(ad::mean(ad::mul(s, s)), ad::mean(ls)),
                           ad::add(ad::sum(l0), ad::add(ad::sum(l1), ad::logsumexp(x))));
          },
          {x});
      CHECK_MESSAGE(res.max_rel_err <= 1e-4, "softmax family ", res.where);
    }
    {  // layernorm
      auto x = RandomLeaf({r, c}, &rng, -2.0, 2.0);
      auto g = RandomLeaf({c}, &rng, 0.5, 1.5);
      auto b = RandomLeaf({c}, &rng);
      auto res = CheckGradients(
          [&] { return ad::mean(ad::mul(ad::layernorm(x, g, b), x)); }, {x, g, b});
      CHECK_MESSAGE(res.max_rel_err <= 1e-4, "layernorm ", res.where);
    }
    {  // concat both axes, slice, transpose
      auto a = RandomLeaf({r, c}, &rng);
      auto b = RandomLeaf({r, c}, &rng);
      auto res = CheckGradients(
          [&] {
            auto cat0 = ad::concat({a, b}, 0);
            auto cat1 = ad::concat({a, ad::transpose(ad::transpose(b))}, 1);
            auto sl = ad::slice(cat0, 0, r, 0, c);
            return ad::add(ad::mean(cat1), ad::mean(ad::mul(sl, sl)));
          },
          {a, b});
      CHECK_MESSAGE(res.max_rel_err <= 1e-4, "concat/slice/transpose ", res.where);
    }
    {  // embedding lookup
      auto table = RandomLeaf({r + 3, c}, &rng);
      std::vector<int> ids = {0, r + 2, 1, 1};
      auto res = CheckGradients(
          [&] {
            auto e = ad::embedding_lookup(table, ids);
            return ad::mean(ad::mul(e, e));
          },
          {table});
      CHECK_MESSAGE(res.max_rel_err <= 1e-4, "embedding-lookup ", res.where);
    }
    {  // depthwise + pointwise convs, glu
      auto x = RandomLeaf({r + 2, 2 * c}, &rng);
      auto wd = RandomLeaf({3, 2 * c}, &rng);
      auto wp = RandomLeaf({2 * c, 2 * c}, &rng);
      auto res = CheckGradients(
          [&] {
            auto h = ad::conv1d_depthwise(x, wd);
            auto p = ad::conv1d_pointwise(h, wp);
            return ad::mean(ad::glu(p));
          },
          {x, wd, wp});
      CHECK_MESSAGE(res.max_rel_err <= 1e-4, "convs/glu ", res.where);
    }
    {  // strided conv
      auto x = RandomLeaf({2 * r + 1, c}, &rng);
      auto w = RandomLeaf({3 * c, 4}, &rng);
      auto res = CheckGradients(
          [&] { return ad::mean(ad::conv1d_strided(x, w, 3, 2)); }, {x, w});
      CHECK_MESSAGE(res.max_rel_err <= 1e-4, "1d-strided-conv ", res.where);
    }
    {  // dropout mask apply
      auto x = RandomLeaf({r, c}, &rng);
      std::vector<double> mv(static_cast<size_t>(r) * c);
      for (auto& v : mv) v = rng.Uniform() < 0.3 ? 0.0 : 1.0 / 0.7;
      auto mask = Tensor::Leaf({r, c}, mv);
      auto res = CheckGradients(
          [&] { return ad::mean(ad::dropout_apply(x, mask)); }, {x});
      CHECK_MESSAGE(res.max_rel_err <= 1e-4, "dropout-mask-apply ", res.where);
    }
    {  // batchnorm eval + train
      int rows = std::max(r, 2);
      auto x = RandomLeaf({rows, c}, &rng, -2.0, 2.0);
      auto gm = RandomLeaf({c}, &rng, 0.5, 1.5);
      auto bt = RandomLeaf({c}, &rng);
      std::vector<double> mean(c, 0.1), var(c, 0.9);
      auto res = CheckGradients(
          [&] {
            auto e = ad::batchnorm_eval(x, gm, bt, mean, var);
            auto t = ad::batchnorm_train(x, gm, bt, 1e-5, nullptr, nullptr);
            return ad::add(ad::mean(ad::mul(e, e)), ad::mean(ad::mul(t, x)));
          },
          {x, gm, bt});
      CHECK_MESSAGE(res.max_rel_err <= 1e-4, "batchnorm ", res.where);
    }
    {  // log on positive inputs, sum/mean
      auto x = RandomLeaf({r, c}, &rng, 0.2, 2.0);
      auto res = CheckGradients(
          [&] { return ad::add(ad::mean(ad::log(x)), ad::sum(x)); }, {x});
      CHECK_MESSAGE(res.max_rel_err <= 1e-4, "log/sum/mean ", res.where);
    }
  }
}

TEST_CASE("softmax rows sum to one and log-softmax is its log") {
  Rng rng(99);
  auto x = RandomLeaf({7, 11}, &rng, -5.0, 5.0, false);
  auto s = ad::softmax(x);
  auto ls = ad::log_softmax(x);
  for (int i = 0; i < 7; ++i) {
    double rowsum = 0.0;
    for (int j = 0; j < 11; ++j) rowsum += s->at(i, j);
    CHECK(std::fabs(rowsum - 1.0) <= 1e-12);
    for (int j = 0; j < 11; ++j) {
      CHECK(std::fabs(ls->at(i, j) - std::log(s->at(i, j))) <= 1e-10);
    }
  }
}

TEST_CASE("forward_op dispatch and error paths") {
  auto a = Tensor::Leaf({2, 2}, {1, 2, 3, 4});
  auto b = Tensor::Leaf({2, 2}, {1, 0, 0, 1});
  auto out = ad::forward_op("matmul", {a, b});
  CHECK(out->value[0] == doctest::Approx(1.0));
  CHECK_THROWS_AS(ad::forward_op("no-such-op", {a}), Error);

  // shape mismatch names the op and both shapes
  auto bad = Tensor::Leaf({3, 2}, std::vector<double>(6, 0.0));
  try {
    ad::forward_op("matmul", {a, bad});
    CHECK(false);
  } catch (const ShapeError& e) {
    std::string msg = e.what();
    CHECK(msg.find("matmul") != std::string::npos);
    CHECK(msg.find("[2 x 2]") != std::string::npos);
    CHECK(msg.find("[3 x 2]") != std::string::npos);
  }
}

TEST_CASE("no-grad mode records nothing") {
  auto x = Tensor::Scalar(1.0, true);
  TensorPtr y;
  {
    NoGradGuard ng;
    y = ad::sigmoid(x);
  }
  CHECK_FALSE(y->requires_grad);
  CHECK(y->parents.empty());
}

TEST_CASE("rng determinism and normal moments") {
  Rng a(42), b(42);
  for (int i = 0; i < 1000; ++i) {
    CHECK(a.Normal() == b.Normal());
    CHECK(a.Uniform() == b.Uniform());
  }

  // sample_standard_normal with fresh copies gives identical buffers
  Rng r1(7), r2(7);
  auto s1 = ad::sample_standard_normal(&r1, {4, 4});
  auto s2 = ad::sample_standard_normal(&r2, {4, 4});
  for (size_t i = 0; i < s1->size(); ++i) CHECK(s1->value[i] == s2->value[i]);
  CHECK_FALSE(s1->requires_grad);

  const int n = 1000000;
  Rng rng(2024);
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < n; ++i) {
    double v = rng.Normal();
    sum += v;
    sumsq += v * v;
  }
  double mean = sum / n;
  double var = sumsq / n - mean * mean;
  CHECK(std::fabs(mean) <= 0.01);
  CHECK(std::fabs(var - 1.0) <= 0.01);
}

TEST_CASE("fork produces independent but reproducible substreams") {
  Rng base(5);
  Rng f1 = base.Fork(1);
  Rng f2 = base.Fork(2);
  Rng f1_again = Rng(5).Fork(1);
  CHECK(f1.Normal() == f1_again.Normal());
  CHECK(f1.Normal() != f2.Normal());
}
