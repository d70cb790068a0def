// Copyright 2026 The ggpseg Authors
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
#include <limits>

#include "checks.hpp"
#include "doctest.h"
#include "numerics/adam.hpp"
#include "numerics/errors.hpp"

using namespace ggpseg;
using namespace ggpseg::testing;

namespace {

// Direct nested-loop cross-correlation with zero padding.
Tensor<double> conv_oracle(const Tensor<double>& x, const Tensor<double>& k,
                           const Tensor<double>& b, std::size_t stride, std::size_t pad) {
  const std::size_t ci = x.dim(0), h = x.dim(1), w = x.dim(2);
  const std::size_t co = k.dim(0), kh = k.dim(2), kw = k.dim(3);
  const std::size_t oh = (h + 2 * pad - kh) / stride + 1;
  const std::size_t ow = (w + 2 * pad - kw) / stride + 1;
  Tensor<double> out(Shape{co, oh, ow});
  for (std::size_t o = 0; o < co; ++o)
    for (std::size_t y = 0; y < oh; ++y)
      for (std::size_t xx = 0; xx < ow; ++xx) {
        double acc = b[o];
        for (std::size_t c = 0; c < ci; ++c)
          for (std::size_t i = 0; i < kh; ++i)
            for (std::size_t j = 0; j < kw; ++j) {
              const long sy = static_cast<long>(y * stride + i) - static_cast<long>(pad);
              const long sx = static_cast<long>(xx * stride + j) - static_cast<long>(pad);
              if (sy < 0 || sx < 0 || sy >= static_cast<long>(h) || sx >= static_cast<long>(w))
                continue;
              acc += k[((o * ci + c) * kh + i) * kw + j] * x.at(c, sy, sx);
            }
        out.at(o, y, xx) = acc;
      }
  return out;
}

}  // namespace

TEST_SUITE("autograd") {

TEST_CASE("tensor rejects mismatched value count") {
  CHECK_THROWS_AS(Tensor<float>(Shape{2, 3}, std::vector<float>(5)), DimensionError);
  Tensor<float> t(Shape{2, 3}, 1.5f);
  CHECK(t.size() == 6);
  CHECK(t.reshaped(Shape{3, 2}).dim(0) == 3);
  CHECK_THROWS_AS(t.reshaped(Shape{4, 2}), DimensionError);
}

TEST_CASE("conv2d matches nested-loop oracle") {
  Rng rng(3);
  for (std::size_t stride : {1, 2})
    for (std::size_t pad : {0, 1, 2}) {
      auto x = rng.uniform_tensor<double>(Shape{3, 7, 6}, -1, 1);
      auto k = rng.uniform_tensor<double>(Shape{4, 3, 3, 3}, -1, 1);
      auto b = rng.uniform_tensor<double>(Shape{4}, -1, 1);
      auto got = ops::conv2d(Var<double>::constant(x), Var<double>::constant(k),
                             Var<double>::constant(b), stride, pad)
                     .value();
      auto want = conv_oracle(x, k, b, stride, pad);
      REQUIRE(got.shape() == want.shape());
      for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-12));
    }
}

TEST_CASE("conv2d float path agrees with double") {
  Rng rng(4);
  auto x = rng.uniform_tensor<double>(Shape{8, 16, 16}, -1, 1);
  auto k = rng.uniform_tensor<double>(Shape{8, 8, 3, 3}, -1, 1);
  auto b = rng.uniform_tensor<double>(Shape{8}, -1, 1);
  auto d = ops::conv2d(Var<double>::constant(x), Var<double>::constant(k),
                       Var<double>::constant(b), 1, 1).value();
  auto f = ops::conv2d(Var<float>::constant(x.cast<float>()),
                       Var<float>::constant(k.cast<float>()),
                       Var<float>::constant(b.cast<float>()), 1, 1).value();
  for (std::size_t i = 0; i < d.size(); ++i) CHECK(std::abs(f[i] - d[i]) < 1e-4);
}

TEST_CASE("conv2d rejects channel mismatch") {
  auto x = Var<double>::constant(Tensor<double>(Shape{2, 4, 4}));
  auto k = Var<double>::constant(Tensor<double>(Shape{1, 3, 3, 3}));
  CHECK_THROWS_AS(ops::conv2d(x, k, Var<double>(), 1, 1), DimensionError);
}

TEST_CASE("pooling and upsampling oracles") {
  Rng rng(5);
  auto x = rng.uniform_tensor<double>(Shape{2, 4, 6}, -1, 1);
  auto pooled = ops::avg_pool2(Var<double>::constant(x)).value();
  auto up = ops::upsample2x(Var<double>::constant(x)).value();
  for (std::size_t c = 0; c < 2; ++c)
    for (std::size_t y = 0; y < 2; ++y)
      for (std::size_t i = 0; i < 3; ++i) {
        const double mean = (x.at(c, 2 * y, 2 * i) + x.at(c, 2 * y + 1, 2 * i) +
                             x.at(c, 2 * y, 2 * i + 1) + x.at(c, 2 * y + 1, 2 * i + 1)) / 4;
        CHECK(pooled.at(c, y, i) == doctest::Approx(mean));
      }
  for (std::size_t c = 0; c < 2; ++c)
    for (std::size_t y = 0; y < 8; ++y)
      for (std::size_t i = 0; i < 12; ++i) CHECK(up.at(c, y, i) == x.at(c, y / 2, i / 2));
  CHECK_THROWS_AS(ops::avg_pool2(Var<double>::constant(Tensor<double>(Shape{1, 3, 4}))),
                  DimensionError);
}

TEST_CASE("softmax sums to one per pixel") {
  Rng rng(6);
  auto p = ops::softmax_channels(
               Var<double>::constant(rng.uniform_tensor<double>(Shape{3, 4, 4}, -30, 30)))
               .value();
  for (std::size_t i = 0; i < 16; ++i) {
    CHECK(p[i] + p[16 + i] + p[32 + i] == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("tau and tau_inv are inverse flattenings") {
  Rng rng(7);
  auto x = Var<double>::constant(rng.uniform_tensor<double>(Shape{2, 3, 4}, -1, 1));
  auto flat = ops::tau(x);
  CHECK(flat.shape() == Shape{24, 1});
  auto back = ops::tau_inv(ops::transpose(flat), x.shape());
  CHECK(back.value() == x.value());
}

TEST_CASE("every primitive passes finite differences") {
  for (const auto& check : gradient_checks()) {
    for (std::uint64_t trial = 0; trial < 2; ++trial) {
      INFO(check.name << " trial " << trial);
      CHECK(check.run(100 + trial) < 1e-4);
    }
  }
}

TEST_CASE("gradients accumulate across uses of a leaf") {
  auto x = Var<double>::parameter(Tensor<double>(Shape{3}, 2.0));
  backward(ops::reduce_sum(ops::add(ops::mul(x, x), x)));
  const Tensor<double> g = x.grad();
  for (double v : g.values()) CHECK(v == doctest::Approx(5.0));
}

TEST_CASE("backward needs a tracked scalar") {
  auto x = Var<double>::parameter(Tensor<double>(Shape{2}, 1.0));
  CHECK_THROWS_AS(backward(ops::scale(x, 2.0)), UsageError);
  auto c = Var<double>::constant(Tensor<double>::scalar(1.0));
  CHECK_THROWS_AS(backward(c), UsageError);
}

TEST_CASE("no-grad guard records nothing") {
  auto x = Var<double>::parameter(Tensor<double>(Shape{2}, 1.0));
  Var<double> y;
  {
    NoGradGuard guard;
    y = ops::reduce_sum(ops::mul(x, x));
  }
  CHECK_FALSE(y.requires_grad());
  CHECK(grad_enabled());
}

TEST_CASE("non-finite values raise numeric errors") {
  auto a = Var<double>::constant(Tensor<double>(Shape{1}, 1.0));
  auto zero = Var<double>::constant(Tensor<double>(Shape{1}, 0.0));
  CHECK_THROWS_AS(ops::div(a, zero), NumericError);
  auto big = Var<double>::constant(Tensor<double>(Shape{1}, std::numeric_limits<double>::max()));
  CHECK_THROWS_AS(ops::mul(big, big), NumericError);
}

TEST_CASE("leaf-only mutation") {
  auto x = Var<double>::parameter(Tensor<double>(Shape{2}, 1.0));
  auto y = ops::scale(x, 2.0);
  CHECK_THROWS_AS(y.mutable_value(), UsageError);
}

TEST_CASE("first adam step moves by the learning rate against the gradient") {
  auto x = Var<double>::parameter(Tensor<double>(Shape{3}, std::vector<double>{1, -2, 3}));
  backward(ops::reduce_sum(ops::mul(x, x)));
  std::vector<Var<double>> params{x};
  AdamState<double> state;
  adam_step(params, state, AdamConfig{0.1});
  CHECK(x.value()[0] == doctest::Approx(0.9));
  CHECK(x.value()[1] == doctest::Approx(-1.9));
  CHECK(x.value()[2] == doctest::Approx(2.9));
}

}  // TEST_SUITE
