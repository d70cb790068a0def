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

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include "model/layers.hpp"
#include "numerics/autograd.hpp"
#include "numerics/ops.hpp"
#include "numerics/rng.hpp"

namespace ggpseg::testing {

using LossFn = std::function<Var<double>(const std::vector<Var<double>>&)>;

inline double relative_error(const std::vector<double>& a, const std::vector<double>& b) {
  double diff = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const double scale = std::max({std::sqrt(na), std::sqrt(nb), 1e-12});
  return std::sqrt(diff) / scale;
}

/// Norm-wise relative error between the reverse-mode gradient of `loss`
/// and central differences, over every element of every input.
inline double gradcheck(const LossFn& loss, const std::vector<Tensor<double>>& inputs,
                        double h = 1e-6) {
  std::vector<Var<double>> vars;
  for (const auto& t : inputs) vars.push_back(Var<double>::parameter(t));
  backward(loss(vars));
  std::vector<double> analytic, numeric;
  for (auto& v : vars) {
    Tensor<double> g = v.grad();
    analytic.insert(analytic.end(), g.values().begin(), g.values().end());
  }
  NoGradGuard guard;
  for (auto& v : vars) {
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double saved = v.value()[i];
      v.mutable_value()[i] = saved + h;
      const double up = loss(vars).value().item();
      v.mutable_value()[i] = saved - h;
      const double down = loss(vars).value().item();
      v.mutable_value()[i] = saved;
      numeric.push_back((up - down) / (2 * h));
    }
  }
  return relative_error(analytic, numeric);
}

/// Element-wise check of every entry of the given leaves.
inline double param_gradcheck(const std::function<Var<double>()>& loss,
                              const std::vector<Var<double>>& leaves, double h = 1e-6) {
  for (auto v : leaves) v.zero_grad();
  backward(loss());
  std::vector<double> analytic, numeric;
  for (const auto& v : leaves) {
    Tensor<double> g = v.grad();
    analytic.insert(analytic.end(), g.values().begin(), g.values().end());
  }
  NoGradGuard guard;
  for (auto v : leaves) {
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double saved = v.value()[i];
      v.mutable_value()[i] = saved + h;
      const double up = loss().value().item();
      v.mutable_value()[i] = saved - h;
      const double down = loss().value().item();
      v.mutable_value()[i] = saved;
      numeric.push_back((up - down) / (2 * h));
    }
  }
  return relative_error(analytic, numeric);
}

/// Directional variant for large parameter sets: compares <grad, d> with the
/// central difference along d for `directions` random unit directions.
inline double directional_gradcheck(const std::function<Var<double>()>& loss,
                                    const ParameterList<double>& params,
                                    std::size_t directions, Rng& rng, double h = 1e-6) {
  for (const auto& p : params) Var<double>(p.var).zero_grad();
  backward(loss());
  std::vector<Tensor<double>> grads;
  for (const auto& p : params) grads.push_back(p.var.grad());
  std::vector<double> analytic, numeric;
  NoGradGuard guard;
  for (std::size_t k = 0; k < directions; ++k) {
    std::vector<Tensor<double>> dir;
    double norm = 0;
    for (const auto& p : params) {
      dir.push_back(rng.uniform_tensor<double>(p.var.shape(), -1.0, 1.0));
      for (double x : dir.back().values()) norm += x * x;
    }
    norm = std::sqrt(norm);
    double dot = 0;
    for (std::size_t j = 0; j < params.size(); ++j)
      for (std::size_t i = 0; i < dir[j].size(); ++i) {
        dir[j][i] /= norm;
        dot += dir[j][i] * grads[j][i];
      }
    auto shift = [&](double s) {
      for (std::size_t j = 0; j < params.size(); ++j) {
        Var<double> v = params[j].var;
        for (std::size_t i = 0; i < dir[j].size(); ++i) v.mutable_value()[i] += s * dir[j][i];
      }
    };
    shift(h);
    const double up = loss().value().item();
    shift(-2 * h);
    const double down = loss().value().item();
    shift(h);
    analytic.push_back(dot);
    numeric.push_back((up - down) / (2 * h));
  }
  return relative_error(analytic, numeric);
}

/// sum(w * y) for a fixed random w, turning any op output into a scalar
/// with a non-degenerate gradient.
inline Var<double> probe_sum(const Var<double>& y, std::uint64_t seed) {
  Rng rng(seed);
  auto w = Var<double>::constant(rng.uniform_tensor<double>(y.shape(), -1.0, 1.0));
  return ops::reduce_sum(ops::mul(y, w));
}

}  // namespace ggpseg::testing
