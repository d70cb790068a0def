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

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "numerics/autograd.hpp"
#include "numerics/ops.hpp"
#include "numerics/rng.hpp"

namespace ggpseg {

template <typename Real>
struct NamedParameter {
  std::string name;
  Var<Real> var;
};

template <typename Real>
using ParameterList = std::vector<NamedParameter<Real>>;

template <typename Real>
std::vector<Var<Real>> vars_of(const ParameterList<Real>& list) {
  std::vector<Var<Real>> out;
  out.reserve(list.size());
  for (const auto& p : list) out.push_back(p.var);
  return out;
}

template <typename Real>
std::size_t parameter_count(const ParameterList<Real>& list) {
  std::size_t total = 0;
  for (const auto& p : list) total += p.var.size();
  return total;
}

/// Square-kernel convolution with bias and "same" padding.
template <typename Real>
struct Conv {
  Var<Real> kernel;
  Var<Real> bias;
  std::size_t padding = 0;

  /// Uniform init with bound gain * sqrt(3 / fan_in); zero bias.
  static Conv make(std::size_t in_channels, std::size_t out_channels,
                   std::size_t size, Rng& rng, double gain) {
    const double fan_in = static_cast<double>(in_channels * size * size);
    const double bound = gain * std::sqrt(3.0 / fan_in);
    Conv conv;
    conv.kernel = Var<Real>::parameter(rng.uniform_tensor<Real>(
        Shape{out_channels, in_channels, size, size}, -bound, bound));
    conv.bias = Var<Real>::parameter(Tensor<Real>(Shape{out_channels}));
    conv.padding = size / 2;
    return conv;
  }

  Var<Real> operator()(const Var<Real>& x) const {
    return ops::conv2d(x, kernel, bias, 1, padding);
  }

  std::size_t out_channels() const { return kernel.shape()[0]; }

  void collect(ParameterList<Real>& out, const std::string& prefix) const {
    out.push_back({prefix + ".kernel", kernel});
    out.push_back({prefix + ".bias", bias});
  }
};

inline constexpr double kReluGain = 1.4142135623730951;

}  // namespace ggpseg
