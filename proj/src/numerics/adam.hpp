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
#include <utility>
#include <vector>

#include "numerics/autograd.hpp"

namespace ggpseg {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Per-parameter first/second moment estimates plus the shared step count.
template <typename Real>
struct AdamState {
  std::vector<Tensor<Real>> first_moment;
  std::vector<Tensor<Real>> second_moment;
  std::size_t step = 0;
};

/// One bias-corrected Adam update. Parameters without a gradient are
/// treated as having a zero gradient.
template <typename Real>
void adam_step(std::vector<Var<Real>>& params, AdamState<Real>& state,
               const AdamConfig& config) {
  if (state.first_moment.size() != params.size()) {
    state.first_moment.clear();
    state.second_moment.clear();
    for (const auto& p : params) {
      state.first_moment.emplace_back(p.shape());
      state.second_moment.emplace_back(p.shape());
    }
    state.step = 0;
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(config.beta1, t);
  const double correction2 = 1.0 - std::pow(config.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Var<Real>& param = params[i];
    if (!param.has_grad()) continue;
    const Tensor<Real>& grad = param.node()->grad;
    Tensor<Real>& m = state.first_moment[i];
    Tensor<Real>& v = state.second_moment[i];
    Tensor<Real>& value = param.mutable_value();
    for (std::size_t j = 0; j < value.size(); ++j) {
      const double g = grad[j];
      m[j] = static_cast<Real>(config.beta1 * m[j] + (1.0 - config.beta1) * g);
      v[j] = static_cast<Real>(config.beta2 * v[j] + (1.0 - config.beta2) * g * g);
      const double m_hat = m[j] / correction1;
      const double v_hat = v[j] / correction2;
      value[j] -= static_cast<Real>(config.learning_rate * m_hat /
                                    (std::sqrt(v_hat) + config.epsilon));
    }
  }
}

template <typename Real>
class Adam {
 public:
  Adam(std::vector<Var<Real>> params, AdamConfig config)
      : params_(std::move(params)), config_(config) {}

  void step() { adam_step(params_, state_, config_); }

  void zero_grad() {
    for (auto& p : params_) p.zero_grad();
  }

  const AdamConfig& config() const { return config_; }
  std::size_t steps_taken() const { return state_.step; }

 private:
  std::vector<Var<Real>> params_;
  AdamState<Real> state_;
  AdamConfig config_;
};

}  // namespace ggpseg
