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

#include <cstddef>
#include <string>

#include "numerics/autograd.hpp"
#include "numerics/errors.hpp"
#include "numerics/ops.hpp"

namespace ggpseg {

inline constexpr double kDiceSmoothing = 1.0;
inline constexpr double kNllFloor = 1e-7;

/// 1 - (2 sum(p*g) + eps) / (sum(p) + sum(g) + eps) for one slice.
template <typename Real>
Var<Real> dice_loss(const Var<Real>& probability, const Tensor<float>& truth,
                    double smoothing = kDiceSmoothing) {
  if (probability.shape() != truth.shape()) {
    throw DimensionError("dice_loss: prediction " + to_string(probability.shape()) +
                         " vs truth " + to_string(truth.shape()));
  }
  auto g = Var<Real>::constant(truth.template cast<Real>());
  const Real eps = static_cast<Real>(smoothing);
  Var<Real> overlap = ops::affine(ops::reduce_sum(ops::mul(probability, g)), Real{2}, eps);
  Real truth_total = 0;
  for (float v : truth.values()) truth_total += static_cast<Real>(v);
  Var<Real> denom = ops::affine(ops::reduce_sum(probability), Real{1}, truth_total + eps);
  return ops::affine(ops::div(overlap, denom), Real{-1}, Real{1});
}

/// Mean over pixels of -log p(target class), p clamped at 1e-7.
/// `target` holds class indices per pixel.
template <typename Real>
Var<Real> nll_loss(const Var<Real>& probabilities, const Tensor<float>& target) {
  if (probabilities.value().rank() != 3 ||
      probabilities.shape()[1] != target.dim(0) ||
      probabilities.shape()[2] != target.dim(1) || target.rank() != 2) {
    throw DimensionError("nll_loss: probabilities " + to_string(probabilities.shape()) +
                         " vs target " + to_string(target.shape()));
  }
  const std::size_t classes = probabilities.shape()[0];
  Var<Real> picked;
  for (std::size_t c = 0; c < classes; ++c) {
    Tensor<Real> onehot(target.shape());
    for (std::size_t i = 0; i < target.size(); ++i) {
      onehot[i] = static_cast<std::size_t>(target[i]) == c ? Real{1} : Real{0};
    }
    Var<Real> term = ops::mul(ops::select(probabilities, c),
                              Var<Real>::constant(std::move(onehot)));
    picked = picked.defined() ? ops::add(picked, term) : term;
  }
  Var<Real> logs = ops::log_clamped(picked, static_cast<Real>(kNllFloor));
  return ops::scale(ops::reduce_sum(logs),
                    Real{-1} / static_cast<Real>(target.size()));
}

/// Mean over pixels of -log softmax(logits)[target class]. Unclamped, so
/// confidently wrong pixels keep their gradient.
template <typename Real>
Var<Real> nll_loss_logits(const Var<Real>& logits, const Tensor<float>& target) {
  if (logits.value().rank() != 3 || target.rank() != 2 || logits.shape()[1] != target.dim(0) ||
      logits.shape()[2] != target.dim(1)) {
    throw DimensionError("nll_loss_logits: logits " + to_string(logits.shape()) + " vs target " +
                         to_string(target.shape()));
  }
  const std::size_t classes = logits.shape()[0];
  Tensor<Real> onehot(logits.shape());
  for (std::size_t i = 0; i < target.size(); ++i) {
    const auto c = static_cast<std::size_t>(target[i]);
    if (c >= classes) throw DimensionError("nll_loss_logits: class index out of range");
    onehot[c * target.size() + i] = Real{1};
  }
  Var<Real> picked =
      ops::mul(ops::log_softmax_channels(logits), Var<Real>::constant(std::move(onehot)));
  return ops::scale(ops::reduce_sum(picked), Real{-1} / static_cast<Real>(target.size()));
}

}  // namespace ggpseg
