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
#include <vector>

#include "ggp/propagator.hpp"

namespace ggpseg::testing {

inline double max_abs_diff(const Tensor<double>& a, const Tensor<double>& b) {
  double out = 0;
  for (std::size_t i = 0; i < a.size(); ++i) out = std::max(out, std::abs(a[i] - b[i]));
  return out;
}

inline std::vector<Var<double>> random_features(Rng& rng, std::size_t n, std::size_t c,
                                                std::size_t size) {
  std::vector<Var<double>> out;
  for (std::size_t u = 0; u < n; ++u)
    out.push_back(Var<double>::constant(rng.uniform_tensor<double>(Shape{c, size, size}, -1, 1)));
  return out;
}

inline GatedGraphPropagator<double> semantic_propagator(Rng& rng, std::size_t nodes = 5,
                                                        std::size_t edge_types = 2) {
  GgpConfig cfg;
  cfg.nodes = nodes;
  cfg.edge_types = edge_types;
  cfg.steps = 3;
  return GatedGraphPropagator<double>(cfg, 3, rng);
}

/// Update gate forced shut (z = 0): one step must return f_prev bit-exactly.
inline double gate_closed_deviation(std::uint64_t seed) {
  Rng rng(seed);
  auto ggp = semantic_propagator(rng);
  auto& g = ggp.gates();
  g.wz.kernel.mutable_value().fill(0.0);
  g.uz.kernel.mutable_value().fill(0.0);
  g.wz.bias.mutable_value().fill(-1e4);
  auto f = random_features(rng, 5, 3, 4);
  auto next = ggp.step(f);
  double worst = 0;
  for (std::size_t v = 0; v < f.size(); ++v)
    worst = std::max(worst, max_abs_diff(next[v].value(), f[v].value()));
  return worst;
}

/// A one-hot row of A selects exactly the message in that column.
inline double one_hot_deviation(std::uint64_t seed) {
  Rng rng(seed);
  auto ggp = semantic_propagator(rng);
  const std::size_t columns = 10;
  auto f = random_features(rng, 5, 3, 4);
  double worst = 0;
  for (std::size_t v = 0; v < 5; ++v) {
    const std::size_t pick = rng.index(columns);
    Tensor<double> a(Shape{5, columns});
    a[v * columns + pick] = 1.0;
    ggp.set_adjacency(a, false);
    auto messages = ggp.messages_into(v, f);
    auto h = ggp.aggregate(v, messages);
    worst = std::max(worst, max_abs_diff(h.value(), messages[pick].value()));
  }
  return worst;
}

/// Scaling row v of A scales h_v by the same factor.
inline double row_linearity_deviation(std::uint64_t seed) {
  Rng rng(seed);
  auto ggp = semantic_propagator(rng);
  auto f = random_features(rng, 5, 3, 4);
  double worst = 0;
  for (std::size_t v = 0; v < 5; ++v) {
    const double factor = rng.uniform(-3.0, 3.0);
    auto h = ggp.aggregate(v, ggp.messages_into(v, f)).value();
    Tensor<double> a = ggp.adjacency().value();
    for (std::size_t c = 0; c < 10; ++c) a[v * 10 + c] *= factor;
    auto scaled_ggp = ggp;
    scaled_ggp.set_adjacency(a, true);
    auto hs = scaled_ggp.aggregate(v, scaled_ggp.messages_into(v, f)).value();
    for (std::size_t i = 0; i < h.size(); ++i)
      worst = std::max(worst, std::abs(hs[i] - factor * h[i]));
  }
  return worst;
}

}  // namespace ggpseg::testing
