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
#include <utility>
#include <vector>

#include "model/layers.hpp"
#include "numerics/errors.hpp"
#include "numerics/ops.hpp"
#include "numerics/rng.hpp"

namespace ggpseg {

/// Activation applied to the GRU candidate state.
enum class CandidateActivation { kTanh, kSigmoid };

struct GgpConfig {
  std::size_t nodes = 5;       // |V|, one per slice in the sequence
  std::size_t edge_types = 2;  // |E|
  std::size_t steps = 3;       // T
  std::size_t message_kernel = 1;
  std::size_t gate_kernel = 3;
  CandidateActivation candidate = CandidateActivation::kTanh;

  void validate() const {
    if (nodes == 0 || edge_types == 0) {
      throw UsageError("graph propagator needs at least one node and edge type");
    }
    if (message_kernel % 2 == 0 || gate_kernel % 2 == 0) {
      throw UsageError("propagator kernels must have odd extent");
    }
  }
};

/// Update/reset/candidate convolutions of the recurrent feature update.
template <typename Real>
struct GateParams {
  Conv<Real> wz, uz, wr, ur, w, u;

  static GateParams make(std::size_t channels, std::size_t size, Rng& rng) {
    GateParams g;
    for (Conv<Real>* c : {&g.wz, &g.uz, &g.wr, &g.ur, &g.w, &g.u}) {
      *c = Conv<Real>::make(channels, channels, size, rng, 1.0);
    }
    return g;
  }

  void collect(ParameterList<Real>& out, const std::string& prefix) const {
    wz.collect(out, prefix + ".Wz");
    uz.collect(out, prefix + ".Uz");
    wr.collect(out, prefix + ".Wr");
    ur.collect(out, prefix + ".Ur");
    w.collect(out, prefix + ".W");
    u.collect(out, prefix + ".U");
  }
};

/// Gated graph propagation over per-slice feature maps.
///
/// Every ordered slice pair (u, v) and edge type e owns a message
/// convolution. Messages into slice v are mixed by row v of the adjacency
/// matrix A[|V|, |V||E|], where column |V|*e + u carries the message from u
/// along edge type e. A GRU-style gated update then folds the mixed message
/// into f_v. All slices update synchronously from the previous step's state.
template <typename Real>
class GatedGraphPropagator {
 public:
  GatedGraphPropagator() = default;

  GatedGraphPropagator(const GgpConfig& config, std::size_t channels, Rng& rng)
      : config_(config), channels_(channels) {
    config_.validate();
    const std::size_t n = config_.nodes;
    const std::size_t columns = n * config_.edge_types;
    const double uniform = 1.0 / static_cast<double>(columns);
    Tensor<Real> a(Shape{n, columns});
    for (auto& v : a.values()) v = static_cast<Real>(uniform + rng.uniform(-0.01, 0.01));
    adjacency_ = Var<Real>::parameter(std::move(a));
    kernels_.reserve(config_.edge_types * n * n);
    for (std::size_t e = 0; e < config_.edge_types; ++e)
      for (std::size_t u = 0; u < n; ++u)
        for (std::size_t v = 0; v < n; ++v)
          kernels_.push_back(Conv<Real>::make(channels, channels,
                                              config_.message_kernel, rng, 1.0));
    gates_ = GateParams<Real>::make(channels, config_.gate_kernel, rng);
  }

  const GgpConfig& config() const { return config_; }
  std::size_t channels() const { return channels_; }

  const Var<Real>& adjacency() const { return adjacency_; }

  /// Replaces A. A fixed adjacency is stored untracked so it never
  /// receives gradient or optimiser updates.
  void set_adjacency(Tensor<Real> a, bool learnable) {
    const Shape expected{config_.nodes, config_.nodes * config_.edge_types};
    if (a.shape() != expected) {
      throw DimensionError("adjacency must be " + to_string(expected) +
                           ", got " + to_string(a.shape()));
    }
    adjacency_ = Var<Real>(std::move(a), learnable);
  }

  bool adjacency_learnable() const { return adjacency_.requires_grad(); }

  Conv<Real>& kernel(std::size_t e, std::size_t u, std::size_t v) {
    return kernels_[kernel_index(e, u, v)];
  }
  const Conv<Real>& kernel(std::size_t e, std::size_t u, std::size_t v) const {
    return kernels_[kernel_index(e, u, v)];
  }

  GateParams<Real>& gates() { return gates_; }
  const GateParams<Real>& gates() const { return gates_; }

  /// Column of A that weights the message from slice u along edge type e.
  std::size_t message_column(std::size_t u, std::size_t e) const {
    return config_.nodes * e + u;
  }

  /// g = sigmoid(k^e_{uv} (x) f_u + b^e_{uv}).
  Var<Real> message(std::size_t u, std::size_t v, std::size_t e,
                    const Var<Real>& f_u) const {
    return ops::sigmoid(kernel(e, u, v)(f_u));
  }

  /// h_v = tau_inv(a_{v,*} [tau(g_0) ... tau(g_{|V||E|-1})]^T). `messages`
  /// is ordered by message column.
  Var<Real> aggregate(std::size_t v, const std::vector<Var<Real>>& messages) const {
    check_node(v);
    const std::size_t columns = config_.nodes * config_.edge_types;
    if (messages.size() != columns) {
      throw DimensionError("aggregate expects " + std::to_string(columns) +
                           " messages, got " + std::to_string(messages.size()));
    }
    const Shape& shape = messages.front().shape();
    std::vector<Var<Real>> rows;
    rows.reserve(columns);
    for (const auto& g : messages) {
      if (g.shape() != shape) {
        throw DimensionError("aggregate: message shapes differ");
      }
      rows.push_back(ops::transpose(ops::tau(g)));
    }
    Var<Real> stacked = ops::concat(rows);  // [|V||E|, c'h'w']
    Var<Real> weights = ops::slice(adjacency_, v, 1);
    return ops::tau_inv(ops::matmul(weights, stacked), shape);
  }

  /// Gated update of f_prev with aggregated message h.
  Var<Real> gru_update(const Var<Real>& f_prev, const Var<Real>& h) const {
    const auto& g = gates_;
    Var<Real> z = ops::sigmoid(ops::add(g.wz(h), g.uz(f_prev)));
    Var<Real> r = ops::sigmoid(ops::add(g.wr(h), g.ur(f_prev)));
    Var<Real> pre = ops::add(g.w(h), g.u(ops::mul(r, f_prev)));
    Var<Real> candidate = config_.candidate == CandidateActivation::kTanh
                              ? ops::tanh(pre)
                              : ops::sigmoid(pre);
    Var<Real> keep = ops::affine(z, Real{-1}, Real{1});
    return ops::add(ops::mul(keep, f_prev), ops::mul(z, candidate));
  }

  /// Messages into slice v computed from the given state, in column order.
  std::vector<Var<Real>> messages_into(std::size_t v,
                                       const std::vector<Var<Real>>& state) const {
    std::vector<Var<Real>> out;
    out.reserve(config_.nodes * config_.edge_types);
    for (std::size_t e = 0; e < config_.edge_types; ++e)
      for (std::size_t u = 0; u < config_.nodes; ++u)
        out.push_back(message(u, v, e, state[u]));
    return out;
  }

  /// One synchronous step: every h_v reads only the incoming state.
  std::vector<Var<Real>> step(const std::vector<Var<Real>>& state) const {
    std::vector<Var<Real>> next;
    next.reserve(state.size());
    for (std::size_t v = 0; v < state.size(); ++v) {
      Var<Real> h = aggregate(v, messages_into(v, state));
      next.push_back(gru_update(state[v], h));
    }
    return next;
  }

  std::vector<Var<Real>> propagate(const std::vector<Var<Real>>& features) const {
    if (features.size() != config_.nodes) {
      throw DimensionError("propagate expects " + std::to_string(config_.nodes) +
                           " feature maps, got " + std::to_string(features.size()));
    }
    std::vector<Var<Real>> state = features;
    for (std::size_t t = 0; t < config_.steps; ++t) state = step(state);
    return state;
  }

  /// Copy with slices relabelled: slice u of the original plays the role
  /// of slice perm[u]. Propagating permuted inputs through the copy yields
  /// the permuted outputs of the original.
  GatedGraphPropagator permuted(const std::vector<std::size_t>& perm) const {
    const std::size_t n = config_.nodes;
    if (perm.size() != n) throw UsageError("permutation size mismatch");
    GatedGraphPropagator out = *this;
    const Tensor<Real>& a = adjacency_.value();
    Tensor<Real> pa(a.shape());
    const std::size_t columns = n * config_.edge_types;
    for (std::size_t v = 0; v < n; ++v)
      for (std::size_t e = 0; e < config_.edge_types; ++e)
        for (std::size_t u = 0; u < n; ++u)
          pa[perm[v] * columns + n * e + perm[u]] = a[v * columns + n * e + u];
    out.adjacency_ = Var<Real>(std::move(pa), adjacency_.requires_grad());
    for (std::size_t e = 0; e < config_.edge_types; ++e)
      for (std::size_t u = 0; u < n; ++u)
        for (std::size_t v = 0; v < n; ++v)
          out.kernels_[kernel_index(e, perm[u], perm[v])] =
              kernels_[kernel_index(e, u, v)];
    return out;
  }

  void collect(ParameterList<Real>& out, const std::string& prefix) const {
    if (adjacency_.requires_grad()) out.push_back({prefix + ".A", adjacency_});
    for (std::size_t e = 0; e < config_.edge_types; ++e)
      for (std::size_t u = 0; u < config_.nodes; ++u)
        for (std::size_t v = 0; v < config_.nodes; ++v)
          kernel(e, u, v).collect(out, prefix + ".k." + std::to_string(e) + "." +
                                           std::to_string(u) + "." +
                                           std::to_string(v));
    gates_.collect(out, prefix + ".gate");
  }

 private:
  std::size_t kernel_index(std::size_t e, std::size_t u, std::size_t v) const {
    check_node(u);
    check_node(v);
    if (e >= config_.edge_types) {
      throw UsageError("edge type " + std::to_string(e) + " out of range");
    }
    return (e * config_.nodes + u) * config_.nodes + v;
  }

  void check_node(std::size_t v) const {
    if (v >= config_.nodes) {
      throw UsageError("slice index " + std::to_string(v) + " out of range");
    }
  }

  GgpConfig config_;
  std::size_t channels_ = 0;
  Var<Real> adjacency_;
  std::vector<Conv<Real>> kernels_;
  GateParams<Real> gates_;
};

}  // namespace ggpseg
