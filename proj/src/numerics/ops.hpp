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
#include <vector>

#include "numerics/autograd.hpp"

// Differentiable primitives. All shapes are explicit; the only broadcast is
// scalar-times-tensor through scale/affine.
namespace ggpseg::ops {

/// Cross-correlation of x[c_in,h,w] with k[c_out,c_in,kh,kw]. `bias` may be
/// undefined. Output extent is (h + 2*padding - kh)/stride + 1.
template <typename Real>
Var<Real> conv2d(const Var<Real>& x, const Var<Real>& kernel,
                 const Var<Real>& bias, std::size_t stride = 1,
                 std::size_t padding = 0);

/// Nearest-neighbour 2x upsampling of x[c,h,w].
template <typename Real>
Var<Real> upsample2x(const Var<Real>& x);

/// 2x2 average pooling with stride 2; h and w must be even.
template <typename Real>
Var<Real> avg_pool2(const Var<Real>& x);

template <typename Real>
Var<Real> sigmoid(const Var<Real>& x);
template <typename Real>
Var<Real> tanh(const Var<Real>& x);
template <typename Real>
Var<Real> relu(const Var<Real>& x);

/// Softmax across axis 0 of x[c,h,w], independently at every pixel.
template <typename Real>
Var<Real> softmax_channels(const Var<Real>& x);

/// log(softmax_channels(x)), computed without forming the probabilities.
template <typename Real>
Var<Real> log_softmax_channels(const Var<Real>& x);

/// log(max(x, floor)); the gradient is zero where the clamp is active.
template <typename Real>
Var<Real> log_clamped(const Var<Real>& x, Real floor);

/// x[c,h,w] -> [(c*h*w), 1].
template <typename Real>
Var<Real> tau(const Var<Real>& x);

/// x[1,(c*h*w)] -> `shape` (rank 3).
template <typename Real>
Var<Real> tau_inv(const Var<Real>& x, const Shape& shape);

template <typename Real>
Var<Real> reshape(const Var<Real>& x, const Shape& shape);

/// Transpose of a rank-2 tensor.
template <typename Real>
Var<Real> transpose(const Var<Real>& x);

template <typename Real>
Var<Real> add(const Var<Real>& a, const Var<Real>& b);
template <typename Real>
Var<Real> sub(const Var<Real>& a, const Var<Real>& b);
/// Hadamard product.
template <typename Real>
Var<Real> mul(const Var<Real>& a, const Var<Real>& b);
template <typename Real>
Var<Real> div(const Var<Real>& a, const Var<Real>& b);

/// scale * x + shift, elementwise.
template <typename Real>
Var<Real> affine(const Var<Real>& x, Real scale, Real shift);

template <typename Real>
Var<Real> scale(const Var<Real>& x, Real factor) {
  return affine(x, factor, Real{0});
}

/// a[m,k] * b[k,n] -> [m,n].
template <typename Real>
Var<Real> matmul(const Var<Real>& a, const Var<Real>& b);

/// Sum of all elements as a rank-0 scalar.
template <typename Real>
Var<Real> reduce_sum(const Var<Real>& x);

/// Concatenation along axis 0; the trailing extents must agree.
template <typename Real>
Var<Real> concat(const std::vector<Var<Real>>& parts);

template <typename Real>
Var<Real> concat_channels(const std::vector<Var<Real>>& parts) {
  return concat(parts);
}

/// Rows [begin, begin+count) along axis 0, rank preserved.
template <typename Real>
Var<Real> slice(const Var<Real>& x, std::size_t begin, std::size_t count);

/// Index `i` along axis 0 with that axis dropped.
template <typename Real>
Var<Real> select(const Var<Real>& x, std::size_t i);

}  // namespace ggpseg::ops
