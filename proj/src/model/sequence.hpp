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

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "numerics/tensor.hpp"

namespace ggpseg {

/// Nested radiotherapy targets, GTV inside CTV inside PTV.
enum class Target { kGtv = 0, kCtv = 1, kPtv = 2 };

inline constexpr std::array<Target, 3> kAllTargets = {Target::kGtv, Target::kCtv,
                                                      Target::kPtv};

inline std::string_view target_name(Target t) {
  switch (t) {
    case Target::kGtv: return "gtv";
    case Target::kCtv: return "ctv";
    case Target::kPtv: return "ptv";
  }
  return "gtv";
}

inline std::optional<Target> parse_target(std::string_view name) {
  for (Target t : kAllTargets) {
    if (target_name(t) == name) return t;
  }
  return std::nullopt;
}

/// n consecutive two-channel slices; the model predicts the middle one.
struct SliceSequence {
  Tensor<float> images;                // [n, 2, h, w]
  std::array<Tensor<float>, 3> masks;  // per target, [n, h, w] of {0,1}
  std::vector<std::size_t> source_slices;  // volume slice behind each position
  std::string volume;
  std::size_t center = 0;  // volume slice index of the middle position

  std::size_t length() const { return images.dim(0); }
  std::size_t middle_index() const { return length() / 2; }
  std::size_t height() const { return images.dim(2); }
  std::size_t width() const { return images.dim(3); }

  /// Image of position k as [2, h, w].
  template <typename Real>
  Tensor<Real> slice_image(std::size_t k) const {
    const std::size_t plane = 2 * height() * width();
    std::vector<Real> values(images.data() + k * plane,
                             images.data() + (k + 1) * plane);
    return Tensor<Real>(Shape{2, height(), width()}, std::move(values));
  }

  /// Mask of position k for `target` as [h, w].
  Tensor<float> slice_mask(Target target, std::size_t k) const {
    const Tensor<float>& m = masks[static_cast<std::size_t>(target)];
    const std::size_t plane = height() * width();
    std::vector<float> values(m.data() + k * plane, m.data() + (k + 1) * plane);
    return Tensor<float>(Shape{height(), width()}, std::move(values));
  }
};

}  // namespace ggpseg
