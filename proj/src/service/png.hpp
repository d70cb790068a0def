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
#include <cstdint>
#include <string>
#include <vector>

namespace ggpseg {

/// Encodes an 8-bit grayscale image as a PNG byte string.
std::string encode_png_gray(const std::vector<std::uint8_t>& pixels, std::size_t height,
                            std::size_t width);

struct GrayImage {
  std::size_t height = 0, width = 0;
  std::vector<std::uint8_t> pixels;
};

/// Decodes an 8-bit grayscale PNG (other formats are rejected).
GrayImage decode_png_gray(const std::string& bytes);

/// Maps [low, high] linearly onto 0..255, clamping outside.
std::vector<std::uint8_t> window_level(const float* values, std::size_t count, float low,
                                       float high);

}  // namespace ggpseg
