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
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "model/sequence.hpp"
#include "numerics/tensor.hpp"

namespace ggpseg {

/// Geometry and appearance of one synthetic two-channel volume.
///
/// Channel 0 is a pseudo-CT (body ellipse, smooth tissue gradient, noise).
/// Channel 1 is a pseudo-PET with a hotspot filling an ellipsoidal GTV.
/// CTV and PTV are the GTV grown by spherical dilation. Decoy uptake
/// blobs confined to single slices mimic physiological uptake; they look
/// like tumour cross-sections in 2-D and are only distinguishable by their
/// absence in neighbouring slices.
struct PhantomSpec {
  std::size_t depth = 24;
  std::size_t height = 64;
  std::size_t width = 64;
  std::array<double, 3> tumor_center{12.0, 32.0, 32.0};  // z, y, x
  std::array<double, 3> tumor_axes{3.5, 7.0, 8.0};       // z, y, x
  double ctv_margin = 2.0;
  double ptv_margin = 2.0;
  double noise_sigma = 0.25;
  double hotspot_contrast = 1.0;  // in image units; >= 3 * noise_sigma
  double decoy_probability = 0.5;
  std::uint64_t seed = 1;

  void validate() const;
};

nlohmann::json to_json(const PhantomSpec& spec);
PhantomSpec phantom_spec_from_json(const nlohmann::json& j);

/// Draws tumour geometry for corpus member `index` from the corpus seed.
PhantomSpec random_phantom_spec(std::size_t index, std::uint64_t corpus_seed);

struct Volume {
  std::string name;
  PhantomSpec spec;
  Tensor<float> images;                // [depth, 2, h, w]
  std::array<Tensor<float>, 3> masks;  // per target [depth, h, w]; may be empty

  std::size_t depth() const { return images.dim(0); }
  std::size_t height() const { return images.dim(2); }
  std::size_t width() const { return images.dim(3); }
  bool has_masks() const { return !masks[0].empty(); }

  std::size_t mask_count(Target t, std::size_t slice) const;
  /// [h, w] mask plane of one slice.
  Tensor<float> mask_plane(Target t, std::size_t slice) const;
  /// [2, h, w] image of one slice.
  Tensor<float> image_plane(std::size_t slice) const;
};

Volume generate_phantom(const PhantomSpec& spec, std::string name = "phantom");

/// Default desk-scale corpus: `count` phantoms named phantom_000...
std::vector<Volume> generate_corpus(std::size_t count, std::uint64_t corpus_seed);

/// Volume slice indices feeding each position of a window centred on
/// `center`, replicating the edge slices past the volume boundary.
std::vector<std::size_t> window_indices(std::size_t center, std::size_t n,
                                        std::size_t depth);

SliceSequence make_sequence(const Volume& vol, std::size_t center, std::size_t n);

/// Applies the same in-plane symmetry to every image and mask plane. Bit 0
/// of `code` flips x, bit 1 flips y, bit 2 transposes (square planes only).
SliceSequence dihedral_transform(const SliceSequence& s, unsigned code);

/// One sequence per slice whose GTV is nonempty.
std::vector<SliceSequence> slice_sequences(const Volume& vol, std::size_t n);

/// Patient-level fold assignment; fold sizes differ by at most one.
std::vector<int> split_folds(std::size_t volume_count, std::size_t k,
                             std::uint64_t seed);

// Volume files: <name>.json header, <name>.images.bin (f32le, [depth,2,h,w]),
// <name>.mask.<target>.bin (u8, [depth,h,w]).
inline constexpr int kVolumeFormatVersion = 1;

void save_volume(const Volume& vol, const std::filesystem::path& directory);
Volume load_volume(const std::filesystem::path& header_path);
/// Loads every volume header in `directory`, ordered by name.
std::vector<Volume> load_corpus(const std::filesystem::path& directory);

nlohmann::json volume_header(const Volume& vol);
/// Builds a volume from a header plus raw blobs (as stored on disk).
Volume volume_from_parts(const nlohmann::json& header, const std::string& images,
                         const std::array<std::string, 3>& masks);

}  // namespace ggpseg
