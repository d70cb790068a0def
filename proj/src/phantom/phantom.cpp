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

#include "phantom/phantom.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "numerics/errors.hpp"
#include "numerics/rng.hpp"

namespace ggpseg {
namespace {

constexpr double kPi = 3.141592653589793;
// Tumour centres and decoy centres lie in a disc of this radius around the
// image centre.
constexpr double kPlacementRadius = 15.0;

static_assert(std::endian::native == std::endian::little,
              "volume blobs are written as little-endian floats");

struct Plane {
  std::size_t h, w;
  std::size_t index(std::size_t y, std::size_t x) const { return y * w + x; }
};

/// Spherical dilation of a binary volume by `radius` voxels.
std::vector<std::uint8_t> dilate(const std::vector<std::uint8_t>& in, std::size_t d,
                                 std::size_t h, std::size_t w, double radius) {
  const int r = static_cast<int>(std::floor(radius));
  std::vector<std::array<int, 3>> offsets;
  for (int dz = -r; dz <= r; ++dz)
    for (int dy = -r; dy <= r; ++dy)
      for (int dx = -r; dx <= r; ++dx)
        if (dz * dz + dy * dy + dx * dx <= radius * radius) offsets.push_back({dz, dy, dx});
  std::vector<std::uint8_t> out(in.size(), 0);
  for (std::size_t z = 0; z < d; ++z)
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) {
        if (!in[(z * h + y) * w + x]) continue;
        for (const auto& o : offsets) {
          const long zz = static_cast<long>(z) + o[0];
          const long yy = static_cast<long>(y) + o[1];
          const long xx = static_cast<long>(x) + o[2];
          if (zz < 0 || yy < 0 || xx < 0 || zz >= static_cast<long>(d) ||
              yy >= static_cast<long>(h) || xx >= static_cast<long>(w))
            continue;
          out[(static_cast<std::size_t>(zz) * h + static_cast<std::size_t>(yy)) * w +
              static_cast<std::size_t>(xx)] = 1;
        }
      }
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const std::filesystem::path& path, const void* data, std::size_t bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(bytes));
  if (!out) throw IoError("short write to " + path.string());
}

}  // namespace

void PhantomSpec::validate() const {
  if (depth == 0 || height == 0 || width == 0) {
    throw UsageError("phantom extents must be positive");
  }
  if (ctv_margin <= 0.0 || ptv_margin <= 0.0) {
    throw UsageError("target margins must be positive");
  }
  if (hotspot_contrast < 3.0 * noise_sigma) {
    throw UsageError("hotspot contrast must be at least 3 noise sigmas");
  }
  const std::array<double, 3> extent{static_cast<double>(depth),
                                     static_cast<double>(height),
                                     static_cast<double>(width)};
  for (std::size_t a = 0; a < 3; ++a) {
    if (tumor_axes[a] <= 0.0 || tumor_center[a] - tumor_axes[a] < 0.0 ||
        tumor_center[a] + tumor_axes[a] > extent[a] - 1.0) {
      throw UsageError("tumour ellipsoid must lie inside the volume");
    }
  }
}

nlohmann::json to_json(const PhantomSpec& s) {
  return {{"depth", s.depth},
          {"height", s.height},
          {"width", s.width},
          {"tumorCenter", s.tumor_center},
          {"tumorAxes", s.tumor_axes},
          {"ctvMargin", s.ctv_margin},
          {"ptvMargin", s.ptv_margin},
          {"noiseSigma", s.noise_sigma},
          {"hotspotContrast", s.hotspot_contrast},
          {"decoyProbability", s.decoy_probability},
          {"seed", s.seed}};
}

PhantomSpec phantom_spec_from_json(const nlohmann::json& j) {
  try {
    PhantomSpec s;
    s.depth = j.at("depth").get<std::size_t>();
    s.height = j.at("height").get<std::size_t>();
    s.width = j.at("width").get<std::size_t>();
    s.tumor_center = j.at("tumorCenter").get<std::array<double, 3>>();
    s.tumor_axes = j.at("tumorAxes").get<std::array<double, 3>>();
    s.ctv_margin = j.at("ctvMargin").get<double>();
    s.ptv_margin = j.at("ptvMargin").get<double>();
    s.noise_sigma = j.at("noiseSigma").get<double>();
    s.hotspot_contrast = j.at("hotspotContrast").get<double>();
    s.decoy_probability = j.value("decoyProbability", 0.0);
    s.seed = j.at("seed").get<std::uint64_t>();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("phantom spec: ") + e.what());
  }
}

PhantomSpec random_phantom_spec(std::size_t index, std::uint64_t corpus_seed) {
  Rng rng(corpus_seed * 1000003ULL + index);
  PhantomSpec s;
  s.seed = rng.next();
  s.tumor_axes = {rng.uniform(2.5, 4.5), rng.uniform(5.0, 9.0), rng.uniform(5.0, 9.0)};
  const double dz = static_cast<double>(s.depth);
  s.tumor_center[0] = rng.uniform(s.tumor_axes[0] + 4.0, dz - s.tumor_axes[0] - 5.0);
  const double angle = rng.uniform(0.0, 2.0 * kPi);
  const double reach = kPlacementRadius * std::sqrt(rng.uniform());
  s.tumor_center[1] = 32.0 + reach * std::sin(angle);
  s.tumor_center[2] = 32.0 + reach * std::cos(angle);
  return s;
}

std::size_t Volume::mask_count(Target t, std::size_t slice) const {
  const Tensor<float>& m = masks[static_cast<std::size_t>(t)];
  const std::size_t plane = height() * width();
  std::size_t count = 0;
  for (std::size_t i = 0; i < plane; ++i) count += m[slice * plane + i] > 0.5f;
  return count;
}

Tensor<float> Volume::mask_plane(Target t, std::size_t slice) const {
  const Tensor<float>& m = masks[static_cast<std::size_t>(t)];
  const std::size_t plane = height() * width();
  std::vector<float> v(m.data() + slice * plane, m.data() + (slice + 1) * plane);
  return Tensor<float>(Shape{height(), width()}, std::move(v));
}

Tensor<float> Volume::image_plane(std::size_t slice) const {
  const std::size_t plane = 2 * height() * width();
  std::vector<float> v(images.data() + slice * plane, images.data() + (slice + 1) * plane);
  return Tensor<float>(Shape{2, height(), width()}, std::move(v));
}

Volume generate_phantom(const PhantomSpec& spec, std::string name) {
  spec.validate();
  const std::size_t d = spec.depth, h = spec.height, w = spec.width;
  Rng rng(spec.seed);
  const Plane plane{h, w};

  // Voxel-centre membership of the ellipsoid.
  std::vector<std::uint8_t> gtv(d * h * w, 0);
  for (std::size_t z = 0; z < d; ++z)
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) {
        const double qz = (static_cast<double>(z) - spec.tumor_center[0]) / spec.tumor_axes[0];
        const double qy = (static_cast<double>(y) - spec.tumor_center[1]) / spec.tumor_axes[1];
        const double qx = (static_cast<double>(x) - spec.tumor_center[2]) / spec.tumor_axes[2];
        gtv[(z * h + y) * w + x] = qz * qz + qy * qy + qx * qx <= 1.0;
      }
  auto ctv = dilate(gtv, d, h, w, spec.ctv_margin);
  auto ptv = dilate(ctv, d, h, w, spec.ptv_margin);

  const double body_ry = 0.42 * static_cast<double>(h) + rng.uniform(-1.5, 1.5);
  const double body_rx = 0.46 * static_cast<double>(w) + rng.uniform(-1.5, 1.5);
  const double cy = 0.5 * static_cast<double>(h) - 0.5;
  const double cx = 0.5 * static_cast<double>(w) - 0.5;
  const double phase_a = rng.uniform(0.0, 2.0 * kPi);
  const double phase_b = rng.uniform(0.0, 2.0 * kPi);
  const double tilt = rng.uniform(0.15, 0.35);

  auto inside_body = [&](double y, double x) {
    const double qy = (y - cy) / body_ry;
    const double qx = (x - cx) / body_rx;
    return qy * qy + qx * qx <= 1.0;
  };

  // Decoy blobs: one slice each, tumour-sized, clear of the GTV.
  std::vector<std::uint8_t> decoy(d * h * w, 0);
  const double keep_out = std::max(spec.tumor_axes[1], spec.tumor_axes[2]) + 2.0;
  for (std::size_t z = 0; z < d; ++z) {
    if (rng.uniform() >= spec.decoy_probability) continue;
    const double ry = rng.uniform(4.0, 9.0);
    const double rx = rng.uniform(4.0, 9.0);
    const double reach = std::max(ry, rx);
    for (int attempt = 0; attempt < 64; ++attempt) {
      // Same placement law as the tumour centre, so position alone
      // cannot tell them apart.
      const double angle = rng.uniform(0.0, 2.0 * kPi);
      const double offset = kPlacementRadius * std::sqrt(rng.uniform());
      const double by = 0.5 * static_cast<double>(h) + offset * std::sin(angle);
      const double bx = 0.5 * static_cast<double>(w) + offset * std::cos(angle);
      const double dist = std::hypot(by - spec.tumor_center[1], bx - spec.tumor_center[2]);
      if (dist < keep_out + reach || !inside_body(by, bx)) continue;
      for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) {
          const double qy = (static_cast<double>(y) - by) / ry;
          const double qx = (static_cast<double>(x) - bx) / rx;
          if (qy * qy + qx * qx <= 1.0) decoy[(z * h + y) * w + x] = 1;
        }
      break;
    }
  }

  Volume vol;
  vol.name = std::move(name);
  vol.spec = spec;
  vol.images = Tensor<float>(Shape{d, 2, h, w});
  for (std::size_t z = 0; z < d; ++z) {
    float* ct = vol.images.data() + (z * 2 + 0) * h * w;
    float* pet = vol.images.data() + (z * 2 + 1) * h * w;
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) {
        const double fy = static_cast<double>(y), fx = static_cast<double>(x);
        const std::size_t voxel = (z * h + y) * w + x;
        double ct_value = -1.0;
        double pet_value = 0.0;
        if (inside_body(fy, fx)) {
          ct_value = tilt * (fy / static_cast<double>(h) - 0.5) +
                     0.1 * std::sin(fx / 9.0 + phase_a) * std::cos(fy / 11.0 + phase_b);
          pet_value = 0.2 + 0.05 * std::sin(fy / 13.0 + phase_b);
          if (gtv[voxel] || decoy[voxel]) pet_value += spec.hotspot_contrast;
        }
        ct[plane.index(y, x)] = static_cast<float>(ct_value + spec.noise_sigma * rng.normal());
        pet[plane.index(y, x)] = static_cast<float>(pet_value + spec.noise_sigma * rng.normal());
      }
  }

  const std::array<const std::vector<std::uint8_t>*, 3> sources{&gtv, &ctv, &ptv};
  for (std::size_t t = 0; t < 3; ++t) {
    std::vector<float> values(sources[t]->begin(), sources[t]->end());
    vol.masks[t] = Tensor<float>(Shape{d, h, w}, std::move(values));
  }
  return vol;
}

std::vector<Volume> generate_corpus(std::size_t count, std::uint64_t corpus_seed) {
  std::vector<Volume> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "phantom_%03zu", i);
    out.push_back(generate_phantom(random_phantom_spec(i, corpus_seed), name));
  }
  return out;
}

std::vector<std::size_t> window_indices(std::size_t center, std::size_t n,
                                        std::size_t depth) {
  std::vector<std::size_t> out(n);
  const long half = static_cast<long>(n / 2);
  for (std::size_t k = 0; k < n; ++k) {
    const long idx = static_cast<long>(center) - half + static_cast<long>(k);
    out[k] = static_cast<std::size_t>(std::clamp(idx, 0L, static_cast<long>(depth) - 1));
  }
  return out;
}

SliceSequence make_sequence(const Volume& vol, std::size_t center, std::size_t n) {
  if (center >= vol.depth()) throw UsageError("sequence centre out of range");
  if (n % 2 == 0) throw UsageError("sequence length must be odd");
  const std::size_t h = vol.height(), w = vol.width();
  SliceSequence s;
  s.volume = vol.name;
  s.center = center;
  s.source_slices = window_indices(center, n, vol.depth());
  s.images = Tensor<float>(Shape{n, 2, h, w});
  const std::size_t image_plane = 2 * h * w;
  for (std::size_t k = 0; k < n; ++k) {
    std::copy_n(vol.images.data() + s.source_slices[k] * image_plane, image_plane,
                s.images.data() + k * image_plane);
  }
  if (vol.has_masks()) {
    for (std::size_t t = 0; t < 3; ++t) {
      s.masks[t] = Tensor<float>(Shape{n, h, w});
      for (std::size_t k = 0; k < n; ++k) {
        std::copy_n(vol.masks[t].data() + s.source_slices[k] * h * w, h * w,
                    s.masks[t].data() + k * h * w);
      }
    }
  }
  return s;
}

SliceSequence dihedral_transform(const SliceSequence& s, unsigned code) {
  const std::size_t h = s.height(), w = s.width();
  const bool flip_x = code & 1u, flip_y = code & 2u, transpose = code & 4u;
  if (code > 7) throw UsageError("dihedral code must be below 8");
  if (transpose && h != w) throw DimensionError("transpose needs square planes");
  auto remap = [&](const Tensor<float>& in) {
    Tensor<float> out(in.shape());
    const std::size_t planes = in.size() / (h * w);
    for (std::size_t p = 0; p < planes; ++p) {
      const float* src = in.data() + p * h * w;
      float* dst = out.data() + p * h * w;
      for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) {
          std::size_t a = transpose ? x : y;
          std::size_t b = transpose ? y : x;
          if (flip_y) a = h - 1 - a;
          if (flip_x) b = w - 1 - b;
          dst[y * w + x] = src[a * w + b];
        }
    }
    return out;
  };
  SliceSequence out = s;
  out.images = remap(s.images);
  for (auto& m : out.masks)
    if (!m.empty()) m = remap(m);
  return out;
}

std::vector<SliceSequence> slice_sequences(const Volume& vol, std::size_t n) {
  std::vector<SliceSequence> out;
  if (!vol.has_masks()) return out;
  for (std::size_t z = 0; z < vol.depth(); ++z) {
    if (vol.mask_count(Target::kGtv, z) > 0) out.push_back(make_sequence(vol, z, n));
  }
  return out;
}

std::vector<int> split_folds(std::size_t volume_count, std::size_t k, std::uint64_t seed) {
  if (k == 0) throw UsageError("fold count must be positive");
  std::vector<std::size_t> order(volume_count);
  for (std::size_t i = 0; i < volume_count; ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order.begin(), order.end());
  std::vector<int> fold(volume_count, 0);
  for (std::size_t i = 0; i < volume_count; ++i) {
    fold[order[i]] = static_cast<int>(i % k);
  }
  return fold;
}

nlohmann::json volume_header(const Volume& vol) {
  nlohmann::json targets = nlohmann::json::array();
  if (vol.has_masks()) {
    for (Target t : kAllTargets) targets.push_back(std::string(target_name(t)));
  }
  return {{"formatVersion", kVolumeFormatVersion},
          {"name", vol.name},
          {"shape", vol.images.shape()},
          {"dtype", "f32le"},
          {"maskDtype", "u8"},
          {"targets", targets},
          {"seed", vol.spec.seed},
          {"spec", to_json(vol.spec)}};
}

Volume volume_from_parts(const nlohmann::json& header, const std::string& images,
                         const std::array<std::string, 3>& masks) {
  Volume vol;
  try {
    if (header.at("formatVersion").get<int>() != kVolumeFormatVersion) {
      throw FormatError("unsupported volume format version");
    }
    if (header.at("dtype").get<std::string>() != "f32le") {
      throw FormatError("unsupported volume dtype");
    }
    vol.name = header.at("name").get<std::string>();
    vol.spec = phantom_spec_from_json(header.at("spec"));
    Shape shape = header.at("shape").get<Shape>();
    if (shape.size() != 4 || shape[1] != 2) {
      throw FormatError("volume shape must be [depth,2,h,w]");
    }
    const std::size_t count = element_count(shape);
    if (images.size() != count * sizeof(float)) {
      throw FormatError("image blob holds " + std::to_string(images.size()) +
                        " bytes, expected " + std::to_string(count * sizeof(float)));
    }
    std::vector<float> values(count);
    std::memcpy(values.data(), images.data(), images.size());
    vol.images = Tensor<float>(shape, std::move(values));
    const auto targets = header.at("targets").get<std::vector<std::string>>();
    if (!targets.empty()) {
      const std::size_t plane_count = shape[0] * shape[2] * shape[3];
      for (Target t : kAllTargets) {
        const std::string& blob = masks[static_cast<std::size_t>(t)];
        if (blob.size() != plane_count) {
          throw FormatError(std::string("mask blob for ") + std::string(target_name(t)) +
                            " has wrong size");
        }
        std::vector<float> m(plane_count);
        for (std::size_t i = 0; i < plane_count; ++i) {
          const auto byte = static_cast<std::uint8_t>(blob[i]);
          if (byte > 1) throw FormatError("mask values must be 0 or 1");
          m[i] = static_cast<float>(byte);
        }
        vol.masks[static_cast<std::size_t>(t)] =
            Tensor<float>(Shape{shape[0], shape[2], shape[3]}, std::move(m));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("volume header: ") + e.what());
  }
  return vol;
}

void save_volume(const Volume& vol, const std::filesystem::path& directory) {
  std::filesystem::create_directories(directory);
  const std::string header = volume_header(vol).dump(2);
  write_file(directory / (vol.name + ".json"), header.data(), header.size());
  write_file(directory / (vol.name + ".images.bin"), vol.images.data(),
             vol.images.size() * sizeof(float));
  if (vol.has_masks()) {
    for (Target t : kAllTargets) {
      const Tensor<float>& m = vol.masks[static_cast<std::size_t>(t)];
      std::vector<std::uint8_t> bytes(m.size());
      for (std::size_t i = 0; i < m.size(); ++i) bytes[i] = m[i] > 0.5f ? 1 : 0;
      write_file(directory / (vol.name + ".mask." + std::string(target_name(t)) + ".bin"),
                 bytes.data(), bytes.size());
    }
  }
}

Volume load_volume(const std::filesystem::path& header_path) {
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(read_file(header_path));
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError("cannot parse " + header_path.string() + ": " + e.what());
  }
  const auto directory = header_path.parent_path();
  const std::string name = header.value("name", header_path.stem().string());
  std::array<std::string, 3> masks;
  if (header.contains("targets") && !header["targets"].empty()) {
    for (Target t : kAllTargets) {
      masks[static_cast<std::size_t>(t)] =
          read_file(directory / (name + ".mask." + std::string(target_name(t)) + ".bin"));
    }
  }
  return volume_from_parts(header, read_file(directory / (name + ".images.bin")), masks);
}

std::vector<Volume> load_corpus(const std::filesystem::path& directory) {
  if (!std::filesystem::is_directory(directory)) {
    throw IoError("data directory " + directory.string() + " does not exist");
  }
  std::vector<std::filesystem::path> headers;
  for (const auto& entry : std::filesystem::directory_iterator(directory)) {
    if (entry.path().extension() == ".json") headers.push_back(entry.path());
  }
  std::sort(headers.begin(), headers.end());
  std::vector<Volume> out;
  for (const auto& h : headers) out.push_back(load_volume(h));
  return out;
}

}  // namespace ggpseg
