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
#include <utility>
#include <vector>

#include "ggp/propagator.hpp"
#include "model/layers.hpp"
#include "model/sequence.hpp"
#include "numerics/errors.hpp"
#include "numerics/ops.hpp"
#include "numerics/rng.hpp"

namespace ggpseg {

struct ModelConfig {
  std::size_t depth = 3;
  std::size_t base_channels = 16;
  std::size_t sequence_length = 5;
  std::size_t classes = 2;

  void validate() const {
    if (depth == 0 || base_channels == 0 || sequence_length == 0 || classes < 2) {
      throw UsageError("model config values must be positive (classes >= 2)");
    }
    if (sequence_length % 2 == 0) {
      throw UsageError("sequence length must be odd");
    }
  }

  std::size_t channels_at(std::size_t level) const {
    return base_channels << level;
  }
  std::size_t bottleneck_channels() const { return channels_at(depth); }
};

/// Graph: encoder, propagator, decoder. Baseline: the same encoder and
/// decoder on the middle slice alone.
enum class ModelKind { kGraph, kBaseline };

template <typename Real>
struct FeaturePyramid {
  std::vector<Var<Real>> skips;  // level l is [c * 2^l, h / 2^l, w / 2^l]
  Var<Real> bottleneck;
};

/// U-Net style contraction path; two 3x3 conv + ReLU per level, 2x2 average
/// pooling between levels.
template <typename Real>
class Encoder {
 public:
  Encoder() = default;

  Encoder(const ModelConfig& config, Rng& rng) : depth_(config.depth) {
    std::size_t in = 2;
    for (std::size_t level = 0; level <= config.depth; ++level) {
      const std::size_t out = config.channels_at(level);
      levels_.push_back({Conv<Real>::make(in, out, 3, rng, kReluGain),
                         Conv<Real>::make(out, out, 3, rng, kReluGain)});
      in = out;
    }
  }

  FeaturePyramid<Real> encode(const Var<Real>& slice) const {
    if (slice.value().rank() != 3 || slice.shape()[0] != 2) {
      throw DimensionError("encoder expects a [2,h,w] slice, got " +
                           to_string(slice.shape()));
    }
    const std::size_t factor = std::size_t{1} << depth_;
    if (slice.shape()[1] % factor || slice.shape()[2] % factor) {
      throw DimensionError("slice extent " + to_string(slice.shape()) +
                           " not divisible by " + std::to_string(factor));
    }
    FeaturePyramid<Real> pyramid;
    Var<Real> x = slice;
    for (std::size_t level = 0; level < levels_.size(); ++level) {
      if (level > 0) x = ops::avg_pool2(x);
      x = ops::relu(levels_[level].first(x));
      x = ops::relu(levels_[level].second(x));
      if (level < depth_) pyramid.skips.push_back(x);
    }
    pyramid.bottleneck = x;
    return pyramid;
  }

  void collect(ParameterList<Real>& out, const std::string& prefix) const {
    for (std::size_t level = 0; level < levels_.size(); ++level) {
      const std::string name = prefix + "." + std::to_string(level);
      levels_[level].first.collect(out, name + ".conv0");
      levels_[level].second.collect(out, name + ".conv1");
    }
  }

 private:
  std::size_t depth_ = 0;
  std::vector<std::pair<Conv<Real>, Conv<Real>>> levels_;
};

template <typename Real>
struct DecodeResult {
  Var<Real> latent;  // output of the last conv before the classifier
  Var<Real> logits;  // [classes, h, w]
};

/// Expansion path: nearest-neighbour upsampling, 3x3 conv, concatenation
/// with the encoder skip, 3x3 conv. A 1x1 classifier maps the final
/// features (the latent) to class logits.
template <typename Real>
class Decoder {
 public:
  Decoder() = default;

  Decoder(const ModelConfig& config, Rng& rng) {
    for (std::size_t level = config.depth; level-- > 0;) {
      const std::size_t out = config.channels_at(level);
      ups_.push_back(Conv<Real>::make(config.channels_at(level + 1), out, 3, rng,
                                      kReluGain));
      fuses_.push_back(Conv<Real>::make(2 * out, out, 3, rng, kReluGain));
    }
    classifier_ = Conv<Real>::make(config.base_channels, config.classes, 1, rng, 1.0);
  }

  DecodeResult<Real> decode(const Var<Real>& bottleneck,
                            const std::vector<Var<Real>>& skips) const {
    if (skips.size() != ups_.size()) {
      throw DimensionError("decoder expects " + std::to_string(ups_.size()) +
                           " skip tensors, got " + std::to_string(skips.size()));
    }
    Var<Real> x = bottleneck;
    for (std::size_t i = 0; i < ups_.size(); ++i) {
      const Var<Real>& skip = skips[skips.size() - 1 - i];
      x = ops::relu(ups_[i](ops::upsample2x(x)));
      if (x.shape() != skip.shape()) {
        throw DimensionError("decoder: upsampled " + to_string(x.shape()) +
                             " does not match skip " + to_string(skip.shape()));
      }
      x = ops::relu(fuses_[i](ops::concat_channels<Real>({x, skip})));
    }
    return {x, classify(x)};
  }

  /// The classifier conv; softmax_channels of this is the prediction.
  Var<Real> classify(const Var<Real>& latent) const { return classifier_(latent); }

  const Conv<Real>& classifier() const { return classifier_; }

  void collect(ParameterList<Real>& out, const std::string& prefix) const {
    for (std::size_t i = 0; i < ups_.size(); ++i) {
      const std::string name = prefix + "." + std::to_string(i);
      ups_[i].collect(out, name + ".up");
      fuses_[i].collect(out, name + ".fuse");
    }
    classifier_.collect(out, prefix + ".classifier");
  }

 private:
  std::vector<Conv<Real>> ups_;
  std::vector<Conv<Real>> fuses_;
  Conv<Real> classifier_;
};

template <typename Real>
struct ForwardResult {
  Var<Real> probability;  // target-class probability M, [h, w]
  Var<Real> probabilities;  // all classes, [classes, h, w]
  Var<Real> logits;
  Var<Real> latent;
};

template <typename Real>
class SegmentationModel {
 public:
  SegmentationModel() = default;

  SegmentationModel(const ModelConfig& model_config, const GgpConfig& ggp_config,
                    ModelKind kind, std::uint64_t seed)
      : config_(model_config), ggp_config_(ggp_config), kind_(kind), seed_(seed) {
    config_.validate();
    ggp_config_.nodes = config_.sequence_length;
    Rng rng(seed);
    encoder_ = Encoder<Real>(config_, rng);
    decoder_ = Decoder<Real>(config_, rng);
    if (kind_ == ModelKind::kGraph) {
      propagator_ = GatedGraphPropagator<Real>(
          ggp_config_, config_.bottleneck_channels(), rng);
    }
  }

  const ModelConfig& config() const { return config_; }
  const GgpConfig& ggp_config() const { return ggp_config_; }
  ModelKind kind() const { return kind_; }
  std::uint64_t seed() const { return seed_; }

  const Encoder<Real>& encoder() const { return encoder_; }
  const Decoder<Real>& decoder() const { return decoder_; }
  const GatedGraphPropagator<Real>& propagator() const { return propagator_; }
  GatedGraphPropagator<Real>& propagator() { return propagator_; }

  FeaturePyramid<Real> encode(const Var<Real>& slice) const {
    return encoder_.encode(slice);
  }

  /// Encodes every slice with the shared encoder.
  std::vector<FeaturePyramid<Real>> encode_sequence(const SliceSequence& s) const {
    check_sequence(s);
    std::vector<FeaturePyramid<Real>> out;
    out.reserve(s.length());
    for (std::size_t k = 0; k < s.length(); ++k) {
      out.push_back(encode(Var<Real>::constant(s.template slice_image<Real>(k))));
    }
    return out;
  }

  ForwardResult<Real> forward(const SliceSequence& s) const {
    check_sequence(s);
    const std::size_t mid = s.middle_index();
    if (kind_ == ModelKind::kBaseline) {
      auto pyramid = encode(Var<Real>::constant(s.template slice_image<Real>(mid)));
      return finish(decoder_.decode(pyramid.bottleneck, pyramid.skips));
    }
    auto pyramids = encode_sequence(s);
    std::vector<Var<Real>> features;
    features.reserve(pyramids.size());
    for (const auto& p : pyramids) features.push_back(p.bottleneck);
    auto propagated = propagator_.propagate(features);
    return finish(decoder_.decode(propagated[mid], pyramids[mid].skips));
  }

  /// Softmax head applied to a latent; the target class is channel 1.
  ForwardResult<Real> classify_latent(const Var<Real>& latent) const {
    return finish({latent, decoder_.classify(latent)});
  }

  ParameterList<Real> parameters() const {
    ParameterList<Real> out;
    encoder_.collect(out, "encoder");
    if (kind_ == ModelKind::kGraph) propagator_.collect(out, "ggp");
    decoder_.collect(out, "decoder");
    return out;
  }

  /// Encoder + decoder only; equal for graph and baseline models.
  ParameterList<Real> trunk_parameters() const {
    ParameterList<Real> out;
    encoder_.collect(out, "encoder");
    decoder_.collect(out, "decoder");
    return out;
  }

  /// Stops all parameters from receiving gradient (shared inference use).
  void freeze() {
    for (auto& p : parameters()) p.var.set_requires_grad(false);
  }

 private:
  void check_sequence(const SliceSequence& s) const {
    if (s.images.rank() != 4 || s.images.dim(1) != 2) {
      throw DimensionError("sequence images must be [n,2,h,w], got " +
                           to_string(s.images.shape()));
    }
    if (s.length() != config_.sequence_length) {
      throw DimensionError("sequence length " + std::to_string(s.length()) +
                           " does not match model (" +
                           std::to_string(config_.sequence_length) + ")");
    }
  }

  ForwardResult<Real> finish(DecodeResult<Real> decoded) const {
    ForwardResult<Real> out;
    out.latent = decoded.latent;
    out.logits = decoded.logits;
    out.probabilities = ops::softmax_channels(decoded.logits);
    out.probability = ops::select(out.probabilities, 1);
    return out;
  }

  ModelConfig config_;
  GgpConfig ggp_config_;
  ModelKind kind_ = ModelKind::kGraph;
  std::uint64_t seed_ = 0;
  Encoder<Real> encoder_;
  Decoder<Real> decoder_;
  GatedGraphPropagator<Real> propagator_;
};

/// Copies parameter values by name into a model of another precision.
template <typename To, typename From>
SegmentationModel<To> convert_model(const SegmentationModel<From>& source) {
  SegmentationModel<To> out(source.config(), source.ggp_config(), source.kind(),
                            source.seed());
  auto src = source.parameters();
  auto dst = out.parameters();
  for (std::size_t i = 0; i < src.size(); ++i) {
    dst[i].var.mutable_value() = src[i].var.value().template cast<To>();
  }
  return out;
}

}  // namespace ggpseg
