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
#include <filesystem>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "ggp/propagator.hpp"
#include "json.hpp"
#include "metrics/metrics.hpp"
#include "model/layers.hpp"
#include "model/segmentation_model.hpp"
#include "phantom/phantom.hpp"

namespace ggpseg {

struct ReconstructionConfig {
  double step_size = 0.1;  // alpha
  std::size_t max_iters = 200;
  double stop_dsc = 0.95;
  std::size_t max_halvings = 10;
};

enum class ReconstructionStatus {
  kConverged,     // prediction reached stop_dsc (or already matched)
  kMaxIters,      // iteration budget exhausted
  kStalled,       // no step size decreased the loss
  kNumericError,  // non-finite gradient; latent is the last finite iterate
};

std::string_view status_name(ReconstructionStatus s);

struct ReconstructionTrace {
  std::vector<double> losses;  // L_r of every accepted iterate, start included
  std::vector<double> dscs;    // DSC against the user mask, same indexing
  std::size_t iterations = 0;
  ReconstructionStatus status = ReconstructionStatus::kMaxIters;
  std::string message;

  double final_dsc() const { return dscs.empty() ? 0.0 : dscs.back(); }
};

nlohmann::json to_json(const ReconstructionTrace& trace);

struct ReconstructionResult {
  Tensor<float> latent;
  ReconstructionTrace trace;
};

/// Gradient descent on a latent z (classifier weights frozen) toward the
/// user's mask: z <- z - alpha * dL_r(phi(z), mask)/dz, with L_r the NLL of
/// phi = softmax(classifier(z)). Halves the step (up to max_halvings times)
/// whenever the loss would increase, so accepted iterates never increase
/// L_r.
ReconstructionResult reconstruct_latent(const Tensor<float>& latent, const Mask& user_mask,
                                        const ReconstructionConfig& cfg,
                                        const Conv<float>& classifier);

/// Target-class probability map phi(z)[1] for a latent.
Tensor<float> classify_latent(const Tensor<float>& latent, const Conv<float>& classifier);

struct InteractiveConfig {
  std::size_t nodes = 5;
  double lambda = 1.0;  // distance decay of the handcrafted adjacency
  std::size_t steps = 1;
  std::size_t edge_types = 1;
  std::size_t gate_kernel = 3;
  std::size_t message_kernel = 1;
  std::uint64_t seed = 7;
};

nlohmann::json to_json(const InteractiveConfig& c);
InteractiveConfig interactive_config_from_json(const nlohmann::json& j);

/// Row v: exp(-|u-v|/lambda) for each source u (repeated per edge type),
/// normalised to sum to one.
Tensor<float> handcrafted_adjacency(std::size_t nodes, double lambda,
                                    std::size_t edge_types = 1);

/// Gated propagator over decoder latents with a fixed distance-based
/// adjacency. It propagates the effect of a substituted latent: each
/// unedited slice moves by P(Z')_u - P(Z)_u, where Z' is Z with the edited
/// latent swapped in, so an edit that changes nothing changes nothing.
/// P runs on latents divided by a per-channel scale, and its output delta
/// is multiplied back, so the bounded GRU candidate can cover the latent
/// range.
class InteractivePropagator {
 public:
  InteractivePropagator() = default;
  InteractivePropagator(const InteractiveConfig& config, std::size_t latent_channels);

  const InteractiveConfig& config() const { return config_; }
  std::size_t latent_channels() const { return channels_; }
  const GatedGraphPropagator<float>& propagator() const { return propagator_; }
  /// Copy using a different decay, keeping the learnt weights.
  InteractivePropagator with_lambda(double lambda) const;

  const std::vector<float>& latent_scale() const { return latent_scale_; }
  /// One positive finite factor per latent channel.
  void set_latent_scale(std::vector<float> scale);

  std::vector<Var<float>> refine(const std::vector<Var<float>>& original, std::size_t edited,
                                 const Var<float>& replacement) const;

  ParameterList<float> parameters() const;
  void freeze();

 private:
  InteractiveConfig config_;
  std::size_t channels_ = 0;
  std::vector<float> latent_scale_;
  GatedGraphPropagator<float> propagator_;
};


void save_interactive(const InteractivePropagator& p, const std::filesystem::path& dir,
                      nlohmann::json extra = nlohmann::json::object());
InteractivePropagator load_interactive(const std::filesystem::path& dir);

/// Non-interactive outputs of every slice of a volume, each from the
/// sequence centred on that slice.
struct VolumePrediction {
  std::vector<Tensor<float>> latents;        // [c_z, h, w]
  std::vector<Tensor<float>> probabilities;  // [h, w]
  std::vector<Mask> masks;
};

VolumePrediction predict_volume(const SegmentationModel<float>& model, const Volume& vol);

/// Root mean square of each latent channel over every slice of `predictions`.
std::vector<float> latent_channel_rms(const std::vector<VolumePrediction>& predictions);

struct RefinementResult {
  std::vector<std::size_t> source_slices;   // volume slice of each position
  std::size_t edited_position = 0;
  ReconstructionTrace trace;
  std::vector<Tensor<float>> probabilities;  // refined, per position
  std::vector<Mask> masks;
};

/// Substitutes the reconstructed latent at `edited_position` of the window
/// centred on `center` and refines the other positions.
RefinementResult refine_neighbors(const SegmentationModel<float>& model,
                                  const InteractivePropagator& propagator,
                                  const VolumePrediction& prediction, std::size_t center,
                                  std::size_t edited_position, const Mask& user_mask,
                                  const ReconstructionConfig& cfg);

/// Same, with the substituted latent given directly.
RefinementResult refine_with_latent(const SegmentationModel<float>& model,
                                    const InteractivePropagator& propagator,
                                    const VolumePrediction& prediction, std::size_t center,
                                    std::size_t edited_position,
                                    const Tensor<float>& replacement);

/// Median of the defined values; nullopt when none are defined.
std::optional<double> median_of(std::vector<std::optional<double>> values);

/// Index of the entry with the smallest median (lowest index on ties);
/// nullopt when no entry has a defined median.
std::optional<std::size_t> select_worst(
    const std::vector<std::vector<std::optional<double>>>& per_sequence_dscs);

struct WorstSequence {
  std::string volume;
  std::size_t center = 0;
  std::size_t worst_position = 0;  // lowest-DSC position, edited by the user
  double median_dsc = 0.0;
  std::vector<std::optional<double>> dscs;  // per position, non-interactive
};

/// For each volume, the valid sequence with minimum median per-slice DSC.
/// Only slices with reference GTV are scored; other positions are nullopt.
std::vector<WorstSequence> select_worst_sequences(
    const SegmentationModel<float>& model, const std::vector<Volume>& volumes,
    Target target, std::vector<VolumePrediction>* predictions = nullptr);

struct InteractiveTrainConfig {
  Target target = Target::kGtv;
  std::size_t epochs = 8;
  double learning_rate = 1e-3;
  std::uint64_t seed = 7;
  InteractiveConfig interactive;
  ReconstructionConfig reconstruction;
};

/// Trains a propagator on frozen-model latents. Each example substitutes
/// the ground-truth reconstruction of a uniformly drawn position and is
/// supervised by DICE on every position's decoded output.
InteractivePropagator train_interactive(const SegmentationModel<float>& model,
                                        const std::vector<Volume>& volumes,
                                        const InteractiveTrainConfig& cfg,
                                        std::ostream* log = nullptr);

struct InteractiveEvaluation {
  std::vector<double> before;  // neighbour DSC, non-interactive
  std::vector<double> after;   // neighbour DSC, refined
  std::vector<double> edited_dsc;  // reconstruction DSC vs the user mask
  bool monotone = true;
  MetricSummary dsc_before, dsc_after;
  MetricSummary sensitivity_before, sensitivity_after;
  MetricSummary specificity_before, specificity_after;
};

/// Edits the worst slice of each volume's worst sequence with its ground
/// truth and scores the other slices of that sequence before and after.
InteractiveEvaluation evaluate_interactive(const SegmentationModel<float>& model,
                                           const InteractivePropagator& propagator,
                                           const std::vector<Volume>& volumes, Target target,
                                           const ReconstructionConfig& cfg);

nlohmann::json to_json(const InteractiveEvaluation& e);

}  // namespace ggpseg
