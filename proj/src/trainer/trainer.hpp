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
#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "metrics/metrics.hpp"
#include "model/segmentation_model.hpp"
#include "model/sequence.hpp"
#include "numerics/adam.hpp"
#include "phantom/phantom.hpp"

namespace ggpseg {

inline constexpr std::uint64_t kDefaultSplitSeed = 17;

struct TrainConfig {
  Target target = Target::kGtv;
  ModelKind kind = ModelKind::kGraph;
  std::size_t epochs = 30;
  double learning_rate = 1e-3;
  std::uint64_t seed = 1;
  ModelConfig model;
  GgpConfig ggp;
  std::size_t fold_count = 5;
  int fold = -1;  // held-out fold; -1 trains on every volume
  std::uint64_t split_seed = kDefaultSplitSeed;
  std::size_t max_steps = 0;  // 0 = no limit
  bool augment = true;         // random flips/transposes of each training sequence
  std::filesystem::path data_dir;
  std::filesystem::path checkpoint_dir;

  void validate() const;
};

nlohmann::json to_json(const TrainConfig& cfg);
/// Defaults overridden by whichever keys `overrides` carries (same names as
/// to_json, plus dataDir and checkpointDir).
TrainConfig train_config_from_json(const nlohmann::json& overrides);

struct EpochRecord {
  std::size_t epoch = 0;
  double mean_loss = 0.0;
  std::size_t steps = 0;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Adam + per-slice DICE loss, one sequence per step, sequences reshuffled
/// every epoch from `cfg.seed`. Returns the mean loss of each epoch.
std::vector<double> fit(SegmentationModel<float>& model,
                        std::span<const SliceSequence> sequences,
                        const TrainConfig& cfg, const EpochCallback& on_epoch = {});

/// Binarised middle-slice predictions scored against the reference.
MetricsReport evaluate_model(const SegmentationModel<float>& model,
                             std::span<const SliceSequence> sequences, Target target,
                             int fold);

struct FoldSplit {
  std::vector<std::size_t> train;  // volume indices
  std::vector<std::size_t> test;
};

/// `fold` < 0 puts every volume in the training set.
FoldSplit split_for_fold(std::size_t volume_count, std::size_t fold_count,
                         std::uint64_t split_seed, int fold);

std::vector<SliceSequence> sequences_of(const std::vector<Volume>& volumes,
                                        std::span<const std::size_t> indices,
                                        std::size_t n);

struct TrainResult {
  std::filesystem::path checkpoint;
  std::vector<double> loss_curve;
  std::vector<std::string> train_volumes;
  SegmentationModel<float> model;
};

/// Trains on the corpus held in memory; writes a checkpoint every epoch
/// and JSON-lines logs when `cfg.checkpoint_dir` is set.
TrainResult train_on(const std::vector<Volume>& corpus, const TrainConfig& cfg,
                     std::ostream* log = nullptr);

/// Loads the corpus from `cfg.data_dir`, then as train_on.
TrainResult train(const TrainConfig& cfg, std::ostream* log = nullptr);

/// Scores a checkpoint on the held-out fold recorded in its manifest (or
/// `fold` when given). Refuses to score volumes the checkpoint trained on.
MetricsReport evaluate_checkpoint(const std::filesystem::path& checkpoint,
                                  const std::vector<Volume>& corpus,
                                  std::optional<int> fold = std::nullopt);

struct CrossValidationResult {
  std::vector<MetricsReport> folds;
  MetricsReport aggregate;
  std::vector<SegmentationModel<float>> models;
};

/// Trains and evaluates one model per fold. Checkpoints go to
/// <checkpoint_dir>/fold_<k> when a directory is set.
CrossValidationResult cross_validate(const std::vector<Volume>& corpus,
                                     const TrainConfig& cfg, std::ostream* log = nullptr);

}  // namespace ggpseg
