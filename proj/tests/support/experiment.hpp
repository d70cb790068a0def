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

#include <vector>

#include "phantom/phantom.hpp"
#include "trainer/trainer.hpp"

namespace ggpseg::testing {

/// Configuration shared by the phantom experiments.
inline TrainConfig experiment_config(ModelKind kind) {
  TrainConfig cfg;
  cfg.kind = kind;
  cfg.epochs = 30;
  cfg.seed = 2;
  cfg.model.base_channels = 4;
  cfg.model.depth = 3;
  cfg.model.sequence_length = 5;
  cfg.ggp.steps = 3;
  return cfg;
}

/// Loss curve of single-sequence training, one entry per step.
inline std::vector<double> overfit_curve(std::size_t steps, ModelKind kind = ModelKind::kGraph) {
  auto vol = generate_phantom(random_phantom_spec(0, 2026), "overfit");
  auto seqs = slice_sequences(vol, 5);
  std::vector<SliceSequence> one{seqs[seqs.size() / 2]};
  TrainConfig cfg = experiment_config(kind);
  cfg.epochs = steps;
  cfg.augment = false;
  cfg.learning_rate = 1e-2;
  SegmentationModel<float> model(cfg.model, cfg.ggp, cfg.kind, cfg.seed);
  return fit(model, one, cfg);
}

}  // namespace ggpseg::testing
