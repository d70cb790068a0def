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

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "model/layers.hpp"
#include "model/segmentation_model.hpp"

namespace ggpseg {

// A checkpoint is a directory holding manifest.json plus one raw
// little-endian f32 blob per parameter, named <parameter>.f32.
inline constexpr int kCheckpointFormatVersion = 1;

struct RawCheckpoint {
  nlohmann::json manifest;
  std::vector<std::pair<std::string, Tensor<float>>> parameters;
};

nlohmann::json to_json(const ModelConfig& c);
ModelConfig model_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const GgpConfig& c);
GgpConfig ggp_config_from_json(const nlohmann::json& j);

/// Writes `manifest` (augmented with the parameter table and format
/// version) and the parameter blobs.
void write_checkpoint(const std::filesystem::path& directory, nlohmann::json manifest,
                      const ParameterList<float>& parameters);
RawCheckpoint read_checkpoint(const std::filesystem::path& directory);

/// Copies values into `parameters` by name; names and shapes must match.
void assign_parameters(const RawCheckpoint& checkpoint, const ParameterList<float>& parameters);

void save_model(const SegmentationModel<float>& model, const std::filesystem::path& directory,
                nlohmann::json extra = nlohmann::json::object());

struct LoadedModel {
  SegmentationModel<float> model;
  nlohmann::json manifest;
};
LoadedModel load_model(const std::filesystem::path& directory);

}  // namespace ggpseg
