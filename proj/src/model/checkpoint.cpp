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

#include "model/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

namespace ggpseg {
namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint blobs are written as little-endian floats");

std::string read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_all(const std::filesystem::path& path, const void* data, std::size_t bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(bytes));
  if (!out) throw IoError("short write to " + path.string());
}

std::string_view kind_name(ModelKind kind) {
  return kind == ModelKind::kGraph ? "ggp" : "baseline";
}

}  // namespace

nlohmann::json to_json(const ModelConfig& c) {
  return {{"depth", c.depth},
          {"baseChannels", c.base_channels},
          {"sequenceLength", c.sequence_length},
          {"classes", c.classes}};
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
  try {
    ModelConfig c;
    c.depth = j.at("depth").get<std::size_t>();
    c.base_channels = j.at("baseChannels").get<std::size_t>();
    c.sequence_length = j.at("sequenceLength").get<std::size_t>();
    c.classes = j.at("classes").get<std::size_t>();
    c.validate();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("model config: ") + e.what());
  }
}

nlohmann::json to_json(const GgpConfig& c) {
  return {{"nodes", c.nodes},
          {"edgeTypes", c.edge_types},
          {"steps", c.steps},
          {"messageKernel", c.message_kernel},
          {"gateKernel", c.gate_kernel},
          {"candidate", c.candidate == CandidateActivation::kTanh ? "tanh" : "sigmoid"}};
}

GgpConfig ggp_config_from_json(const nlohmann::json& j) {
  try {
    GgpConfig c;
    c.nodes = j.at("nodes").get<std::size_t>();
    c.edge_types = j.at("edgeTypes").get<std::size_t>();
    c.steps = j.at("steps").get<std::size_t>();
    c.message_kernel = j.value("messageKernel", std::size_t{1});
    c.gate_kernel = j.value("gateKernel", std::size_t{3});
    const std::string candidate = j.value("candidate", std::string("tanh"));
    if (candidate != "tanh" && candidate != "sigmoid") {
      throw FormatError("unknown candidate activation " + candidate);
    }
    c.candidate = candidate == "tanh" ? CandidateActivation::kTanh
                                      : CandidateActivation::kSigmoid;
    c.validate();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("propagator config: ") + e.what());
  }
}

void write_checkpoint(const std::filesystem::path& directory, nlohmann::json manifest,
                      const ParameterList<float>& parameters) {
  std::filesystem::create_directories(directory);
  nlohmann::json table = nlohmann::json::array();
  for (const auto& p : parameters) {
    const std::string file = p.name + ".f32";
    const Tensor<float>& value = p.var.value();
    write_all(directory / file, value.data(), value.size() * sizeof(float));
    table.push_back({{"name", p.name}, {"shape", value.shape()}, {"file", file}});
  }
  manifest["formatVersion"] = kCheckpointFormatVersion;
  manifest["dtype"] = "f32le";
  manifest["parameters"] = std::move(table);
  const std::string text = manifest.dump(2);
  write_all(directory / "manifest.json", text.data(), text.size());
}

RawCheckpoint read_checkpoint(const std::filesystem::path& directory) {
  RawCheckpoint out;
  try {
    out.manifest = nlohmann::json::parse(read_all(directory / "manifest.json"));
    if (out.manifest.at("formatVersion").get<int>() != kCheckpointFormatVersion) {
      throw FormatError("unsupported checkpoint format version");
    }
    for (const auto& entry : out.manifest.at("parameters")) {
      const std::string name = entry.at("name").get<std::string>();
      const Shape shape = entry.at("shape").get<Shape>();
      const std::string blob = read_all(directory / entry.at("file").get<std::string>());
      const std::size_t count = element_count(shape);
      if (blob.size() != count * sizeof(float)) {
        throw FormatError("parameter " + name + " blob has wrong size");
      }
      std::vector<float> values(count);
      std::memcpy(values.data(), blob.data(), blob.size());
      out.parameters.emplace_back(name, Tensor<float>(shape, std::move(values)));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("checkpoint manifest: " + std::string(e.what()));
  }
  return out;
}

void assign_parameters(const RawCheckpoint& checkpoint,
                       const ParameterList<float>& parameters) {
  std::map<std::string, const Tensor<float>*> by_name;
  for (const auto& [name, value] : checkpoint.parameters) by_name[name] = &value;
  if (by_name.size() != parameters.size()) {
    throw FormatError("checkpoint holds " + std::to_string(by_name.size()) +
                      " parameters, model expects " + std::to_string(parameters.size()));
  }
  for (const auto& p : parameters) {
    auto it = by_name.find(p.name);
    if (it == by_name.end()) throw FormatError("checkpoint lacks parameter " + p.name);
    if (it->second->shape() != p.var.shape()) {
      throw FormatError("parameter " + p.name + " has shape " +
                        to_string(it->second->shape()) + ", expected " +
                        to_string(p.var.shape()));
    }
    Var<float> target = p.var;
    target.mutable_value() = *it->second;
  }
}

void save_model(const SegmentationModel<float>& model, const std::filesystem::path& directory,
                nlohmann::json extra) {
  nlohmann::json manifest = std::move(extra);
  manifest["kind"] = kind_name(model.kind());
  manifest["seed"] = model.seed();
  manifest["modelConfig"] = to_json(model.config());
  manifest["ggpConfig"] = to_json(model.ggp_config());
  write_checkpoint(directory, std::move(manifest), model.parameters());
}

LoadedModel load_model(const std::filesystem::path& directory) {
  RawCheckpoint raw = read_checkpoint(directory);
  const std::string kind = raw.manifest.value("kind", std::string());
  if (kind != "ggp" && kind != "baseline") {
    throw FormatError("checkpoint kind '" + kind + "' is not a segmentation model");
  }
  LoadedModel out{SegmentationModel<float>(
                      model_config_from_json(raw.manifest.at("modelConfig")),
                      ggp_config_from_json(raw.manifest.at("ggpConfig")),
                      kind == "ggp" ? ModelKind::kGraph : ModelKind::kBaseline,
                      raw.manifest.value("seed", std::uint64_t{0})),
                  raw.manifest};
  assign_parameters(raw, out.model.parameters());
  return out;
}

}  // namespace ggpseg
