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

#include <filesystem>
#include <fstream>

#include "checks.hpp"
#include "doctest.h"
#include "model/checkpoint.hpp"

using namespace ggpseg;
using namespace ggpseg::testing;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("ggpseg_unit_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_SUITE("model") {

TEST_CASE("bottleneck shape follows the config") {
  ModelConfig c;
  Rng rng(1);
  Encoder<float> enc(c, rng);
  auto p = enc.encode(Var<float>::constant(Tensor<float>(Shape{2, 64, 64})));
  CHECK(p.bottleneck.shape() == Shape{128, 8, 8});
  REQUIRE(p.skips.size() == 3);
  CHECK(p.skips[1].shape() == Shape{32, 32, 32});
  CHECK_THROWS_AS(enc.encode(Var<float>::constant(Tensor<float>(Shape{2, 60, 64}))),
                  DimensionError);
  CHECK_THROWS_AS(enc.encode(Var<float>::constant(Tensor<float>(Shape{1, 64, 64}))),
                  DimensionError);
}

TEST_CASE("zero weights give a uniform two-class softmax") {
  SegmentationModel<float> model(tiny_model_config(), tiny_ggp_config(), ModelKind::kGraph, 1);
  for (auto& p : model.parameters()) Var<float>(p.var).mutable_value().fill(0.0f);
  Rng rng(2);
  auto m = model.forward(random_sequence(rng, 3, 8)).probability.value();
  for (float v : m.values()) CHECK(v == 0.5f);
}

TEST_CASE("encoder gradient reaches every input pixel") {
  ModelConfig c = tiny_model_config();
  Rng rng(3);
  Encoder<double> enc(c, rng);
  auto x = Var<double>::parameter(rng.uniform_tensor<double>(Shape{2, 8, 8}, -1, 1));
  backward(ops::reduce_sum(enc.encode(x).bottleneck));
  const Tensor<double> g = x.grad();
  std::size_t zeros = 0;
  for (std::size_t i = 0; i < 64; ++i) zeros += g[i] == 0.0 && g[64 + i] == 0.0;
  CHECK(zeros == 0);
}

TEST_CASE("config validation") {
  ModelConfig c;
  c.sequence_length = 4;
  CHECK_THROWS_AS(c.validate(), UsageError);
  c = ModelConfig{};
  c.classes = 1;
  CHECK_THROWS_AS(c.validate(), UsageError);
  GgpConfig g;
  g.gate_kernel = 2;
  CHECK_THROWS_AS(g.validate(), UsageError);
}

TEST_CASE("checkpoint round-trip is bit-exact") {
  auto dir = scratch_dir("checkpoint");
  for (ModelKind kind : {ModelKind::kGraph, ModelKind::kBaseline}) {
    SegmentationModel<float> model(tiny_model_config(), tiny_ggp_config(), kind, 9);
    save_model(model, dir, {{"target", "ctv"}});
    auto loaded = load_model(dir);
    CHECK(loaded.manifest["target"] == "ctv");
    CHECK(loaded.model.kind() == kind);
    auto a = model.parameters();
    auto b = loaded.model.parameters();
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].name == b[i].name);
      CHECK(a[i].var.value() == b[i].var.value());
    }
    Rng rng(4);
    auto s = random_sequence(rng, 3, 8);
    CHECK(model.forward(s).probability.value() == loaded.model.forward(s).probability.value());
  }
  fs::remove_all(dir);
}

TEST_CASE("damaged checkpoints are format errors") {
  auto dir = scratch_dir("bad_checkpoint");
  SegmentationModel<float> model(tiny_model_config(), tiny_ggp_config(), ModelKind::kGraph, 9);
  save_model(model, dir);
  auto raw = read_checkpoint(dir);
  auto manifest = raw.manifest;
  manifest["formatVersion"] = 99;
  std::ofstream(dir / "manifest.json") << manifest.dump();
  CHECK_THROWS_AS(load_model(dir), FormatError);
  CHECK_THROWS(load_model(dir / "nowhere"));
  fs::remove_all(dir);
}

TEST_CASE("config json round-trip") {
  ModelConfig c;
  c.base_channels = 6;
  GgpConfig g;
  g.candidate = CandidateActivation::kSigmoid;
  g.steps = 4;
  CHECK(model_config_from_json(to_json(c)).base_channels == 6);
  auto back = ggp_config_from_json(to_json(g));
  CHECK(back.candidate == CandidateActivation::kSigmoid);
  CHECK(back.steps == 4);
}

}  // TEST_SUITE
