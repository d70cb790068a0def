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
#include <set>
#include <sstream>

#include "checks.hpp"
#include "doctest.h"
#include "experiment.hpp"
#include "model/checkpoint.hpp"

using namespace ggpseg;
using namespace ggpseg::testing;
namespace fs = std::filesystem;

namespace {

TrainConfig small_config(ModelKind kind) {
  TrainConfig cfg = experiment_config(kind);
  cfg.model = tiny_model_config();
  cfg.ggp = tiny_ggp_config();
  cfg.epochs = 3;
  return cfg;
}

std::vector<SliceSequence> random_sequences(std::size_t count) {
  Rng rng(21);
  std::vector<SliceSequence> out;
  for (std::size_t i = 0; i < count; ++i) out.push_back(random_sequence(rng, 3, 8));
  return out;
}

}  // namespace

TEST_SUITE("trainer") {

TEST_CASE("fixed seed gives identical curves and weights") {
  auto data = random_sequences(4);
  auto cfg = small_config(ModelKind::kGraph);
  SegmentationModel<float> a(cfg.model, cfg.ggp, cfg.kind, cfg.seed);
  SegmentationModel<float> b(cfg.model, cfg.ggp, cfg.kind, cfg.seed);
  CHECK(fit(a, data, cfg) == fit(b, data, cfg));
  auto pa = a.parameters(), pb = b.parameters();
  for (std::size_t i = 0; i < pa.size(); ++i) CHECK(pa[i].var.value() == pb[i].var.value());
}

TEST_CASE("zero learning rate leaves the loss constant") {
  auto data = random_sequences(3);
  auto cfg = small_config(ModelKind::kBaseline);
  cfg.learning_rate = 0.0;
  cfg.augment = false;
  SegmentationModel<float> m(cfg.model, cfg.ggp, cfg.kind, cfg.seed);
  auto curve = fit(m, data, cfg);
  REQUIRE(curve.size() == 3);
  CHECK(curve[0] == curve[1]);
  CHECK(curve[1] == curve[2]);
}

TEST_CASE("step limit stops training") {
  auto data = random_sequences(4);
  auto cfg = small_config(ModelKind::kGraph);
  cfg.max_steps = 6;
  std::size_t last_steps = 0;
  SegmentationModel<float> m(cfg.model, cfg.ggp, cfg.kind, cfg.seed);
  auto curve = fit(m, data, cfg, [&](const EpochRecord& r) { last_steps = r.steps; });
  CHECK(curve.size() == 2);
  CHECK(last_steps == 6);
  CHECK_THROWS_AS(fit(m, std::vector<SliceSequence>{}, cfg), UsageError);
}

TEST_CASE("single-sequence overfit") {
  auto curve = overfit_curve(50);
  CHECK(*std::min_element(curve.begin(), curve.end()) < 0.1);
}

TEST_CASE("config overrides merge over defaults") {
  auto cfg = train_config_from_json({{"kind", "baseline"},
                                     {"epochs", 4},
                                     {"target", "ptv"},
                                     {"modelConfig", {{"baseChannels", 8}}}});
  CHECK(cfg.kind == ModelKind::kBaseline);
  CHECK(cfg.epochs == 4);
  CHECK(cfg.target == Target::kPtv);
  CHECK(cfg.model.base_channels == 8);
  CHECK(cfg.model.depth == 3);
  CHECK(cfg.learning_rate == 1e-3);
  CHECK_THROWS_AS(train_config_from_json({{"kind", "unet3d"}}), UsageError);
  CHECK_THROWS_AS(train_config_from_json({{"target", "oar"}}), UsageError);
}

TEST_CASE("training writes a loadable checkpoint and a json log") {
  auto dir = fs::temp_directory_path() / "ggpseg_unit_train";
  fs::remove_all(dir);
  auto corpus = generate_corpus(3, 5);
  TrainConfig cfg = experiment_config(ModelKind::kGraph);
  cfg.model.base_channels = 2;
  cfg.epochs = 1;
  cfg.max_steps = 3;
  cfg.fold_count = 3;
  cfg.fold = 0;
  cfg.checkpoint_dir = dir;
  std::ostringstream log;
  auto result = train_on(corpus, cfg, &log);
  CHECK(result.loss_curve.size() == 1);
  CHECK(result.train_volumes.size() == 2);
  CHECK(log.str().find("\"epoch\"") != std::string::npos);
  auto loaded = load_model(dir);
  CHECK(loaded.manifest["target"] == "gtv");
  auto report = evaluate_checkpoint(dir, corpus, 0);
  CHECK(report.fold == 0);
  CHECK(report.dsc.count > 0);
  fs::remove_all(dir);
}

TEST_CASE("evaluation never sees training volumes") {
  auto split = split_for_fold(20, 5, kDefaultSplitSeed, 1);
  auto corpus = generate_corpus(20, 3);
  auto train = sequences_of(corpus, split.train, 5);
  auto test = sequences_of(corpus, split.test, 5);
  std::set<std::string> train_names, test_names;
  for (auto& s : train) train_names.insert(s.volume);
  for (auto& s : test) test_names.insert(s.volume);
  for (auto& n : test_names) CHECK(train_names.count(n) == 0);
  CHECK(train_names.size() == 16);
  CHECK(test_names.size() == 4);
}

}  // TEST_SUITE
