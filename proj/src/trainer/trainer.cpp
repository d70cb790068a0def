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

#include "trainer/trainer.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "metrics/losses.hpp"
#include "model/checkpoint.hpp"
#include "numerics/rng.hpp"

namespace ggpseg {
namespace {

std::string_view kind_label(ModelKind kind) {
  return kind == ModelKind::kGraph ? "ggp" : "baseline";
}

void emit(const nlohmann::json& line, std::ostream* log, std::ofstream* file) {
  const std::string text = line.dump();
  if (log) *log << text << '\n' << std::flush;
  if (file && *file) *file << text << '\n' << std::flush;
}

}  // namespace

void TrainConfig::validate() const {
  model.validate();
  ggp.validate();
  if (learning_rate < 0.0) throw UsageError("learning rate must be non-negative");
  if (fold_count == 0) throw UsageError("fold count must be positive");
  if (fold >= static_cast<int>(fold_count)) throw UsageError("fold index out of range");
}

nlohmann::json to_json(const TrainConfig& cfg) {
  return {{"target", target_name(cfg.target)},
          {"kind", kind_label(cfg.kind)},
          {"epochs", cfg.epochs},
          {"lr", cfg.learning_rate},
          {"optimizer", "adam"},
          {"batch", 1},
          {"seed", cfg.seed},
          {"modelConfig", to_json(cfg.model)},
          {"ggpConfig", to_json(cfg.ggp)},
          {"foldCount", cfg.fold_count},
          {"fold", cfg.fold},
          {"splitSeed", cfg.split_seed},
          {"maxSteps", cfg.max_steps},
          {"augment", cfg.augment}};
}

TrainConfig train_config_from_json(const nlohmann::json& overrides) {
  nlohmann::json j = to_json(TrainConfig{});
  j.merge_patch(overrides);
  try {
    TrainConfig cfg;
    const auto target = parse_target(j.at("target").get<std::string>());
    if (!target) throw UsageError("unknown target " + j.at("target").dump());
    cfg.target = *target;
    const auto kind = j.at("kind").get<std::string>();
    if (kind != "ggp" && kind != "baseline") throw UsageError("kind must be ggp or baseline");
    cfg.kind = kind == "ggp" ? ModelKind::kGraph : ModelKind::kBaseline;
    cfg.epochs = j.at("epochs").get<std::size_t>();
    cfg.learning_rate = j.at("lr").get<double>();
    cfg.seed = j.at("seed").get<std::uint64_t>();
    cfg.model = model_config_from_json(j.at("modelConfig"));
    cfg.ggp = ggp_config_from_json(j.at("ggpConfig"));
    cfg.fold_count = j.at("foldCount").get<std::size_t>();
    cfg.fold = j.at("fold").get<int>();
    cfg.split_seed = j.at("splitSeed").get<std::uint64_t>();
    cfg.max_steps = j.at("maxSteps").get<std::size_t>();
    cfg.augment = j.at("augment").get<bool>();
    if (j.contains("dataDir")) cfg.data_dir = j.at("dataDir").get<std::string>();
    if (j.contains("checkpointDir")) cfg.checkpoint_dir = j.at("checkpointDir").get<std::string>();
    cfg.validate();
    return cfg;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("train config: ") + e.what());
  }
}

std::vector<double> fit(SegmentationModel<float>& model,
                        std::span<const SliceSequence> sequences, const TrainConfig& cfg,
                        const EpochCallback& on_epoch) {
  if (sequences.empty()) throw UsageError("no training sequences");
  AdamConfig adam_config;
  adam_config.learning_rate = cfg.learning_rate;
  auto params = vars_of(model.parameters());
  Adam<float> optimizer(params, adam_config);
  Rng rng(cfg.seed ^ 0x5eedULL);
  Rng augment_rng(cfg.seed ^ 0xa11ceULL);
  const unsigned transforms = sequences.front().height() == sequences.front().width() ? 8 : 4;
  std::vector<std::size_t> order(sequences.size());
  std::vector<double> losses(sequences.size());
  std::vector<double> curve;
  std::size_t steps = 0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order.begin(), order.end());
    std::size_t taken = 0;
    for (std::size_t idx : order) {
      if (cfg.max_steps && steps >= cfg.max_steps) break;
      SliceSequence augmented;
      if (cfg.augment) {
        augmented = dihedral_transform(sequences[idx],
                                       static_cast<unsigned>(augment_rng.index(transforms)));
      }
      const SliceSequence& s = cfg.augment ? augmented : sequences[idx];
      auto out = model.forward(s);
      auto loss = dice_loss(out.probability, s.slice_mask(cfg.target, s.middle_index()));
      optimizer.zero_grad();
      backward(loss);
      optimizer.step();
      losses[idx] = loss.value().item();
      ++steps;
      ++taken;
    }
    if (taken == 0) break;
    // Sum in sequence order so the epoch mean is independent of the shuffle.
    double total = 0.0;
    std::size_t counted = 0;
    std::vector<bool> seen(sequences.size(), false);
    for (std::size_t k = 0; k < taken; ++k) seen[order[k]] = true;
    for (std::size_t i = 0; i < losses.size(); ++i) {
      if (seen[i]) {
        total += losses[i];
        ++counted;
      }
    }
    curve.push_back(total / static_cast<double>(counted));
    if (on_epoch) on_epoch({epoch, curve.back(), steps});
  }
  return curve;
}

MetricsReport evaluate_model(const SegmentationModel<float>& model,
                             std::span<const SliceSequence> sequences, Target target,
                             int fold) {
  NoGradGuard no_grad;
  MetricAccumulator acc;
  for (const auto& s : sequences) {
    auto out = model.forward(s);
    const Mask pred = binarize(out.probability.value());
    const Mask truth = to_mask(s.slice_mask(target, s.middle_index()));
    acc.add(pred, truth);
  }
  return MetricsReport::from(acc, std::string(target_name(target)), fold);
}

FoldSplit split_for_fold(std::size_t volume_count, std::size_t fold_count,
                         std::uint64_t split_seed, int fold) {
  FoldSplit split;
  const auto assignment = split_folds(volume_count, fold_count, split_seed);
  for (std::size_t i = 0; i < volume_count; ++i) {
    if (fold >= 0 && assignment[i] == fold) split.test.push_back(i);
    else split.train.push_back(i);
  }
  return split;
}

std::vector<SliceSequence> sequences_of(const std::vector<Volume>& volumes,
                                        std::span<const std::size_t> indices,
                                        std::size_t n) {
  std::vector<SliceSequence> out;
  for (std::size_t i : indices) {
    auto seqs = slice_sequences(volumes.at(i), n);
    std::move(seqs.begin(), seqs.end(), std::back_inserter(out));
  }
  return out;
}

TrainResult train_on(const std::vector<Volume>& corpus, const TrainConfig& cfg,
                     std::ostream* log) {
  cfg.validate();
  const FoldSplit split = split_for_fold(corpus.size(), cfg.fold_count, cfg.split_seed, cfg.fold);
  const auto data = sequences_of(corpus, split.train, cfg.model.sequence_length);

  TrainResult result{{}, {}, {}, SegmentationModel<float>(cfg.model, cfg.ggp, cfg.kind, cfg.seed)};
  for (std::size_t i : split.train) result.train_volumes.push_back(corpus[i].name);

  std::ofstream log_file;
  if (!cfg.checkpoint_dir.empty()) {
    std::filesystem::create_directories(cfg.checkpoint_dir);
    log_file.open(cfg.checkpoint_dir / "train_log.jsonl", std::ios::trunc);
    result.checkpoint = cfg.checkpoint_dir;
  }
  nlohmann::json header = to_json(cfg);
  header["event"] = "config";
  header["trainSequences"] = data.size();
  emit(header, log, log_file.is_open() ? &log_file : nullptr);

  nlohmann::json manifest_extra = {{"target", target_name(cfg.target)},
                                   {"fold", cfg.fold},
                                   {"foldCount", cfg.fold_count},
                                   {"splitSeed", cfg.split_seed},
                                   {"trainVolumes", result.train_volumes},
                                   {"train", to_json(cfg)}};
  result.loss_curve = fit(result.model, data, cfg, [&](const EpochRecord& r) {
    emit({{"event", "epoch"}, {"epoch", r.epoch}, {"loss", r.mean_loss}, {"steps", r.steps}},
         log, log_file.is_open() ? &log_file : nullptr);
    if (!cfg.checkpoint_dir.empty()) {
      nlohmann::json extra = manifest_extra;
      extra["epoch"] = r.epoch;
      save_model(result.model, cfg.checkpoint_dir, extra);
    }
  });
  return result;
}

TrainResult train(const TrainConfig& cfg, std::ostream* log) {
  return train_on(load_corpus(cfg.data_dir), cfg, log);
}

MetricsReport evaluate_checkpoint(const std::filesystem::path& checkpoint,
                                  const std::vector<Volume>& corpus, std::optional<int> fold) {
  LoadedModel loaded = load_model(checkpoint);
  const auto& manifest = loaded.manifest;
  const int held_out = fold.value_or(manifest.value("fold", -1));
  if (held_out < 0) throw UsageError("checkpoint has no held-out fold to evaluate");
  const std::size_t fold_count = manifest.value("foldCount", std::size_t{5});
  const std::uint64_t split_seed = manifest.value("splitSeed", kDefaultSplitSeed);
  const auto target = parse_target(manifest.value("target", std::string("gtv")));
  if (!target) throw FormatError("checkpoint names an unknown target");

  const FoldSplit split = split_for_fold(corpus.size(), fold_count, split_seed, held_out);
  std::set<std::string> trained;
  for (const auto& name : manifest.value("trainVolumes", std::vector<std::string>{})) {
    trained.insert(name);
  }
  for (std::size_t i : split.test) {
    if (trained.count(corpus[i].name)) {
      throw UsageError("volume " + corpus[i].name + " was used to train this checkpoint");
    }
  }
  const auto data = sequences_of(corpus, split.test, loaded.model.config().sequence_length);
  return evaluate_model(loaded.model, data, *target, held_out);
}

CrossValidationResult cross_validate(const std::vector<Volume>& corpus,
                                     const TrainConfig& cfg, std::ostream* log) {
  CrossValidationResult result;
  for (std::size_t k = 0; k < cfg.fold_count; ++k) {
    TrainConfig fold_cfg = cfg;
    fold_cfg.fold = static_cast<int>(k);
    if (!cfg.checkpoint_dir.empty()) {
      fold_cfg.checkpoint_dir = cfg.checkpoint_dir / ("fold_" + std::to_string(k));
    }
    TrainResult trained = train_on(corpus, fold_cfg, log);
    const FoldSplit split =
        split_for_fold(corpus.size(), cfg.fold_count, cfg.split_seed, fold_cfg.fold);
    const auto test = sequences_of(corpus, split.test, cfg.model.sequence_length);
    MetricsReport report = evaluate_model(trained.model, test, cfg.target, fold_cfg.fold);
    if (log) {
      nlohmann::json line = to_json(report);
      line["event"] = "fold";
      line["kind"] = kind_label(cfg.kind);
      *log << line.dump() << '\n' << std::flush;
    }
    result.folds.push_back(report);
    result.models.push_back(std::move(trained.model));
  }
  result.aggregate = MetricsReport::aggregate(result.folds);
  return result;
}

}  // namespace ggpseg
