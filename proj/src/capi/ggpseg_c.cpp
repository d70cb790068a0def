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

#include "ggpseg/ggpseg.h"

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <string>
#include <utility>

#include "interactive/interactive.hpp"
#include "json.hpp"
#include "model/checkpoint.hpp"
#include "numerics/errors.hpp"
#include "phantom/phantom.hpp"
#include "service/service.hpp"
#include "trainer/trainer.hpp"

struct ggp_volume {
  ggpseg::Volume volume;
};

struct ggp_model {
  ggpseg::SegmentationModel<float> model;
  nlohmann::json manifest;
};

struct ggp_interactive {
  ggpseg::InteractivePropagator propagator;
  nlohmann::json manifest;
};

struct ggp_service {
  std::unique_ptr<ggpseg::Service> service;
};

namespace {

using nlohmann::json;

thread_local std::string last_error;

template <typename F>
ggp_status guarded(F&& body) {
  last_error.clear();
  try {
    body();
    return GGP_OK;
  } catch (const ggpseg::Error& e) {
    last_error = e.what();
    return static_cast<ggp_status>(e.kind());
  } catch (const json::exception& e) {
    last_error = e.what();
    return GGP_ERR_FORMAT;
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return GGP_ERR_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return GGP_ERR_INTERNAL;
  }
}

void require(const void* p, const char* what) {
  if (!p) throw ggpseg::UsageError(std::string(what) + " must not be null");
}

json parse_optional(const char* text) {
  if (!text || !*text) return json::object();
  json j = json::parse(text);
  if (!j.is_object()) throw ggpseg::FormatError("options must be a JSON object");
  return j;
}

char* to_c_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void give(char** out, const json& j) {
  if (out) *out = to_c_string(j.dump());
}

/// Optional JSON-lines log sink.
struct LogFile {
  std::unique_ptr<std::ofstream> file;
  explicit LogFile(const char* path) {
    if (path && *path) {
      file = std::make_unique<std::ofstream>(path, std::ios::app);
      if (!*file) throw ggpseg::IoError(std::string("cannot open log ") + path);
    }
  }
  std::ostream* get() { return file ? file.get() : nullptr; }
};

ggpseg::Target target_of(const char* name) {
  require(name, "target");
  const auto t = ggpseg::parse_target(name);
  if (!t) throw ggpseg::UsageError(std::string("unknown target ") + name);
  return *t;
}

ggpseg::ReconstructionConfig reconstruction_from(const json& j) {
  ggpseg::ReconstructionConfig c;
  c.step_size = j.value("stepSize", c.step_size);
  c.max_iters = j.value("maxIters", c.max_iters);
  c.stop_dsc = j.value("stopDsc", c.stop_dsc);
  c.max_halvings = j.value("maxHalvings", c.max_halvings);
  return c;
}

json reconstruction_json(const ggpseg::ReconstructionConfig& c) {
  return {{"stepSize", c.step_size},
          {"maxIters", c.max_iters},
          {"stopDsc", c.stop_dsc},
          {"maxHalvings", c.max_halvings}};
}

json cv_json(const ggpseg::CrossValidationResult& r) {
  json folds = json::array();
  for (const auto& f : r.folds) folds.push_back(ggpseg::to_json(f));
  return {{"folds", folds}, {"aggregate", ggpseg::to_json(r.aggregate)}};
}

std::vector<ggpseg::Volume> fold_volumes(const std::vector<ggpseg::Volume>& corpus,
                                         std::size_t fold_count, std::uint64_t split_seed,
                                         int fold, bool train) {
  const auto split = ggpseg::split_for_fold(corpus.size(), fold_count, split_seed, fold);
  std::vector<ggpseg::Volume> out;
  for (std::size_t i : train ? split.train : split.test) out.push_back(corpus[i]);
  return out;
}

}  // namespace

extern "C" {

const char* ggp_version(void) { return "1.0.0"; }

const char* ggp_last_error(void) { return last_error.c_str(); }

const char* ggp_status_name(ggp_status status) {
  switch (status) {
    case GGP_OK: return "ok";
    case GGP_ERR_DIMENSION: return "dimension-error";
    case GGP_ERR_USAGE: return "usage-error";
    case GGP_ERR_NUMERIC: return "numeric-error";
    case GGP_ERR_IO: return "io-error";
    case GGP_ERR_FORMAT: return "format-error";
    case GGP_ERR_NOT_FOUND: return "not-found";
    case GGP_ERR_CONFLICT: return "conflict";
    case GGP_ERR_INTERNAL: return "internal-error";
  }
  return "unknown";
}

void ggp_string_free(char* s) { delete[] s; }

ggp_status ggp_generate_corpus(const char* dir, size_t count, uint64_t seed,
                               const char* options_json) {
  return guarded([&] {
    require(dir, "dir");
    const json options = parse_optional(options_json);
    for (std::size_t i = 0; i < count; ++i) {
      json spec = ggpseg::to_json(ggpseg::random_phantom_spec(i, seed));
      spec.merge_patch(options);
      char name[32];
      std::snprintf(name, sizeof name, "phantom_%03zu", i);
      ggpseg::save_volume(
          ggpseg::generate_phantom(ggpseg::phantom_spec_from_json(spec), name), dir);
    }
  });
}

ggp_status ggp_volume_generate(uint64_t seed, size_t index, ggp_volume** out) {
  return guarded([&] {
    require(out, "out");
    char name[32];
    std::snprintf(name, sizeof name, "phantom_%03zu", index);
    *out = new ggp_volume{
        ggpseg::generate_phantom(ggpseg::random_phantom_spec(index, seed), name)};
  });
}

ggp_status ggp_volume_load(const char* header_path, ggp_volume** out) {
  return guarded([&] {
    require(header_path, "header_path");
    require(out, "out");
    *out = new ggp_volume{ggpseg::load_volume(header_path)};
  });
}

ggp_status ggp_volume_save(const ggp_volume* volume, const char* dir) {
  return guarded([&] {
    require(volume, "volume");
    require(dir, "dir");
    ggpseg::save_volume(volume->volume, dir);
  });
}

ggp_status ggp_volume_shape(const ggp_volume* volume, size_t* depth, size_t* height,
                            size_t* width) {
  return guarded([&] {
    require(volume, "volume");
    if (depth) *depth = volume->volume.depth();
    if (height) *height = volume->volume.height();
    if (width) *width = volume->volume.width();
  });
}

ggp_status ggp_volume_mask(const ggp_volume* volume, const char* target, size_t slice,
                           uint8_t* out, size_t out_len) {
  return guarded([&] {
    require(volume, "volume");
    require(out, "out");
    const auto& v = volume->volume;
    if (!v.has_masks()) throw ggpseg::NotFoundError(v.name + " has no reference masks");
    if (slice >= v.depth()) throw ggpseg::UsageError("slice out of range");
    if (out_len != v.height() * v.width()) {
      throw ggpseg::DimensionError("mask buffer must hold height*width bytes");
    }
    const auto m = ggpseg::to_mask(v.mask_plane(target_of(target), slice));
    std::memcpy(out, m.data(), m.size());
  });
}

void ggp_volume_free(ggp_volume* volume) { delete volume; }

ggp_status ggp_train(const char* config_json, const char* log_path, char** result_json) {
  return guarded([&] {
    const auto cfg = ggpseg::train_config_from_json(parse_optional(config_json));
    LogFile log(log_path);
    auto result = ggpseg::train(cfg, log.get());
    give(result_json, {{"checkpoint", result.checkpoint.string()},
                       {"lossCurve", result.loss_curve},
                       {"trainVolumes", result.train_volumes}});
  });
}

ggp_status ggp_cross_validate(const char* config_json, const char* log_path,
                              char** result_json) {
  return guarded([&] {
    const auto cfg = ggpseg::train_config_from_json(parse_optional(config_json));
    if (cfg.data_dir.empty()) throw ggpseg::UsageError("dataDir is required");
    LogFile log(log_path);
    give(result_json, cv_json(ggpseg::cross_validate(ggpseg::load_corpus(cfg.data_dir), cfg,
                                                     log.get())));
  });
}

ggp_status ggp_evaluate(const char* checkpoint_dir, const char* data_dir, int fold,
                        char** report_json) {
  return guarded([&] {
    require(checkpoint_dir, "checkpoint_dir");
    require(data_dir, "data_dir");
    const auto corpus = ggpseg::load_corpus(data_dir);
    const auto report = ggpseg::evaluate_checkpoint(
        checkpoint_dir, corpus, fold < 0 ? std::nullopt : std::optional<int>(fold));
    give(report_json, ggpseg::to_json(report));
  });
}

ggp_status ggp_model_load(const char* checkpoint_dir, ggp_model** out) {
  return guarded([&] {
    require(checkpoint_dir, "checkpoint_dir");
    require(out, "out");
    auto loaded = ggpseg::load_model(checkpoint_dir);
    loaded.model.freeze();
    *out = new ggp_model{std::move(loaded.model), std::move(loaded.manifest)};
  });
}

ggp_status ggp_model_info(const ggp_model* model, char** manifest_json) {
  return guarded([&] {
    require(model, "model");
    give(manifest_json, model->manifest);
  });
}

ggp_status ggp_model_predict(const ggp_model* model, const ggp_volume* volume, size_t slice,
                             float* out, size_t out_len) {
  return guarded([&] {
    require(model, "model");
    require(volume, "volume");
    require(out, "out");
    const auto& v = volume->volume;
    if (slice >= v.depth()) throw ggpseg::UsageError("slice out of range");
    if (out_len != v.height() * v.width()) {
      throw ggpseg::DimensionError("output buffer must hold height*width floats");
    }
    ggpseg::NoGradGuard no_grad;
    const auto result = model->model.forward(
        ggpseg::make_sequence(v, slice, model->model.config().sequence_length));
    std::memcpy(out, result.probability.value().data(), out_len * sizeof(float));
  });
}

void ggp_model_free(ggp_model* model) { delete model; }

ggp_status ggp_interactive_train(const char* config_json, const char* log_path,
                                 char** result_json) {
  return guarded([&] {
    const json j = parse_optional(config_json);
    const std::string checkpoint = j.at("checkpoint").get<std::string>();
    const std::string data_dir = j.at("dataDir").get<std::string>();
    const std::string out_dir = j.at("outDir").get<std::string>();
    auto loaded = ggpseg::load_model(checkpoint);
    loaded.model.freeze();
    const auto& manifest = loaded.manifest;

    ggpseg::InteractiveTrainConfig cfg;
    cfg.target = target_of(manifest.value("target", "gtv").c_str());
    cfg.epochs = j.value("epochs", cfg.epochs);
    cfg.learning_rate = j.value("lr", cfg.learning_rate);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.interactive.lambda = j.value("lambda", cfg.interactive.lambda);
    cfg.interactive.seed = cfg.seed;
    cfg.reconstruction = reconstruction_from(j.value("reconstruction", json::object()));

    // Train on the same volumes as the main model so its held-out fold
    // stays unseen.
    const auto corpus = ggpseg::load_corpus(data_dir);
    std::vector<ggpseg::Volume> volumes;
    const auto names = manifest.value("trainVolumes", std::vector<std::string>{});
    for (const auto& v : corpus) {
      if (names.empty() || std::find(names.begin(), names.end(), v.name) != names.end()) {
        volumes.push_back(v);
      }
    }
    LogFile log(log_path);
    auto propagator = ggpseg::train_interactive(loaded.model, volumes, cfg, log.get());
    std::vector<std::string> used;
    for (const auto& v : volumes) used.push_back(v.name);
    json extra{{"target", std::string(ggpseg::target_name(cfg.target))},
               {"mainCheckpoint", checkpoint},
               {"fold", manifest.value("fold", -1)},
               {"trainVolumes", used},
               {"train",
                {{"epochs", cfg.epochs},
                 {"lr", cfg.learning_rate},
                 {"seed", cfg.seed},
                 {"reconstruction", reconstruction_json(cfg.reconstruction)}}}};
    ggpseg::save_interactive(propagator, out_dir, extra);
    give(result_json, {{"checkpoint", out_dir}, {"trainVolumes", used}});
  });
}

ggp_status ggp_interactive_load(const char* checkpoint_dir, ggp_interactive** out) {
  return guarded([&] {
    require(checkpoint_dir, "checkpoint_dir");
    require(out, "out");
    auto p = ggpseg::load_interactive(checkpoint_dir);
    p.freeze();
    *out = new ggp_interactive{std::move(p), ggpseg::read_checkpoint(checkpoint_dir).manifest};
  });
}

void ggp_interactive_free(ggp_interactive* interactive) { delete interactive; }

ggp_status ggp_refine(const ggp_model* model, const ggp_interactive* interactive,
                      const ggp_volume* volume, size_t slice, const uint8_t* mask,
                      size_t mask_len, const char* options_json, uint8_t* refined,
                      size_t refined_len, char** result_json) {
  return guarded([&] {
    require(model, "model");
    require(interactive, "interactive");
    require(volume, "volume");
    require(mask, "mask");
    const auto& v = volume->volume;
    const std::size_t plane = v.height() * v.width();
    const std::size_t n = interactive->propagator.config().nodes;
    if (slice >= v.depth()) throw ggpseg::UsageError("slice out of range");
    if (mask_len != plane) throw ggpseg::DimensionError("mask must hold height*width bytes");
    if (refined && refined_len != n * plane) {
      throw ggpseg::DimensionError("refined buffer must hold sequence_length*height*width bytes");
    }
    const json options = parse_optional(options_json);
    ggpseg::Mask user(mask, mask + mask_len);
    for (auto b : user)
      if (b > 1) throw ggpseg::FormatError("mask values must be 0 or 1");

    const std::size_t half = n / 2;
    std::size_t center =
        v.depth() > n ? std::clamp<std::size_t>(slice, half, v.depth() - 1 - half) : slice;
    center = options.value("center", center);
    const auto window = ggpseg::window_indices(center, n, v.depth());
    const auto it = std::find(window.begin(), window.end(), slice);
    if (it == window.end()) throw ggpseg::UsageError("slice is not inside the sequence");
    const auto position = static_cast<std::size_t>(it - window.begin());

    const auto prediction = ggpseg::predict_volume(model->model, v);
    const auto result = ggpseg::refine_neighbors(model->model, interactive->propagator,
                                                 prediction, center, position, user,
                                                 reconstruction_from(options));
    json slices = json::array();
    for (std::size_t u = 0; u < n; ++u) {
      if (refined) std::memcpy(refined + u * plane, result.masks[u].data(), plane);
      json entry{{"position", u}, {"slice", window[u]}, {"edited", u == position}};
      if (v.has_masks()) {
        const ggpseg::Target target = target_of(model->manifest.value("target", "gtv").c_str());
        const auto truth = ggpseg::to_mask(v.mask_plane(target, window[u]));
        const auto before = ggpseg::dsc(prediction.masks[window[u]], truth);
        const auto after = ggpseg::dsc(result.masks[u], truth);
        entry["dscBefore"] = before ? json(*before) : json(nullptr);
        entry["dscAfter"] = after ? json(*after) : json(nullptr);
      }
      slices.push_back(entry);
    }
    give(result_json, {{"center", center},
                       {"editedPosition", position},
                       {"reconstructionTrace", ggpseg::to_json(result.trace)},
                       {"slices", slices}});
  });
}

ggp_status ggp_interactive_evaluate(const ggp_model* model, const ggp_interactive* interactive,
                                    const char* data_dir, int fold, const char* options_json,
                                    char** result_json) {
  return guarded([&] {
    require(model, "model");
    require(interactive, "interactive");
    require(data_dir, "data_dir");
    const json options = parse_optional(options_json);
    const auto& manifest = model->manifest;
    const int chosen = fold >= 0 ? fold : manifest.value("fold", -1);
    const auto corpus = ggpseg::load_corpus(data_dir);
    const auto volumes =
        chosen < 0 ? corpus
                   : fold_volumes(corpus, manifest.value("foldCount", std::size_t{5}),
                                  manifest.value("splitSeed", ggpseg::kDefaultSplitSeed), chosen,
                                  false);
    const auto target = target_of(manifest.value("target", "gtv").c_str());
    auto ev = ggpseg::evaluate_interactive(model->model, interactive->propagator, volumes, target,
                                           reconstruction_from(options));
    json out = ggpseg::to_json(ev);
    out["fold"] = chosen;
    give(result_json, out);
  });
}

ggp_status ggp_service_create(const char* const* checkpoints, size_t checkpoint_count,
                              const char* const* interactive, size_t interactive_count,
                              ggp_service** out) {
  return guarded([&] {
    require(out, "out");
    if (checkpoint_count > 0) require(checkpoints, "checkpoints");
    if (interactive_count > 0) require(interactive, "interactive");
    std::vector<std::filesystem::path> main_dirs, interactive_dirs;
    for (std::size_t i = 0; i < checkpoint_count; ++i) main_dirs.emplace_back(checkpoints[i]);
    for (std::size_t i = 0; i < interactive_count; ++i) {
      interactive_dirs.emplace_back(interactive[i]);
    }
    auto service = ggpseg::Service::from_checkpoints(main_dirs, interactive_dirs);
    *out = new ggp_service{std::move(service)};
  });
}

ggp_status ggp_service_listen(ggp_service* service, const char* host, int port,
                              void (*on_bound)(int port, void* user), void* user) {
  return guarded([&] {
    require(service, "service");
    service->service->listen(host ? host : "127.0.0.1", port, [&](int bound) {
      if (on_bound) on_bound(bound, user);
    });
  });
}

ggp_status ggp_service_stop(ggp_service* service) {
  return guarded([&] {
    require(service, "service");
    service->service->stop();
  });
}

void ggp_service_free(ggp_service* service) { delete service; }

}  // extern "C"
