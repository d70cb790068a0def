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

// Command-line front end. Talks to the library only through the C API.

#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ggpseg/ggpseg.h"
#include "json.hpp"

namespace {

using nlohmann::json;

struct Failure {
  int code;
};

void check(ggp_status status) {
  if (status != GGP_OK) {
    std::cerr << "error (" << ggp_status_name(status) << "): " << ggp_last_error() << '\n';
    throw Failure{static_cast<int>(status)};
  }
}

json take(char* text) {
  json j = json::parse(text);
  ggp_string_free(text);
  return j;
}

void emit(const json& j, const std::string& out_path) {
  std::cout << j.dump(2) << '\n';
  if (!out_path.empty()) {
    std::ofstream out(out_path);
    out << j.dump(2) << '\n';
    if (!out) {
      std::cerr << "error: cannot write " << out_path << '\n';
      throw Failure{static_cast<int>(GGP_ERR_IO)};
    }
  }
}

std::string read_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    std::cerr << "error: cannot read " << path << '\n';
    throw Failure{static_cast<int>(GGP_ERR_IO)};
  }
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

template <typename T>
struct Opt {
  T value{};
  CLI::Option* option = nullptr;
  bool given() const { return option && option->count() > 0; }
};

/// Flags shared by train, baseline and cv; only flags actually given
/// override the library defaults.
struct TrainFlags {
  std::string data, checkpoint, log, out;
  Opt<std::string> target, kind;
  Opt<std::size_t> epochs, depth, base, length, edge_types, steps, fold_count, max_steps;
  Opt<double> lr;
  Opt<std::uint64_t> seed, split_seed;
  Opt<int> fold;
  bool no_augment = false;

  void attach(CLI::App* app, bool with_kind) {
    app->add_option("--data", data, "Corpus directory")->required();
    app->add_option("--checkpoint", checkpoint, "Checkpoint output directory");
    app->add_option("--log", log, "JSON-lines log file (appended)");
    app->add_option("--out", out, "Also write the result JSON here");
    target.option = app->add_option("--target", target.value, "gtv, ctv or ptv");
    if (with_kind) kind.option = app->add_option("--kind", kind.value, "ggp or baseline");
    epochs.option = app->add_option("--epochs", epochs.value);
    lr.option = app->add_option("--lr", lr.value);
    seed.option = app->add_option("--seed", seed.value);
    depth.option = app->add_option("--depth", depth.value, "Encoder levels");
    base.option = app->add_option("--base-channels", base.value);
    length.option = app->add_option("--sequence-length", length.value);
    edge_types.option = app->add_option("--edge-types", edge_types.value);
    steps.option = app->add_option("--steps", steps.value, "Propagation steps T");
    fold_count.option = app->add_option("--fold-count", fold_count.value);
    fold.option = app->add_option("--fold", fold.value, "Held-out fold (-1: none)");
    split_seed.option = app->add_option("--split-seed", split_seed.value);
    max_steps.option = app->add_option("--max-steps", max_steps.value);
    app->add_flag("--no-augment", no_augment, "Disable flip/transpose augmentation");
  }

  json config(const char* forced_kind) const {
    json j{{"dataDir", data}};
    if (!checkpoint.empty()) j["checkpointDir"] = checkpoint;
    if (forced_kind) j["kind"] = forced_kind;
    if (kind.given()) j["kind"] = kind.value;
    if (target.given()) j["target"] = target.value;
    if (epochs.given()) j["epochs"] = epochs.value;
    if (lr.given()) j["lr"] = lr.value;
    if (seed.given()) j["seed"] = seed.value;
    if (fold_count.given()) j["foldCount"] = fold_count.value;
    if (fold.given()) j["fold"] = fold.value;
    if (split_seed.given()) j["splitSeed"] = split_seed.value;
    if (max_steps.given()) j["maxSteps"] = max_steps.value;
    if (no_augment) j["augment"] = false;
    if (depth.given()) j["modelConfig"]["depth"] = depth.value;
    if (base.given()) j["modelConfig"]["baseChannels"] = base.value;
    if (length.given()) j["modelConfig"]["sequenceLength"] = length.value;
    if (edge_types.given()) j["ggpConfig"]["edgeTypes"] = edge_types.value;
    if (steps.given()) j["ggpConfig"]["steps"] = steps.value;
    return j;
  }
};

struct ReconstructionFlags {
  Opt<double> step_size, stop_dsc;
  Opt<std::size_t> max_iters;

  void attach(CLI::App* app) {
    step_size.option = app->add_option("--step-size", step_size.value, "Latent step size alpha");
    max_iters.option = app->add_option("--max-iters", max_iters.value);
    stop_dsc.option = app->add_option("--stop-dsc", stop_dsc.value);
  }

  json options() const {
    json j = json::object();
    if (step_size.given()) j["stepSize"] = step_size.value;
    if (max_iters.given()) j["maxIters"] = max_iters.value;
    if (stop_dsc.given()) j["stopDsc"] = stop_dsc.value;
    return j;
  }
};

ggp_service* running_service = nullptr;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Slice-sequence target segmentation with gated graph propagation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", ggp_version());

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "Write a synthetic phantom corpus");
  std::string gen_out;
  std::size_t gen_count = 20;
  std::uint64_t gen_seed = 2026;
  Opt<double> gen_decoy;
  gen->add_option("--out", gen_out, "Output directory")->required();
  gen->add_option("--count", gen_count, "Number of phantoms")->capture_default_str();
  gen->add_option("--seed", gen_seed, "Corpus seed")->capture_default_str();
  gen_decoy.option = gen->add_option("--decoy-probability", gen_decoy.value,
                                     "Per-slice probability of a decoy uptake blob");

  // train / baseline / cv
  TrainFlags train_flags, baseline_flags, cv_flags;
  auto* train = app.add_subcommand("train", "Train the graph model");
  train_flags.attach(train, false);
  auto* baseline = app.add_subcommand("baseline", "Train the slice-independent baseline");
  baseline_flags.attach(baseline, false);
  auto* cv = app.add_subcommand("cv", "Cross-validate (graph model unless --kind baseline)");
  cv_flags.attach(cv, true);

  // eval
  auto* eval = app.add_subcommand("eval", "Score a checkpoint on a held-out fold");
  std::string eval_ckpt, eval_data, eval_out;
  int eval_fold = -1;
  eval->add_option("--checkpoint", eval_ckpt)->required();
  eval->add_option("--data", eval_data)->required();
  eval->add_option("--fold", eval_fold, "Fold to score (-1: the checkpoint's own)");
  eval->add_option("--out", eval_out, "Also write the report here");

  // train-interactive
  auto* train_int = app.add_subcommand("train-interactive", "Train the refinement propagator");
  std::string ti_ckpt, ti_data, ti_out, ti_log, ti_result;
  Opt<std::size_t> ti_epochs;
  Opt<double> ti_lr, ti_lambda;
  Opt<std::uint64_t> ti_seed;
  ReconstructionFlags ti_rec;
  train_int->add_option("--checkpoint", ti_ckpt, "Trained main model")->required();
  train_int->add_option("--data", ti_data)->required();
  train_int->add_option("--interactive-checkpoint", ti_out, "Output directory")->required();
  train_int->add_option("--log", ti_log);
  train_int->add_option("--out", ti_result);
  ti_epochs.option = train_int->add_option("--epochs", ti_epochs.value);
  ti_lr.option = train_int->add_option("--lr", ti_lr.value);
  ti_lambda.option = train_int->add_option("--lambda", ti_lambda.value, "Adjacency decay");
  ti_seed.option = train_int->add_option("--seed", ti_seed.value);
  ti_rec.attach(train_int);

  // refine
  auto* refine = app.add_subcommand("refine", "Apply one slice edit and refine its neighbours");
  std::string rf_ckpt, rf_int, rf_volume, rf_mask, rf_out;
  std::size_t rf_slice = 0;
  Opt<std::size_t> rf_center;
  ReconstructionFlags rf_rec;
  refine->add_option("--checkpoint", rf_ckpt)->required();
  refine->add_option("--interactive-checkpoint", rf_int)->required();
  refine->add_option("--volume", rf_volume, "Volume header (.json)")->required();
  refine->add_option("--slice", rf_slice, "Edited slice index")->required();
  refine->add_option("--mask", rf_mask, "Mask file: height*width bytes of 0/1")->required();
  refine->add_option("--out", rf_out, "Directory for refined masks and metrics")->required();
  rf_center.option = refine->add_option("--center", rf_center.value, "Sequence centre slice");
  rf_rec.attach(refine);

  // eval-interactive
  auto* eval_int = app.add_subcommand("eval-interactive",
                                      "Edit the worst slice of each volume's worst sequence");
  std::string ei_ckpt, ei_int, ei_data, ei_out;
  int ei_fold = -1;
  ReconstructionFlags ei_rec;
  eval_int->add_option("--checkpoint", ei_ckpt)->required();
  eval_int->add_option("--interactive-checkpoint", ei_int)->required();
  eval_int->add_option("--data", ei_data)->required();
  eval_int->add_option("--fold", ei_fold, "Fold to score (-1: the checkpoint's own)");
  eval_int->add_option("--out", ei_out);
  ei_rec.attach(eval_int);

  // serve
  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  std::vector<std::string> sv_ckpts, sv_ints;
  std::string sv_host = "127.0.0.1";
  int sv_port = 8080;
  serve->add_option("--checkpoint", sv_ckpts, "Main checkpoint (repeatable, one per target)")
      ->required();
  serve->add_option("--interactive-checkpoint", sv_ints, "Interactive checkpoint (repeatable)");
  serve->add_option("--host", sv_host)->capture_default_str();
  serve->add_option("--port", sv_port)->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      json options = json::object();
      if (gen_decoy.given()) options["decoyProbability"] = gen_decoy.value;
      check(ggp_generate_corpus(gen_out.c_str(), gen_count, gen_seed, options.dump().c_str()));
      emit({{"out", gen_out}, {"count", gen_count}, {"seed", gen_seed}}, "");
    } else if (*train || *baseline) {
      const TrainFlags& f = *train ? train_flags : baseline_flags;
      char* result = nullptr;
      check(ggp_train(f.config(*train ? "ggp" : "baseline").dump().c_str(), f.log.c_str(),
                      &result));
      emit(take(result), f.out);
    } else if (*cv) {
      char* result = nullptr;
      check(ggp_cross_validate(cv_flags.config(nullptr).dump().c_str(), cv_flags.log.c_str(),
                               &result));
      emit(take(result), cv_flags.out);
    } else if (*eval) {
      char* result = nullptr;
      check(ggp_evaluate(eval_ckpt.c_str(), eval_data.c_str(), eval_fold, &result));
      emit(take(result), eval_out);
    } else if (*train_int) {
      json config{{"checkpoint", ti_ckpt}, {"dataDir", ti_data}, {"outDir", ti_out},
                  {"reconstruction", ti_rec.options()}};
      if (ti_epochs.given()) config["epochs"] = ti_epochs.value;
      if (ti_lr.given()) config["lr"] = ti_lr.value;
      if (ti_lambda.given()) config["lambda"] = ti_lambda.value;
      if (ti_seed.given()) config["seed"] = ti_seed.value;
      char* result = nullptr;
      check(ggp_interactive_train(config.dump().c_str(), ti_log.c_str(), &result));
      emit(take(result), ti_result);
    } else if (*refine) {
      ggp_model* model = nullptr;
      ggp_interactive* interactive = nullptr;
      ggp_volume* volume = nullptr;
      check(ggp_model_load(rf_ckpt.c_str(), &model));
      check(ggp_interactive_load(rf_int.c_str(), &interactive));
      check(ggp_volume_load(rf_volume.c_str(), &volume));
      std::size_t depth = 0, height = 0, width = 0;
      check(ggp_volume_shape(volume, &depth, &height, &width));
      const std::string mask = read_binary(rf_mask);
      json options = rf_rec.options();
      if (rf_center.given()) options["center"] = rf_center.value;
      char* info = nullptr;
      check(ggp_model_info(model, &info));
      const std::size_t n = take(info).at("modelConfig").at("sequenceLength").get<std::size_t>();
      std::vector<std::uint8_t> refined(n * height * width);
      char* result = nullptr;
      const ggp_status status = ggp_refine(
          model, interactive, volume, rf_slice,
          reinterpret_cast<const std::uint8_t*>(mask.data()), mask.size(),
          options.dump().c_str(), refined.data(), refined.size(), &result);
      ggp_volume_free(volume);
      ggp_interactive_free(interactive);
      ggp_model_free(model);
      check(status);
      json out = take(result);
      std::filesystem::create_directories(rf_out);
      for (auto& entry : out.at("slices")) {
        const auto pos = entry.at("position").get<std::size_t>();
        const std::string name =
            "refined_slice_" + std::to_string(entry.at("slice").get<std::size_t>()) + ".u8";
        std::ofstream blob(std::filesystem::path(rf_out) / name, std::ios::binary);
        blob.write(reinterpret_cast<const char*>(refined.data() + pos * height * width),
                   static_cast<std::streamsize>(height * width));
        entry["maskFile"] = name;
      }
      emit(out, (std::filesystem::path(rf_out) / "refine.json").string());
    } else if (*eval_int) {
      ggp_model* model = nullptr;
      ggp_interactive* interactive = nullptr;
      check(ggp_model_load(ei_ckpt.c_str(), &model));
      check(ggp_interactive_load(ei_int.c_str(), &interactive));
      char* result = nullptr;
      const ggp_status status =
          ggp_interactive_evaluate(model, interactive, ei_data.c_str(), ei_fold,
                                   ei_rec.options().dump().c_str(), &result);
      ggp_interactive_free(interactive);
      ggp_model_free(model);
      check(status);
      emit(take(result), ei_out);
    } else if (*serve) {
      std::vector<const char*> ckpts, ints;
      for (const auto& c : sv_ckpts) ckpts.push_back(c.c_str());
      for (const auto& c : sv_ints) ints.push_back(c.c_str());
      check(ggp_service_create(ckpts.data(), ckpts.size(), ints.data(), ints.size(),
                               &running_service));
      std::signal(SIGINT, [](int) { ggp_service_stop(running_service); });
      std::signal(SIGTERM, [](int) { ggp_service_stop(running_service); });
      check(ggp_service_listen(
          running_service, sv_host.c_str(), sv_port,
          [](int port, void*) {
            std::cerr << "listening on port " << port << '\n';
          },
          nullptr));
      ggp_service_free(running_service);
      running_service = nullptr;
    }
  } catch (const Failure& f) {
    return f.code;
  }
  return 0;
}
