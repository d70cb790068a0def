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

#include "interactive/interactive.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <utility>

#include "metrics/losses.hpp"
#include "model/checkpoint.hpp"
#include "numerics/adam.hpp"
#include "numerics/errors.hpp"
#include "numerics/rng.hpp"

namespace ggpseg {
namespace {

Conv<float> frozen_copy(const Conv<float>& c) {
  Conv<float> out;
  out.kernel = Var<float>::constant(c.kernel.value());
  out.bias = Var<float>::constant(c.bias.value());
  out.padding = c.padding;
  return out;
}

Var<float> target_probability(const Conv<float>& classifier, const Var<float>& latent) {
  return ops::select(ops::softmax_channels(classifier(latent)), 1);
}

std::size_t window_position(const std::vector<std::size_t>& window, std::size_t slice) {
  for (std::size_t u = 0; u < window.size(); ++u)
    if (window[u] == slice) return u;
  throw UsageError("slice " + std::to_string(slice) + " is not in the window");
}

Mask mask_of(const Volume& vol, Target t, std::size_t slice) {
  return to_mask(vol.mask_plane(t, slice));
}

/// Slices with reference GTV; the only ones scored.
bool valid_slice(const Volume& vol, std::size_t k) { return vol.mask_count(Target::kGtv, k) > 0; }

/// Centres whose middle slice has reference GTV.
std::vector<std::size_t> valid_centers(const Volume& vol) {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < vol.depth(); ++k)
    if (valid_slice(vol, k)) out.push_back(k);
  return out;
}

}  // namespace

std::string_view status_name(ReconstructionStatus s) {
  switch (s) {
    case ReconstructionStatus::kConverged: return "converged";
    case ReconstructionStatus::kMaxIters: return "max-iters";
    case ReconstructionStatus::kStalled: return "stalled";
    case ReconstructionStatus::kNumericError: return "numeric-error";
  }
  return "unknown";
}

nlohmann::json to_json(const ReconstructionTrace& t) {
  return {{"iterations", t.iterations},
          {"status", status_name(t.status)},
          {"losses", t.losses},
          {"dscs", t.dscs},
          {"finalDsc", t.final_dsc()},
          {"message", t.message}};
}

Tensor<float> classify_latent(const Tensor<float>& latent, const Conv<float>& classifier) {
  NoGradGuard no_grad;
  return target_probability(frozen_copy(classifier), Var<float>::constant(latent)).value();
}

ReconstructionResult reconstruct_latent(const Tensor<float>& latent, const Mask& user_mask,
                                        const ReconstructionConfig& cfg,
                                        const Conv<float>& classifier) {
  if (!(cfg.step_size >= 0.0) || !std::isfinite(cfg.step_size)) {
    throw UsageError("reconstruction step size must be finite and non-negative");
  }
  if (latent.rank() != 3) {
    throw DimensionError("latent must be [c,h,w], got " + to_string(latent.shape()));
  }
  const std::size_t h = latent.dim(1), w = latent.dim(2);
  if (user_mask.size() != h * w) {
    throw DimensionError("user mask has " + std::to_string(user_mask.size()) +
                         " pixels, latent plane has " + std::to_string(h * w));
  }
  const Conv<float> phi = frozen_copy(classifier);
  Tensor<float> target(Shape{h, w});
  for (std::size_t i = 0; i < user_mask.size(); ++i) target[i] = user_mask[i] ? 1.0f : 0.0f;
  // Summed over pixels so the step size acts per pixel.
  const float pixels = static_cast<float>(h * w);

  struct Iterate {
    Var<float> z;
    Var<float> loss;
    double dsc = 0.0;
    bool matches = false;
  };
  auto evaluate = [&](Tensor<float> z_value) {
    Iterate it;
    it.z = Var<float>::parameter(std::move(z_value));
    Var<float> logits = phi(it.z);
    Var<float> probs = ops::softmax_channels(logits);
    it.loss = ops::scale(nll_loss_logits(logits, target), pixels);
    const Mask pred = binarize(ops::select(probs, 1).value());
    const auto d = dsc(pred, user_mask);
    it.matches = pred == user_mask;
    it.dsc = d.value_or(1.0);
    return it;
  };
  auto done = [&](const Iterate& it) { return it.matches || it.dsc >= cfg.stop_dsc; };

  ReconstructionResult result;
  ReconstructionTrace& trace = result.trace;
  Iterate current = evaluate(latent);
  trace.losses.push_back(current.loss.value().item());
  trace.dscs.push_back(current.dsc);
  if (done(current)) {
    trace.status = ReconstructionStatus::kConverged;
    result.latent = latent;
    return result;
  }
  trace.status = ReconstructionStatus::kMaxIters;
  try {
    for (std::size_t iter = 0; iter < cfg.max_iters; ++iter) {
      backward(current.loss);
      const Tensor<float> grad = current.z.grad();
      const double loss = current.loss.value().item();
      double step = cfg.step_size;
      std::optional<Iterate> accepted;
      for (std::size_t halving = 0; halving <= cfg.max_halvings; ++halving, step *= 0.5) {
        Tensor<float> candidate = current.z.value();
        for (std::size_t i = 0; i < candidate.size(); ++i) {
          candidate[i] -= static_cast<float>(step) * grad[i];
        }
        Iterate next = evaluate(std::move(candidate));
        if (next.loss.value().item() <= loss) {
          accepted = std::move(next);
          break;
        }
      }
      if (!accepted) {
        trace.status = ReconstructionStatus::kStalled;
        break;
      }
      current = std::move(*accepted);
      ++trace.iterations;
      trace.losses.push_back(current.loss.value().item());
      trace.dscs.push_back(current.dsc);
      if (done(current)) {
        trace.status = ReconstructionStatus::kConverged;
        break;
      }
    }
  } catch (const NumericError& e) {
    trace.status = ReconstructionStatus::kNumericError;
    trace.message = e.what();
  }
  result.latent = current.z.value();
  return result;
}

nlohmann::json to_json(const InteractiveConfig& c) {
  return {{"nodes", c.nodes},
          {"lambda", c.lambda},
          {"steps", c.steps},
          {"edgeTypes", c.edge_types},
          {"gateKernel", c.gate_kernel},
          {"messageKernel", c.message_kernel},
          {"seed", c.seed}};
}

InteractiveConfig interactive_config_from_json(const nlohmann::json& j) {
  try {
    InteractiveConfig c;
    c.nodes = j.at("nodes").get<std::size_t>();
    c.lambda = j.at("lambda").get<double>();
    c.steps = j.at("steps").get<std::size_t>();
    c.edge_types = j.at("edgeTypes").get<std::size_t>();
    c.gate_kernel = j.at("gateKernel").get<std::size_t>();
    c.message_kernel = j.at("messageKernel").get<std::size_t>();
    c.seed = j.at("seed").get<std::uint64_t>();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("interactive config: ") + e.what());
  }
}

Tensor<float> handcrafted_adjacency(std::size_t nodes, double lambda, std::size_t edge_types) {
  if (nodes == 0 || edge_types == 0) throw UsageError("adjacency needs nodes and edge types");
  if (!(lambda > 0.0)) throw UsageError("adjacency decay lambda must be positive");
  const std::size_t columns = nodes * edge_types;
  Tensor<float> a(Shape{nodes, columns});
  std::vector<double> row(columns);
  for (std::size_t v = 0; v < nodes; ++v) {
    double total = 0.0;
    for (std::size_t e = 0; e < edge_types; ++e)
      for (std::size_t u = 0; u < nodes; ++u) {
        const double distance = std::fabs(static_cast<double>(u) - static_cast<double>(v));
        row[nodes * e + u] = std::exp(-distance / lambda);
        total += row[nodes * e + u];
      }
    for (std::size_t c = 0; c < columns; ++c) {
      a[v * columns + c] = static_cast<float>(row[c] / total);
    }
  }
  return a;
}

InteractivePropagator::InteractivePropagator(const InteractiveConfig& config,
                                             std::size_t latent_channels)
    : config_(config), channels_(latent_channels), latent_scale_(latent_channels, 1.0f) {
  GgpConfig gc;
  gc.nodes = config.nodes;
  gc.edge_types = config.edge_types;
  gc.steps = config.steps;
  gc.gate_kernel = config.gate_kernel;
  gc.message_kernel = config.message_kernel;
  Rng rng(config.seed);
  propagator_ = GatedGraphPropagator<float>(gc, latent_channels, rng);
  propagator_.set_adjacency(handcrafted_adjacency(config.nodes, config.lambda, config.edge_types),
                            false);
}

InteractivePropagator InteractivePropagator::with_lambda(double lambda) const {
  InteractivePropagator out = *this;
  out.config_.lambda = lambda;
  out.propagator_.set_adjacency(handcrafted_adjacency(config_.nodes, lambda, config_.edge_types),
                                false);
  return out;
}

void InteractivePropagator::set_latent_scale(std::vector<float> scale) {
  if (scale.size() != channels_) {
    throw DimensionError("latent scale has " + std::to_string(scale.size()) + " entries for " +
                         std::to_string(channels_) + " channels");
  }
  for (float v : scale) {
    if (!(v > 0.0f) || !std::isfinite(v)) throw UsageError("latent scale must be positive");
  }
  latent_scale_ = std::move(scale);
}

namespace {

// x[c,h,w] * factor[c].
Var<float> scale_channels(const Var<float>& x, const std::vector<float>& factor) {
  Tensor<float> f(x.shape());
  const std::size_t plane = x.shape()[1] * x.shape()[2];
  for (std::size_t c = 0; c < factor.size(); ++c)
    for (std::size_t i = 0; i < plane; ++i) f[c * plane + i] = factor[c];
  return ops::mul(x, Var<float>::constant(std::move(f)));
}

}  // namespace

std::vector<Var<float>> InteractivePropagator::refine(const std::vector<Var<float>>& original,
                                                      std::size_t edited,
                                                      const Var<float>& replacement) const {
  if (original.size() != config_.nodes) {
    throw DimensionError("refine expects " + std::to_string(config_.nodes) + " latents, got " +
                         std::to_string(original.size()));
  }
  if (edited >= original.size()) throw UsageError("edited slice index out of range");
  if (replacement.shape() != original[edited].shape()) {
    throw DimensionError("replacement latent " + to_string(replacement.shape()) +
                         " does not match " + to_string(original[edited].shape()));
  }
  if (original[edited].value().rank() != 3 || original[edited].shape()[0] != channels_) {
    throw DimensionError("latents must be [" + std::to_string(channels_) + ",h,w], got " +
                         to_string(original[edited].shape()));
  }
  std::vector<float> inverse(latent_scale_.size());
  for (std::size_t c = 0; c < inverse.size(); ++c) inverse[c] = 1.0f / latent_scale_[c];
  std::vector<Var<float>> normalised;
  normalised.reserve(original.size());
  for (const auto& z : original) normalised.push_back(scale_channels(z, inverse));
  std::vector<Var<float>> substituted = normalised;
  substituted[edited] = scale_channels(replacement, inverse);
  const auto before = propagator_.propagate(normalised);
  const auto after = propagator_.propagate(substituted);
  std::vector<Var<float>> out;
  out.reserve(original.size());
  for (std::size_t u = 0; u < original.size(); ++u) {
    out.push_back(u == edited ? replacement
                              : ops::add(original[u], scale_channels(ops::sub(after[u], before[u]),
                                                                     latent_scale_)));
  }
  return out;
}

ParameterList<float> InteractivePropagator::parameters() const {
  ParameterList<float> out;
  propagator_.collect(out, "interactive");
  return out;
}

void InteractivePropagator::freeze() {
  for (auto& p : parameters()) p.var.set_requires_grad(false);
}

void save_interactive(const InteractivePropagator& p, const std::filesystem::path& dir,
                      nlohmann::json extra) {
  extra["kind"] = "interactive";
  extra["interactiveConfig"] = to_json(p.config());
  extra["latentChannels"] = p.latent_channels();
  extra["latentScale"] = p.latent_scale();
  write_checkpoint(dir, std::move(extra), p.parameters());
}

InteractivePropagator load_interactive(const std::filesystem::path& dir) {
  RawCheckpoint raw = read_checkpoint(dir);
  if (raw.manifest.value("kind", "") != "interactive") {
    throw FormatError(dir.string() + " is not an interactive checkpoint");
  }
  InteractivePropagator p(interactive_config_from_json(raw.manifest.at("interactiveConfig")),
                          raw.manifest.at("latentChannels").get<std::size_t>());
  assign_parameters(raw, p.parameters());
  try {
    p.set_latent_scale(raw.manifest.at("latentScale").get<std::vector<float>>());
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(dir.string() + ": latentScale: " + e.what());
  } catch (const Error& e) {
    throw FormatError(dir.string() + ": latentScale: " + e.what());
  }
  return p;
}

VolumePrediction predict_volume(const SegmentationModel<float>& model, const Volume& vol) {
  NoGradGuard no_grad;
  VolumePrediction out;
  const std::size_t n = model.config().sequence_length;
  for (std::size_t k = 0; k < vol.depth(); ++k) {
    auto result = model.forward(make_sequence(vol, k, n));
    out.latents.push_back(result.latent.value());
    out.probabilities.push_back(result.probability.value());
    out.masks.push_back(binarize(result.probability.value()));
  }
  return out;
}

std::vector<float> latent_channel_rms(const std::vector<VolumePrediction>& predictions) {
  std::vector<double> sum;
  std::size_t count = 0;
  for (const auto& p : predictions) {
    for (const auto& z : p.latents) {
      if (sum.empty()) sum.assign(z.dim(0), 0.0);
      if (z.dim(0) != sum.size()) throw DimensionError("latents disagree on channel count");
      const std::size_t plane = z.size() / z.dim(0);
      for (std::size_t c = 0; c < sum.size(); ++c)
        for (std::size_t i = 0; i < plane; ++i) {
          const double v = z[c * plane + i];
          sum[c] += v * v;
        }
      count += plane;
    }
  }
  if (count == 0) throw UsageError("no latents to measure");
  std::vector<float> out(sum.size());
  // Floor keeps dead channels from dividing by zero.
  for (std::size_t c = 0; c < sum.size(); ++c) {
    out[c] = static_cast<float>(std::max(std::sqrt(sum[c] / static_cast<double>(count)), 1e-3));
  }
  return out;
}

RefinementResult refine_with_latent(const SegmentationModel<float>& model,
                                    const InteractivePropagator& propagator,
                                    const VolumePrediction& prediction, std::size_t center,
                                    std::size_t edited_position,
                                    const Tensor<float>& replacement) {
  NoGradGuard no_grad;
  const std::size_t n = propagator.config().nodes;
  const std::size_t depth = prediction.latents.size();
  if (center >= depth) throw UsageError("sequence centre out of range");
  RefinementResult out;
  out.source_slices = window_indices(center, n, depth);
  out.edited_position = edited_position;
  std::vector<Var<float>> latents;
  for (std::size_t k : out.source_slices) {
    latents.push_back(Var<float>::constant(prediction.latents[k]));
  }
  auto refined =
      propagator.refine(latents, edited_position, Var<float>::constant(replacement));
  const Conv<float> phi = frozen_copy(model.decoder().classifier());
  for (const auto& z : refined) {
    out.probabilities.push_back(target_probability(phi, z).value());
    out.masks.push_back(binarize(out.probabilities.back()));
  }
  return out;
}

RefinementResult refine_neighbors(const SegmentationModel<float>& model,
                                  const InteractivePropagator& propagator,
                                  const VolumePrediction& prediction, std::size_t center,
                                  std::size_t edited_position, const Mask& user_mask,
                                  const ReconstructionConfig& cfg) {
  const std::size_t depth = prediction.latents.size();
  if (center >= depth) throw UsageError("sequence centre out of range");
  if (edited_position >= propagator.config().nodes) {
    throw UsageError("edited position out of range");
  }
  const auto window = window_indices(center, propagator.config().nodes, depth);
  auto rec = reconstruct_latent(prediction.latents[window[edited_position]], user_mask, cfg,
                                model.decoder().classifier());
  RefinementResult out =
      refine_with_latent(model, propagator, prediction, center, edited_position, rec.latent);
  out.trace = std::move(rec.trace);
  return out;
}

std::optional<double> median_of(std::vector<std::optional<double>> values) {
  std::vector<double> defined;
  for (const auto& v : values)
    if (v) defined.push_back(*v);
  if (defined.empty()) return std::nullopt;
  std::sort(defined.begin(), defined.end());
  const std::size_t m = defined.size() / 2;
  return defined.size() % 2 ? defined[m] : 0.5 * (defined[m - 1] + defined[m]);
}

std::optional<std::size_t> select_worst(
    const std::vector<std::vector<std::optional<double>>>& per_sequence_dscs) {
  std::optional<std::size_t> best;
  double lowest = 0.0;
  for (std::size_t i = 0; i < per_sequence_dscs.size(); ++i) {
    const auto m = median_of(per_sequence_dscs[i]);
    if (m && (!best || *m < lowest)) {
      best = i;
      lowest = *m;
    }
  }
  return best;
}

std::vector<WorstSequence> select_worst_sequences(const SegmentationModel<float>& model,
                                                  const std::vector<Volume>& volumes,
                                                  Target target,
                                                  std::vector<VolumePrediction>* predictions) {
  const std::size_t n = model.config().sequence_length;
  std::vector<WorstSequence> out;
  for (const Volume& vol : volumes) {
    if (!vol.has_masks()) throw UsageError(vol.name + " has no reference masks");
    VolumePrediction pred = predict_volume(model, vol);
    const auto centers = valid_centers(vol);
    std::vector<std::vector<std::optional<double>>> table;
    for (std::size_t c : centers) {
      std::vector<std::optional<double>> row;
      for (std::size_t k : window_indices(c, n, vol.depth())) {
        row.push_back(valid_slice(vol, k) ? dsc(pred.masks[k], mask_of(vol, target, k))
                                          : std::nullopt);
      }
      table.push_back(std::move(row));
    }
    if (const auto pick = select_worst(table)) {
      WorstSequence ws;
      ws.volume = vol.name;
      ws.center = centers[*pick];
      ws.dscs = table[*pick];
      ws.median_dsc = *median_of(ws.dscs);
      double lowest = 2.0;
      for (std::size_t u = 0; u < ws.dscs.size(); ++u) {
        if (ws.dscs[u] && *ws.dscs[u] < lowest) {
          lowest = *ws.dscs[u];
          ws.worst_position = u;
        }
      }
      out.push_back(std::move(ws));
    }
    if (predictions) predictions->push_back(std::move(pred));
  }
  return out;
}

InteractivePropagator train_interactive(const SegmentationModel<float>& model,
                                        const std::vector<Volume>& volumes,
                                        const InteractiveTrainConfig& cfg, std::ostream* log) {
  InteractiveConfig ic = cfg.interactive;
  ic.nodes = model.config().sequence_length;
  const std::size_t n = ic.nodes;
  InteractivePropagator propagator(ic, model.config().base_channels);
  const Conv<float> phi = frozen_copy(model.decoder().classifier());

  std::vector<VolumePrediction> predictions;
  std::vector<std::pair<std::size_t, std::size_t>> examples;  // (volume, centre)
  for (std::size_t i = 0; i < volumes.size(); ++i) {
    if (!volumes[i].has_masks()) throw UsageError(volumes[i].name + " has no reference masks");
    predictions.push_back(predict_volume(model, volumes[i]));
    for (std::size_t c : valid_centers(volumes[i])) examples.emplace_back(i, c);
  }
  if (examples.empty()) throw UsageError("no training sequences for the interactive propagator");
  propagator.set_latent_scale(latent_channel_rms(predictions));

  std::map<std::pair<std::size_t, std::size_t>, Tensor<float>> reconstructed;
  auto reconstruction = [&](std::size_t vi, std::size_t k) -> const Tensor<float>& {
    auto it = reconstructed.find({vi, k});
    if (it == reconstructed.end()) {
      auto r = reconstruct_latent(predictions[vi].latents[k],
                                  mask_of(volumes[vi], cfg.target, k), cfg.reconstruction,
                                  model.decoder().classifier());
      it = reconstructed.emplace(std::pair{vi, k}, std::move(r.latent)).first;
    }
    return it->second;
  };

  const auto params = propagator.parameters();
  Adam<float> adam(vars_of(params), AdamConfig{cfg.learning_rate});
  Rng rng(cfg.seed);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(examples.begin(), examples.end());
    double total = 0.0;
    for (const auto& [vi, center] : examples) {
      const auto window = window_indices(center, n, volumes[vi].depth());
      const std::size_t edited = rng.index(n);
      std::vector<Var<float>> latents;
      for (std::size_t k : window) {
        latents.push_back(Var<float>::constant(predictions[vi].latents[k]));
      }
      const Tensor<float>& z_tilde = reconstruction(vi, window[edited]);
      auto refined = propagator.refine(latents, edited, Var<float>::constant(z_tilde));
      Var<float> loss;
      for (std::size_t u = 0; u < n; ++u) {
        if (u == edited) continue;
        Var<float> term = dice_loss(target_probability(phi, refined[u]),
                                    volumes[vi].mask_plane(cfg.target, window[u]));
        loss = loss.defined() ? ops::add(loss, term) : term;
      }
      loss = ops::scale(loss, 1.0f / static_cast<float>(n - 1));
      adam.zero_grad();
      backward(loss);
      adam.step();
      total += loss.value().item();
    }
    if (log) {
      *log << nlohmann::json{{"event", "interactive-epoch"},
                             {"epoch", epoch + 1},
                             {"meanLoss", total / static_cast<double>(examples.size())}}
                  .dump()
           << '\n';
    }
  }
  propagator.freeze();
  return propagator;
}

InteractiveEvaluation evaluate_interactive(const SegmentationModel<float>& model,
                                           const InteractivePropagator& propagator,
                                           const std::vector<Volume>& volumes, Target target,
                                           const ReconstructionConfig& cfg) {
  std::vector<VolumePrediction> predictions;
  const auto worst = select_worst_sequences(model, volumes, target, &predictions);
  InteractiveEvaluation ev;
  MetricAccumulator before, after;
  std::size_t w = 0;
  for (std::size_t vi = 0; vi < volumes.size() && w < worst.size(); ++vi) {
    if (worst[w].volume != volumes[vi].name) continue;
    const WorstSequence& ws = worst[w++];
    const Volume& vol = volumes[vi];
    const auto window = window_indices(ws.center, propagator.config().nodes, vol.depth());
    const std::size_t edited_slice = window[ws.worst_position];
    const Mask user = mask_of(vol, target, edited_slice);
    auto refined = refine_neighbors(model, propagator, predictions[vi], ws.center,
                                    ws.worst_position, user, cfg);
    ev.edited_dsc.push_back(refined.trace.final_dsc());
    for (std::size_t i = 1; i < refined.trace.losses.size(); ++i) {
      if (refined.trace.losses[i] > refined.trace.losses[i - 1]) ev.monotone = false;
    }
    std::vector<std::size_t> seen{edited_slice};
    for (std::size_t u = 0; u < window.size(); ++u) {
      const std::size_t k = window[u];
      if (std::find(seen.begin(), seen.end(), k) != seen.end()) continue;
      seen.push_back(k);
      if (!valid_slice(vol, k)) continue;
      const Mask truth = mask_of(vol, target, k);
      before.add(predictions[vi].masks[k], truth);
      after.add(refined.masks[window_position(window, k)], truth);
      const auto b = dsc(predictions[vi].masks[k], truth);
      const auto a = dsc(refined.masks[window_position(window, k)], truth);
      if (b && a) {
        ev.before.push_back(*b);
        ev.after.push_back(*a);
      }
    }
  }
  ev.dsc_before = summarize(ev.before);
  ev.dsc_after = summarize(ev.after);
  ev.sensitivity_before = summarize(before.sensitivity_values());
  ev.sensitivity_after = summarize(after.sensitivity_values());
  ev.specificity_before = summarize(before.specificity_values());
  ev.specificity_after = summarize(after.specificity_values());
  return ev;
}

nlohmann::json to_json(const InteractiveEvaluation& e) {
  auto summary = [](const MetricSummary& s) {
    return nlohmann::json{{"mean", s.mean}, {"std", s.std}, {"count", s.count}};
  };
  return {{"nonInteractive",
           {{"dsc", summary(e.dsc_before)},
            {"sensitivity", summary(e.sensitivity_before)},
            {"specificity", summary(e.specificity_before)}}},
          {"interactive",
           {{"dsc", summary(e.dsc_after)},
            {"sensitivity", summary(e.sensitivity_after)},
            {"specificity", summary(e.specificity_after)}}},
          {"editedDsc", e.edited_dsc},
          {"monotone", e.monotone}};
}

}  // namespace ggpseg
