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

#include <cmath>
#include <filesystem>
#include <limits>

#include "checks.hpp"
#include "doctest.h"
#include "interactive/interactive.hpp"
#include "phantom/phantom.hpp"

using namespace ggpseg;
using namespace ggpseg::testing;
namespace fs = std::filesystem;

namespace {

Mask disc_mask(std::size_t size, double cy, double cx, double r) {
  Mask m(size * size, 0);
  for (std::size_t y = 0; y < size; ++y)
    for (std::size_t x = 0; x < size; ++x) {
      const double dy = static_cast<double>(y) - cy, dx = static_cast<double>(x) - cx;
      m[y * size + x] = dy * dy + dx * dx <= r * r;
    }
  return m;
}

struct LatentFixture {
  Rng rng{31};
  Conv<float> classifier = Conv<float>::make(4, 2, 1, rng, 1.0);
  Tensor<float> latent = rng.uniform_tensor<float>(Shape{4, 16, 16}, -1, 1);
  Mask mask = disc_mask(16, 7.5, 8.0, 4.0);
};

SegmentationModel<float> small_model() {
  ModelConfig c;
  c.depth = 2;
  c.base_channels = 2;
  return SegmentationModel<float>(c, GgpConfig{}, ModelKind::kGraph, 3);
}

}  // namespace

TEST_SUITE("interactive") {

TEST_CASE("reconstruction reaches the user mask with non-increasing loss") {
  LatentFixture f;
  auto r = reconstruct_latent(f.latent, f.mask, ReconstructionConfig{}, f.classifier);
  CHECK(r.trace.status == ReconstructionStatus::kConverged);
  CHECK(r.trace.final_dsc() >= 0.95);
  CHECK(r.trace.losses.size() == r.trace.iterations + 1);
  for (std::size_t i = 1; i < r.trace.losses.size(); ++i)
    CHECK(r.trace.losses[i] <= r.trace.losses[i - 1]);
  auto dsc_check = dsc(binarize(classify_latent(r.latent, f.classifier)), f.mask);
  CHECK(*dsc_check == doctest::Approx(r.trace.final_dsc()));
}

TEST_CASE("saturated wrong pixels still move") {
  // Latents scaled so some wrong pixels start below p = 1e-7.
  LatentFixture f;
  Tensor<float> loud = f.latent;
  for (auto& v : loud.values()) v *= 15.0f;
  const Tensor<float> p = classify_latent(loud, f.classifier);
  std::size_t saturated = 0;
  for (std::size_t i = 0; i < f.mask.size(); ++i) {
    const double truth_prob = f.mask[i] ? p[i] : 1.0 - p[i];
    saturated += truth_prob < 1e-7;
  }
  REQUIRE(saturated > 0);
  auto r = reconstruct_latent(loud, f.mask, ReconstructionConfig{}, f.classifier);
  CHECK(r.trace.status == ReconstructionStatus::kConverged);
  CHECK(r.trace.final_dsc() >= 0.95);
}

TEST_CASE("classifier weights stay frozen during reconstruction") {
  LatentFixture f;
  const auto kernel = f.classifier.kernel.value();
  reconstruct_latent(f.latent, f.mask, ReconstructionConfig{}, f.classifier);
  CHECK(f.classifier.kernel.value() == kernel);
  CHECK_FALSE(f.classifier.kernel.has_grad());
}

TEST_CASE("an already matching latent is returned untouched") {
  LatentFixture f;
  const Mask current = binarize(classify_latent(f.latent, f.classifier));
  auto r = reconstruct_latent(f.latent, current, ReconstructionConfig{}, f.classifier);
  CHECK(r.trace.iterations == 0);
  CHECK(r.trace.status == ReconstructionStatus::kConverged);
  CHECK(r.latent == f.latent);
}

TEST_CASE("zero step size exhausts the budget without moving") {
  LatentFixture f;
  ReconstructionConfig cfg;
  cfg.step_size = 0.0;
  cfg.max_iters = 5;
  auto r = reconstruct_latent(f.latent, f.mask, cfg, f.classifier);
  CHECK(r.trace.status == ReconstructionStatus::kMaxIters);
  CHECK(r.trace.iterations == 5);
  CHECK(r.latent == f.latent);
  cfg.step_size = -0.1;
  CHECK_THROWS_AS(reconstruct_latent(f.latent, f.mask, cfg, f.classifier), UsageError);
}

TEST_CASE("reconstruction input validation") {
  LatentFixture f;
  CHECK_THROWS_AS(reconstruct_latent(f.latent, Mask(15 * 16), {}, f.classifier),
                  DimensionError);
  Tensor<float> bad = f.latent;
  bad[0] = std::numeric_limits<float>::quiet_NaN();
  CHECK_THROWS_AS(reconstruct_latent(bad, f.mask, {}, f.classifier), NumericError);
}

TEST_CASE("status names") {
  CHECK(status_name(ReconstructionStatus::kConverged) == "converged");
  CHECK(status_name(ReconstructionStatus::kNumericError) == "numeric-error");
}

TEST_CASE("handcrafted adjacency decays with slice distance") {
  auto a = handcrafted_adjacency(5, 1.0);
  REQUIRE(a.shape() == Shape{5, 5});
  for (std::size_t v = 0; v < 5; ++v) {
    double row = 0;
    for (std::size_t u = 0; u < 5; ++u) {
      row += a[v * 5 + u];
      CHECK(a[v * 5 + u] == doctest::Approx(a[u * 5 + v] * [&] {
              double rv = 0, ru = 0;
              for (std::size_t k = 0; k < 5; ++k) {
                rv += std::exp(-std::abs(double(k) - double(v)));
                ru += std::exp(-std::abs(double(k) - double(u)));
              }
              return ru / rv;
            }()));
    }
    CHECK(row == doctest::Approx(1.0));
    CHECK(a[v * 5 + v] == *std::max_element(a.data() + v * 5, a.data() + v * 5 + 5));
  }
  CHECK(a[2 * 5 + 1] / a[2 * 5 + 2] == doctest::Approx(std::exp(-1.0)));
  CHECK(handcrafted_adjacency(3, 0.5, 2).shape() == Shape{3, 6});
  CHECK_THROWS_AS(handcrafted_adjacency(5, 0.0), UsageError);
}

TEST_CASE("no-op edit leaves every latent unchanged") {
  InteractivePropagator prop(InteractiveConfig{}, 4);
  Rng rng(2);
  std::vector<Var<float>> z;
  for (int u = 0; u < 5; ++u)
    z.push_back(Var<float>::constant(rng.uniform_tensor<float>(Shape{4, 8, 8}, -1, 1)));
  for (std::size_t edited = 0; edited < 5; ++edited) {
    auto out = prop.refine(z, edited, z[edited]);
    for (std::size_t u = 0; u < 5; ++u) CHECK(out[u].value() == z[u].value());
  }
}

TEST_CASE("vanishing decay isolates the edit") {
  InteractivePropagator prop(InteractiveConfig{}, 4);
  auto isolated = prop.with_lambda(1e-3);
  Rng rng(3);
  std::vector<Var<float>> z;
  for (int u = 0; u < 5; ++u)
    z.push_back(Var<float>::constant(rng.uniform_tensor<float>(Shape{4, 8, 8}, -1, 1)));
  auto edit = Var<float>::constant(rng.uniform_tensor<float>(Shape{4, 8, 8}, -1, 1));
  auto out = isolated.refine(z, 1, edit);
  auto spread = prop.refine(z, 1, edit);
  CHECK(out[1].value() == edit.value());
  bool moved = false;
  for (std::size_t u : {0, 2, 3, 4}) {
    CHECK(out[u].value() == z[u].value());
    moved |= !(spread[u].value() == z[u].value());
  }
  CHECK(moved);
  CHECK_THROWS_AS(prop.refine(z, 5, edit), UsageError);
  CHECK_THROWS_AS(prop.refine({z[0], z[1]}, 0, edit), DimensionError);
}

TEST_CASE("fixed adjacency is not a trainable parameter") {
  InteractivePropagator prop(InteractiveConfig{}, 4);
  for (const auto& p : prop.parameters()) CHECK(p.name != "interactive.A");
  CHECK_FALSE(prop.propagator().adjacency_learnable());
}

TEST_CASE("interactive checkpoint round-trip") {
  auto dir = fs::temp_directory_path() / "ggpseg_unit_interactive";
  fs::remove_all(dir);
  InteractiveConfig cfg;
  cfg.lambda = 0.7;
  InteractivePropagator prop(cfg, 4);
  prop.set_latent_scale({0.5f, 1.0f, 2.0f, 21.25f});
  save_interactive(prop, dir, {{"target", "gtv"}});
  auto back = load_interactive(dir);
  CHECK(back.config().lambda == 0.7);
  CHECK(back.latent_scale() == prop.latent_scale());
  CHECK(back.propagator().adjacency().value() == prop.propagator().adjacency().value());
  auto a = prop.parameters(), b = back.parameters();
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].var.value() == b[i].var.value());
  fs::remove_all(dir);
}

TEST_CASE("latent scale validation and rms") {
  InteractivePropagator prop(InteractiveConfig{}, 2);
  CHECK(prop.latent_scale() == std::vector<float>{1.0f, 1.0f});
  CHECK_THROWS_AS(prop.set_latent_scale({1.0f}), DimensionError);
  CHECK_THROWS_AS(prop.set_latent_scale({1.0f, 0.0f}), UsageError);
  VolumePrediction p;
  p.latents.push_back(Tensor<float>(Shape{2, 1, 2}, std::vector<float>{3, -4, 0, 0}));
  p.latents.push_back(Tensor<float>(Shape{2, 1, 2}, std::vector<float>{0, 0, 0, 0}));
  const auto rms = latent_channel_rms({p});
  CHECK(rms[0] == doctest::Approx(2.5));  // sqrt(25 / 4)
  CHECK(rms[1] == doctest::Approx(1e-3));  // floored
}

TEST_CASE("scaled no-op edit is still the identity") {
  Rng rng(8);
  InteractivePropagator prop(InteractiveConfig{}, 3);
  prop.set_latent_scale({0.2f, 5.0f, 30.0f});
  std::vector<Var<float>> z;
  for (int i = 0; i < 5; ++i)
    z.push_back(Var<float>::constant(rng.uniform_tensor<float>(Shape{3, 6, 6}, -20, 20)));
  auto out = prop.refine(z, 2, z[2]);
  for (std::size_t u = 0; u < z.size(); ++u) CHECK(out[u].value() == z[u].value());
}

TEST_CASE("worst sequence has the smallest median") {
  using D = std::vector<std::optional<double>>;
  CHECK(select_worst({D{0.9}, D{0.5}, D{0.7}}) == 1);
  CHECK(select_worst({D{0.6, 0.4}, D{0.5}, D{0.2, 0.8}}) == 0);
  CHECK(select_worst({D{0.5}, D{0.5}}) == 0);
  CHECK(select_worst({D{std::nullopt}, D{0.9}}) == 1);
  CHECK_FALSE(select_worst({D{std::nullopt}}).has_value());
  CHECK(*median_of({1.0, std::nullopt, 3.0, 2.0}) == 2.0);
  CHECK(*median_of({1.0, 4.0}) == 2.5);
  CHECK_FALSE(median_of({}).has_value());
}

TEST_CASE("volume prediction and worst sequence selection") {
  auto model = small_model();
  auto vols = generate_corpus(2, 4);
  std::vector<VolumePrediction> preds;
  auto worst = select_worst_sequences(model, vols, Target::kGtv, &preds);
  REQUIRE(preds.size() == 2);
  CHECK(preds[0].masks.size() == vols[0].depth());
  CHECK(preds[0].latents[0].shape() == Shape{2, 64, 64});
  for (std::size_t i = 0; i < worst.size(); ++i) {
    CHECK(vols[i].mask_count(Target::kGtv, worst[i].center) > 0);
    CHECK(worst[i].dscs.size() == 5);
    CHECK(worst[i].worst_position < 5);
    const auto window = window_indices(worst[i].center, 5, vols[i].depth());
    for (std::size_t u = 0; u < 5; ++u) {
      // Tumour-free slices are never scored.
      if (vols[i].mask_count(Target::kGtv, window[u]) == 0) CHECK_FALSE(worst[i].dscs[u]);
    }
    CHECK(vols[i].mask_count(Target::kGtv, window[worst[i].worst_position]) > 0);
  }
}

TEST_CASE("refinement keeps the edited slice and is deterministic") {
  auto model = small_model();
  auto vol = generate_corpus(1, 4)[0];
  auto pred = predict_volume(model, vol);
  InteractivePropagator prop(InteractiveConfig{}, 2);
  std::size_t center = 0;
  while (vol.mask_count(Target::kGtv, center) == 0) ++center;
  const Mask user = to_mask(vol.mask_plane(Target::kGtv, center));
  auto a = refine_neighbors(model, prop, pred, center, 2, user, ReconstructionConfig{});
  auto b = refine_neighbors(model, prop, pred, center, 2, user, ReconstructionConfig{});
  CHECK(a.masks == b.masks);
  CHECK(a.source_slices == window_indices(center, 5, vol.depth()));
  CHECK(*dsc(a.masks[2], user) == doctest::Approx(a.trace.final_dsc()));
  // Substituting the unedited latent reproduces the non-interactive output.
  auto same = refine_with_latent(model, prop, pred, center, 2, pred.latents[center]);
  for (std::size_t k = 0; k < 5; ++k) CHECK(same.masks[k] == pred.masks[a.source_slices[k]]);
}

TEST_CASE("short interactive training runs and is deterministic") {
  auto model = small_model();
  model.freeze();
  auto vols = generate_corpus(2, 4);
  InteractiveTrainConfig cfg;
  cfg.epochs = 1;
  cfg.interactive.nodes = 5;
  auto a = train_interactive(model, vols, cfg);
  auto b = train_interactive(model, vols, cfg);
  auto pa = a.parameters(), pb = b.parameters();
  for (std::size_t i = 0; i < pa.size(); ++i) CHECK(pa[i].var.value() == pb[i].var.value());
}

}  // TEST_SUITE
