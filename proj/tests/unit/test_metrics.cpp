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

#include "checks.hpp"
#include "doctest.h"
#include "metric_checks.hpp"

using namespace ggpseg;
using namespace ggpseg::testing;

TEST_SUITE("metrics") {

TEST_CASE("metrics equal counting on random pairs") {
  auto r = check_metric_oracles(500, 11);
  CHECK(r.mismatches == 0);
  CHECK(r.identity_failures == 0);
}

TEST_CASE("undefined ratios are reported, not invented") {
  std::vector<std::uint8_t> empty(16, 0), full(16, 1);
  CHECK_FALSE(dsc(empty, empty).has_value());
  CHECK_FALSE(sensitivity(confusion(full, empty)).has_value());
  CHECK_FALSE(specificity(confusion(full, full)).has_value());
  CHECK(*dsc(full, full) == 1.0);
  CHECK(*dsc(empty, full) == 0.0);
}

TEST_CASE("accumulator skips undefined slices") {
  MetricAccumulator acc;
  std::vector<std::uint8_t> empty(4, 0), a{1, 1, 0, 0}, b{1, 0, 0, 0};
  acc.add(empty, empty);
  acc.add(a, b);
  CHECK(acc.skipped() == 1);
  REQUIRE(acc.dsc_values().size() == 1);
  CHECK(acc.dsc_values()[0] == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("mismatched mask sizes") {
  std::vector<std::uint8_t> a(4), b(5);
  CHECK_THROWS_AS(confusion(a, b), DimensionError);
}

TEST_CASE("summary uses population standard deviation") {
  auto s = summarize({1.0, 2.0, 3.0, 4.0});
  CHECK(s.mean == 2.5);
  CHECK(s.std == doctest::Approx(std::sqrt(1.25)));
  CHECK(summarize({}).count == 0);
}

TEST_CASE("fold aggregate is mean of fold means") {
  MetricsReport a, b;
  a.dsc.mean = 0.8;
  b.dsc.mean = 0.6;
  a.skipped = 1;
  b.skipped = 2;
  auto agg = MetricsReport::aggregate({a, b});
  CHECK(agg.dsc.mean == doctest::Approx(0.7));
  CHECK(agg.dsc.std == doctest::Approx(0.1));
  CHECK(agg.skipped == 3);
  CHECK(agg.fold == -1);
}

TEST_CASE("report json round-trip") {
  MetricsReport r;
  r.target = "ctv";
  r.fold = 2;
  r.dsc = {0.75, 0.1, 12};
  r.sensitivity = {0.8, 0.05, 12};
  r.specificity = {0.99, 0.01, 12};
  auto back = metrics_report_from_json(to_json(r));
  CHECK(back.target == "ctv");
  CHECK(back.fold == 2);
  CHECK(back.dsc.mean == 0.75);
  CHECK(back.dsc.std == 0.1);
  CHECK_THROWS_AS(metrics_report_from_json(nlohmann::json{{"target", "gtv"}}), FormatError);
}

TEST_CASE("dice loss matches its closed form") {
  Tensor<double> p(Shape{2, 2}, std::vector<double>{0.9, 0.2, 0.4, 0.1});
  Tensor<float> g(Shape{2, 2}, std::vector<float>{1, 0, 1, 0});
  const double overlap = 0.9 + 0.4;
  const double expected = 1.0 - (2 * overlap + 1.0) / (1.6 + 2.0 + 1.0);
  CHECK(dice_loss(Var<double>::constant(p), g).value().item() == doctest::Approx(expected));
  CHECK_THROWS_AS(dice_loss(Var<double>::constant(p), Tensor<float>(Shape{4})), DimensionError);
}

TEST_CASE("nll loss is the mean negative log of the true-class probability") {
  Tensor<double> probs(Shape{2, 1, 2}, std::vector<double>{0.3, 0.6, 0.7, 0.4});
  Tensor<float> t(Shape{1, 2}, std::vector<float>{1, 0});
  const double expected = -(std::log(0.7) + std::log(0.6)) / 2;
  CHECK(nll_loss(Var<double>::constant(probs), t).value().item() == doctest::Approx(expected));
}

TEST_CASE("logit nll matches the probability form and keeps saturated gradients") {
  Tensor<double> logits(Shape{2, 1, 2}, std::vector<double>{0.3, -1.2, 1.1, 0.4});
  Tensor<float> t(Shape{1, 2}, std::vector<float>{1, 0});
  const auto x = Var<double>::constant(logits);
  CHECK(nll_loss_logits(x, t).value().item() ==
        doctest::Approx(nll_loss(ops::softmax_channels(x), t).value().item()));

  auto wrong = Var<double>::parameter(
      Tensor<double>(Shape{2, 1, 1}, std::vector<double>{40.0, 0.0}));
  auto loss = nll_loss_logits(wrong, Tensor<float>(Shape{1, 1}, 1.0f));
  CHECK(loss.value().item() == doctest::Approx(40.0));
  backward(loss);
  const Tensor<double> g = wrong.grad();
  CHECK(g[0] == doctest::Approx(1.0));
  CHECK(g[1] == doctest::Approx(-1.0));
}

TEST_CASE("binarize thresholds strictly above one half") {
  Tensor<float> p(Shape{3}, std::vector<float>{0.5f, 0.51f, 0.1f});
  CHECK(binarize(p) == Mask{0, 1, 0});
}

}  // TEST_SUITE
