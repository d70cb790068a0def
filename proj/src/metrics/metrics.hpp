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

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "numerics/tensor.hpp"

namespace ggpseg {

inline constexpr double kBinarizeThreshold = 0.5;

using Mask = std::vector<std::uint8_t>;

/// Foreground where probability > 0.5.
template <typename Real>
Mask binarize(const Tensor<Real>& probability) {
  Mask out(probability.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = probability[i] > static_cast<Real>(kBinarizeThreshold) ? 1 : 0;
  }
  return out;
}

inline Mask to_mask(const Tensor<float>& binary) {
  Mask out(binary.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = binary[i] > 0.5f ? 1 : 0;
  return out;
}

struct Confusion {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
};

Confusion confusion(std::span<const std::uint8_t> pred,
                    std::span<const std::uint8_t> truth);

/// 2TP / (2TP + FP + FN); undefined when both masks are empty.
std::optional<double> dsc(const Confusion& c);
/// TP / (TP + FN); undefined for an empty reference.
std::optional<double> sensitivity(const Confusion& c);
/// TN / (TN + FP); undefined when the reference covers every pixel.
std::optional<double> specificity(const Confusion& c);

inline std::optional<double> dsc(std::span<const std::uint8_t> pred,
                                 std::span<const std::uint8_t> truth) {
  return dsc(confusion(pred, truth));
}

struct MetricSummary {
  double mean = 0.0;
  double std = 0.0;
  std::size_t count = 0;
};

/// Mean and population standard deviation of the defined values.
MetricSummary summarize(const std::vector<double>& values);

/// Accumulates per-slice metrics, skipping undefined ones.
class MetricAccumulator {
 public:
  void add(const Confusion& c);
  void add(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> truth) {
    add(confusion(pred, truth));
  }

  const std::vector<double>& dsc_values() const { return dsc_; }
  const std::vector<double>& sensitivity_values() const { return sensitivity_; }
  const std::vector<double>& specificity_values() const { return specificity_; }
  std::size_t skipped() const { return skipped_; }

 private:
  std::vector<double> dsc_, sensitivity_, specificity_;
  std::size_t skipped_ = 0;
};

struct MetricsReport {
  std::string target = "gtv";
  int fold = -1;  // -1 marks an aggregate over folds
  MetricSummary dsc, sensitivity, specificity;
  std::size_t skipped = 0;

  static MetricsReport from(const MetricAccumulator& acc, std::string target, int fold);
  /// Mean +/- std across per-fold means.
  static MetricsReport aggregate(const std::vector<MetricsReport>& folds);
};

nlohmann::json to_json(const MetricsReport& report);
MetricsReport metrics_report_from_json(const nlohmann::json& j);

}  // namespace ggpseg
