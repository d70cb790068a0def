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

#include "metrics/metrics.hpp"

#include <cmath>

#include "numerics/errors.hpp"

namespace ggpseg {

Confusion confusion(std::span<const std::uint8_t> pred,
                    std::span<const std::uint8_t> truth) {
  if (pred.size() != truth.size()) {
    throw DimensionError("confusion: mask sizes differ (" +
                         std::to_string(pred.size()) + " vs " +
                         std::to_string(truth.size()) + ")");
  }
  Confusion c;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool p = pred[i] != 0;
    const bool t = truth[i] != 0;
    if (p && t) ++c.tp;
    else if (p) ++c.fp;
    else if (t) ++c.fn;
    else ++c.tn;
  }
  return c;
}

std::optional<double> dsc(const Confusion& c) {
  const std::size_t denom = 2 * c.tp + c.fp + c.fn;
  if (denom == 0) return std::nullopt;
  return 2.0 * static_cast<double>(c.tp) / static_cast<double>(denom);
}

std::optional<double> sensitivity(const Confusion& c) {
  if (c.tp + c.fn == 0) return std::nullopt;
  return static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
}

std::optional<double> specificity(const Confusion& c) {
  if (c.tn + c.fp == 0) return std::nullopt;
  return static_cast<double>(c.tn) / static_cast<double>(c.tn + c.fp);
}

MetricSummary summarize(const std::vector<double>& values) {
  MetricSummary s;
  s.count = values.size();
  if (values.empty()) return s;
  double total = 0.0;
  for (double v : values) total += v;
  s.mean = total / static_cast<double>(values.size());
  double spread = 0.0;
  for (double v : values) spread += (v - s.mean) * (v - s.mean);
  s.std = std::sqrt(spread / static_cast<double>(values.size()));
  return s;
}

void MetricAccumulator::add(const Confusion& c) {
  auto d = dsc(c);
  auto se = sensitivity(c);
  auto sp = specificity(c);
  if (!d || !se) {
    ++skipped_;
    return;
  }
  dsc_.push_back(*d);
  sensitivity_.push_back(*se);
  if (sp) specificity_.push_back(*sp);
}

MetricsReport MetricsReport::from(const MetricAccumulator& acc, std::string target,
                                  int fold) {
  MetricsReport r;
  r.target = std::move(target);
  r.fold = fold;
  r.dsc = summarize(acc.dsc_values());
  r.sensitivity = summarize(acc.sensitivity_values());
  r.specificity = summarize(acc.specificity_values());
  r.skipped = acc.skipped();
  return r;
}

MetricsReport MetricsReport::aggregate(const std::vector<MetricsReport>& folds) {
  MetricsReport r;
  if (!folds.empty()) r.target = folds.front().target;
  std::vector<double> d, se, sp;
  for (const auto& f : folds) {
    d.push_back(f.dsc.mean);
    se.push_back(f.sensitivity.mean);
    sp.push_back(f.specificity.mean);
    r.skipped += f.skipped;
  }
  r.dsc = summarize(d);
  r.sensitivity = summarize(se);
  r.specificity = summarize(sp);
  return r;
}

nlohmann::json to_json(const MetricsReport& report) {
  return {
      {"target", report.target},
      {"fold", report.fold},
      {"dsc", report.dsc.mean},
      {"sensitivity", report.sensitivity.mean},
      {"specificity", report.specificity.mean},
      {"std",
       {{"dsc", report.dsc.std},
        {"sensitivity", report.sensitivity.std},
        {"specificity", report.specificity.std}}},
      {"count", report.dsc.count},
      {"skipped", report.skipped},
  };
}

MetricsReport metrics_report_from_json(const nlohmann::json& j) {
  try {
    MetricsReport r;
    r.target = j.at("target").get<std::string>();
    r.fold = j.at("fold").get<int>();
    r.dsc.mean = j.at("dsc").get<double>();
    r.sensitivity.mean = j.at("sensitivity").get<double>();
    r.specificity.mean = j.at("specificity").get<double>();
    if (j.contains("std")) {
      r.dsc.std = j["std"].value("dsc", 0.0);
      r.sensitivity.std = j["std"].value("sensitivity", 0.0);
      r.specificity.std = j["std"].value("specificity", 0.0);
    }
    r.dsc.count = r.sensitivity.count = r.specificity.count = j.value("count", std::size_t{0});
    r.skipped = j.value("skipped", std::size_t{0});
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("metrics report: ") + e.what());
  }
}

}  // namespace ggpseg
