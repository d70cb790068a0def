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

#include <cstdint>
#include <vector>

#include "metrics/metrics.hpp"
#include "numerics/rng.hpp"

namespace ggpseg::testing {

struct MetricOracleResult {
  std::size_t pairs = 0;
  std::size_t mismatches = 0;      // metric differs from the counting oracle
  std::size_t identity_failures = 0;  // 2TP+FP+FN != |pred|+|gt|
};

/// Compares the metrics against products-and-sums counting on random
/// 8x8 mask pairs with a random foreground rate per pair.
inline MetricOracleResult check_metric_oracles(std::size_t pairs, std::uint64_t seed) {
  Rng rng(seed);
  MetricOracleResult out;
  out.pairs = pairs;
  for (std::size_t k = 0; k < pairs; ++k) {
    const double rate_p = rng.uniform(), rate_t = rng.uniform();
    std::vector<std::uint8_t> p(64), t(64);
    for (auto& v : p) v = rng.uniform() < rate_p;
    for (auto& v : t) v = rng.uniform() < rate_t;
    std::size_t both = 0, np = 0, nt = 0, neither = 0;
    for (std::size_t i = 0; i < 64; ++i) {
      both += p[i] * t[i];
      np += p[i];
      nt += t[i];
      neither += (1 - p[i]) * (1 - t[i]);
    }
    const Confusion c = confusion(p, t);
    if (2 * c.tp + c.fp + c.fn != np + nt) ++out.identity_failures;
    const auto d = dsc(c);
    const auto se = sensitivity(c);
    const auto sp = specificity(c);
    bool ok = true;
    ok &= (np + nt == 0) ? !d : (d && *d == 2.0 * static_cast<double>(both) /
                                              static_cast<double>(np + nt));
    ok &= (nt == 0) ? !se : (se && *se == static_cast<double>(both) / static_cast<double>(nt));
    ok &= (nt == 64) ? !sp
                     : (sp && *sp == static_cast<double>(neither) /
                                         static_cast<double>(64 - nt));
    if (!ok) ++out.mismatches;
  }
  return out;
}

}  // namespace ggpseg::testing
