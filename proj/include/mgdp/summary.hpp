//
// Copyright 2026 The mgdp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mgdp/noise.hpp"
#include "mgdp/sketch.hpp"

namespace mgdp {

/// Resource guard for mechanisms that draw noise for every universe element.
inline constexpr std::uint64_t kDefaultUniverseCap = 10'000'000;

/// Privacy parameters. beta only sizes the reported error interval; the
/// mechanisms themselves never read it.
struct PrivacyParams {
  double epsilon;
  double delta;
  double beta = 0.05;

  void validate() const {
    if (!std::isfinite(epsilon) || epsilon <= 0)
      throw std::invalid_argument("epsilon must be finite and > 0");
    if (!std::isfinite(delta) || delta <= 0 || delta >= 1)
      throw std::invalid_argument("delta must lie in (0,1)");
    validate_beta();
  }

  /// For pure-DP mechanisms, which have no delta.
  void validate_pure() const {
    if (!std::isfinite(epsilon) || epsilon <= 0)
      throw std::invalid_argument("epsilon must be finite and > 0");
    validate_beta();
  }

 private:
  void validate_beta() const {
    if (!std::isfinite(beta) || beta <= 0 || beta >= 1)
      throw std::invalid_argument("beta must lie in (0,1)");
  }
};

struct SummaryEntry {
  ItemId key;
  double count;

  friend bool operator==(const SummaryEntry&, const SummaryEntry&) = default;
};

/// High-probability deviation range for released-vs-true frequencies, plus
/// the per-key mean-squared-error bound where one is known.
struct ErrorInterval {
  double lower;
  double upper;
};

/// Result of a private release: the surviving keys with their noisy counts,
/// sorted ascending by key, plus the provenance needed to interpret them.
struct PrivateSummary {
  std::string mechanism;
  std::uint64_t k = 0;
  std::uint64_t d = 0;
  std::uint64_t n = 0;  // combined stream length for merged sketches
  double epsilon = 0;
  std::optional<double> delta;
  double beta = 0;
  NoiseBackend noise = NoiseBackend::kLaplace;
  std::optional<double> threshold;
  std::optional<ErrorInterval> interval;
  std::vector<SummaryEntry> entries;  // sorted by key ascending

  /// Released value for an item, with the implicit 0 for absent keys.
  double value_or_zero(ItemId x) const {
    auto it = std::lower_bound(
        entries.begin(), entries.end(), x,
        [](const SummaryEntry& e, ItemId id) { return e.key < id; });
    return (it != entries.end() && it->key == x) ? it->count : 0.0;
  }

  bool contains(ItemId x) const {
    auto it = std::lower_bound(
        entries.begin(), entries.end(), x,
        [](const SummaryEntry& e, ItemId id) { return e.key < id; });
    return it != entries.end() && it->key == x;
  }
};

}  // namespace mgdp
