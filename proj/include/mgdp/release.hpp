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

#include "mgdp/noise.hpp"
#include "mgdp/sketch.hpp"
#include "mgdp/summary.hpp"

namespace mgdp {

/// Release cutoff for fixed-occupancy sketches: 1 + 2 ln(3/delta) / epsilon.
inline double threshold_pmg(const PrivacyParams& p) {
  p.validate();
  return 1.0 + 2.0 * std::log(3.0 / p.delta) / p.epsilon;
}

/// Raised cutoff for zero-retention sketches, whose key sets can differ on up
/// to k keys between neighbors: 1 + 2 ln((k+1)/(2 delta)) / epsilon.
inline double threshold_standard_mg(const PrivacyParams& p, std::uint64_t k) {
  p.validate();
  if (k == 0) throw std::invalid_argument("capacity k must be >= 1");
  return 1.0 +
         2.0 * std::log(static_cast<double>(k + 1) / (2.0 * p.delta)) /
             p.epsilon;
}

struct ReleaseOptions {
  // Test hook; bypasses the privacy cutoff when set. Never exposed on the
  // CLI.
  std::optional<double> threshold_override;
};

/// Deviation interval for released counts against true frequencies: with
/// probability >= 1 - beta, released(x) - f(x) lies in [lower, upper] for
/// every x in the universe. mse_bound caps E[(released(x) - f(x))^2].
struct ErrorBound {
  double lower;
  double upper;
  double mse_bound;
};

inline ErrorBound error_bound(const PrivacyParams& p, std::uint64_t k,
                              std::uint64_t n) {
  p.validate();
  if (k == 0) throw std::invalid_argument("capacity k must be >= 1");
  const double noise = 2.0 * std::log((k + 1) / p.beta) / p.epsilon;
  const double cutoff = 1.0 + 2.0 * std::log(3.0 / p.delta) / p.epsilon;
  const double sketch = static_cast<double>(n) / (k + 1);
  const double mse_root =
      1.0 + (2.0 + 2.0 * std::log(3.0 / p.delta)) / p.epsilon + sketch;
  return {-noise - cutoff - sketch, noise, 3.0 * mse_root * mse_root};
}

namespace detail {

// Deviation interval built from the cutoff actually applied: noise error
// up to noise_bound on both sides, thresholding up to cutoff more on the low
// side, plus the sketch's own one-sided error.
inline ErrorInterval deviation_interval(double noise_bound, double cutoff,
                                        double sketch_term) {
  return {-noise_bound - std::max(cutoff, 0.0) - sketch_term, noise_bound};
}

inline PrivateSummary release_with_shared_noise(
    const std::vector<SketchEntry>& entries, std::uint64_t k, std::uint64_t d,
    std::uint64_t n, const PrivacyParams& p, NoiseSampler& sampler,
    double cutoff, const char* mechanism) {
  PrivateSummary out;
  out.mechanism = mechanism;
  out.k = k;
  out.d = d;
  out.n = n;
  out.epsilon = p.epsilon;
  out.delta = p.delta;
  out.beta = p.beta;
  out.noise = sampler.backend();
  out.threshold = cutoff;

  const double scale = 1.0 / p.epsilon;
  const double shared = sampler.sample(scale);
  for (const auto& e : entries) {
    const double noisy =
        static_cast<double>(e.count) + shared + sampler.sample(scale);
    // Dummy slots receive noise like everyone else but are stripped from the
    // output as postprocessing.
    if (noisy >= cutoff && e.key <= d) out.entries.push_back({e.key, noisy});
  }
  return out;
}

}  // namespace detail

/// One-shot private release of a fixed-occupancy sketch: a single shared
/// Laplace(1/eps) variate plus an independent Laplace(1/eps) per slot, then
/// everything below the cutoff is dropped. Marks the sketch consumed.
inline PrivateSummary privatize_mg(Sketch& s, const PrivacyParams& p,
                                   NoiseSampler& sampler,
                                   const ReleaseOptions& opt = {}) {
  if (s.released())
    throw std::logic_error("sketch was already released; privacy budget spent");
  const double cutoff = opt.threshold_override.value_or(threshold_pmg(p));
  auto out = detail::release_with_shared_noise(
      s.entries(), s.capacity(), s.universe_size(), s.stream_length(), p,
      sampler, cutoff, "approx");
  const double noise_bound =
      2.0 * std::log((s.capacity() + 1) / p.beta) / p.epsilon;
  out.interval = detail::deviation_interval(
      noise_bound, cutoff,
      static_cast<double>(s.stream_length()) / (s.capacity() + 1));
  s.mark_released();
  return out;
}

/// Same noise structure for zero-retention sketches, with the raised cutoff.
inline PrivateSummary privatize_standard_mg(CanonicalSketch& s,
                                            const PrivacyParams& p,
                                            NoiseSampler& sampler,
                                            const ReleaseOptions& opt = {}) {
  if (s.released())
    throw std::logic_error("sketch was already released; privacy budget spent");
  const double cutoff =
      opt.threshold_override.value_or(threshold_standard_mg(p, s.capacity()));
  auto out = detail::release_with_shared_noise(
      s.entries(), s.capacity(), s.universe_size(), s.stream_length(), p,
      sampler, cutoff, "standard");
  const double noise_bound =
      2.0 * std::log((s.capacity() + 1) / p.beta) / p.epsilon;
  out.interval = detail::deviation_interval(
      noise_bound, cutoff,
      static_cast<double>(s.stream_length()) / (s.capacity() + 1));
  s.mark_released();
  return out;
}

}  // namespace mgdp
