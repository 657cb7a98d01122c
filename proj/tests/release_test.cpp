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

#include "mgdp/release.hpp"

#include <cmath>
#include <stdexcept>

#include "gtest/gtest.h"
#include "mgdp/noise.hpp"
#include "mgdp/sketch.hpp"

namespace mgdp {
namespace {

Sketch run(std::uint64_t k, std::uint64_t d, const std::vector<ItemId>& s) {
  Sketch sketch(k, d);
  sketch.process(s);
  return sketch;
}

TEST(ThresholdTest, PmgMatchesClosedForm) {
  EXPECT_NEAR(threshold_pmg({1.0, 0.05}), 9.1886891244442, 1e-12);
  // ln(3/delta) = 2 at delta = 3/e^2, so the threshold is 1 + 2*2/2 = 3.
  EXPECT_NEAR(threshold_pmg({2.0, 3.0 * std::exp(-2.0)}), 3.0, 1e-12);
}

TEST(ThresholdTest, RejectsInvalidParams) {
  EXPECT_THROW(threshold_pmg({1.0, 3.0}), std::invalid_argument);   // delta >= 1
  EXPECT_THROW(threshold_pmg({1.0, 0.0}), std::invalid_argument);   // delta <= 0
  EXPECT_THROW(threshold_pmg({0.0, 0.05}), std::invalid_argument);  // epsilon <= 0
  EXPECT_THROW(threshold_pmg({-1.0, 0.05}), std::invalid_argument);
  EXPECT_THROW(threshold_pmg({1.0, 0.05, 1.5}), std::invalid_argument);  // beta
}

TEST(ThresholdTest, StandardVariantMatchesClosedForm) {
  EXPECT_NEAR(threshold_standard_mg({1.0, 0.05}, 2), 7.802394763324311, 1e-12);
  EXPECT_GT(threshold_standard_mg({1.0, 0.05}, 10),
            threshold_standard_mg({1.0, 0.05}, 2));
}

TEST(ErrorBoundTest, DeviationIntervalAtFrozenPoint) {
  const ErrorBound b = error_bound({1.0, 0.05, 0.05}, 2, 0);
  EXPECT_NEAR(b.upper, 8.1886891244442, 1e-12);
  // Lower side stacks noise, threshold, and (empty) sketch terms.
  EXPECT_NEAR(b.lower, -8.1886891244442 - 9.1886891244442, 1e-12);
}

TEST(ErrorBoundTest, SketchTermScalesWithN) {
  const ErrorBound b0 = error_bound({1.0, 0.05, 0.05}, 2, 0);
  const ErrorBound b9 = error_bound({1.0, 0.05, 0.05}, 2, 9);
  EXPECT_NEAR(b9.lower, b0.lower - 3.0, 1e-12);
  EXPECT_DOUBLE_EQ(b9.upper, b0.upper);
}

TEST(ErrorBoundTest, MseBoundAtFrozenPoint) {
  // ln(3/delta) = 3 at delta = 3/e^3: mse <= 3 (1 + (2+6)/1 + 0)^2 = 243.
  const ErrorBound b = error_bound({1.0, 3.0 * std::exp(-3.0), 0.05}, 2, 0);
  EXPECT_NEAR(b.mse_bound, 243.0, 1e-12);
}

TEST(PrivatizeMgTest, ZeroNoiseWithZeroThresholdIsIdentityOnRealKeys) {
  Sketch s = run(2, 3, {1, 2, 3});  // {1:0, 2:0}, gamma=1
  NoiseSampler zero(NoiseBackend::kZero, 1);
  const PrivateSummary out =
      privatize_mg(s, {1.0, 0.05}, zero, {.threshold_override = 0.0});
  ASSERT_EQ(out.entries.size(), 2u);
  EXPECT_EQ(out.entries[0].key, 1u);
  EXPECT_DOUBLE_EQ(out.entries[0].count, 0.0);
  EXPECT_EQ(out.entries[1].key, 2u);
  EXPECT_DOUBLE_EQ(out.entries[1].count, 0.0);
  EXPECT_EQ(out.mechanism, "approx");
}

TEST(PrivatizeMgTest, ZeroNoiseKeepsExactCounts) {
  Sketch s = run(2, 3, {1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 2, 2});  // {1:10, 2:2}
  NoiseSampler zero(NoiseBackend::kZero, 1);
  const PrivateSummary out =
      privatize_mg(s, {1.0, 0.05}, zero, {.threshold_override = 0.0});
  EXPECT_DOUBLE_EQ(out.value_or_zero(1), 10.0);
  EXPECT_DOUBLE_EQ(out.value_or_zero(2), 2.0);
}

TEST(PrivatizeMgTest, SecondReleaseIsRefused) {
  Sketch s = run(2, 3, {1, 1});
  NoiseSampler sampler(NoiseBackend::kLaplace, 7);
  privatize_mg(s, {1.0, 0.05}, sampler);
  EXPECT_THROW(privatize_mg(s, {1.0, 0.05}, sampler), std::logic_error);
}

TEST(PrivatizeMgTest, CopyOfUnreleasedSketchIsReleasable) {
  const Sketch pristine = run(2, 3, {1, 1});
  NoiseSampler sampler(NoiseBackend::kLaplace, 7);
  Sketch first = pristine;
  Sketch second = pristine;
  privatize_mg(first, {1.0, 0.05}, sampler);
  EXPECT_NO_THROW(privatize_mg(second, {1.0, 0.05}, sampler));
}

TEST(PrivatizeMgTest, StructuralInvariantsOverManySeeds) {
  const Sketch pristine = run(3, 5, {1, 1, 1, 2, 2, 3, 4, 5, 1, 2});
  const PrivacyParams params{0.5, 0.1};
  const double cutoff = threshold_pmg(params);
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    Sketch s = pristine;
    NoiseSampler sampler(NoiseBackend::kLaplace, seed);
    const PrivateSummary out = privatize_mg(s, params, sampler);
    ASSERT_LE(out.entries.size(), 3u);
    for (std::size_t i = 0; i < out.entries.size(); ++i) {
      ASSERT_GE(out.entries[i].count, cutoff);
      ASSERT_LE(out.entries[i].key, 5u);  // never a dummy
      ASSERT_GT(pristine.estimate(out.entries[i].key), 0u);  // stored real key
      if (i) {
        ASSERT_LT(out.entries[i - 1].key, out.entries[i].key);
      }
    }
  }
}

TEST(PrivatizeMgTest, GeometricBackendReleasesIntegerCounts) {
  Sketch s = run(2, 3, {1, 1, 1, 1, 1});
  NoiseSampler sampler(NoiseBackend::kGeometric, 3);
  const PrivateSummary out =
      privatize_mg(s, {1.0, 0.05}, sampler, {.threshold_override = 0.0});
  for (const auto& e : out.entries) EXPECT_EQ(e.count, std::floor(e.count));
}

// A key with a zero counter clears the cutoff only if the two Laplace draws
// push it past 1 + 2 ln(3/delta)/eps; that happens with probability at most
// delta/3 (empirically far less).
TEST(PrivatizeMgTest, SmallCounterReleaseFrequencyBelowTailBound) {
  const Sketch pristine =
      Sketch::from_parts(2, 3, 102, 0, {{1, 100}, {2, 0}});
  const PrivacyParams params{1.0, 0.05};
  const int trials = 100000;
  int released = 0;
  for (int t = 0; t < trials; ++t) {
    Sketch s = pristine;
    NoiseSampler sampler(NoiseBackend::kLaplace, 1000 + t);
    if (privatize_mg(s, params, sampler).contains(2)) ++released;
  }
  const double freq = static_cast<double>(released) / trials;
  const double bound = params.delta / 3.0;
  const double se = std::sqrt(bound * (1 - bound) / trials);
  EXPECT_LE(freq, bound + 3 * se);
}

// Released-or-zero estimates stay within the deviation window around the
// sketch counts in at least a 1-beta fraction of trials.
TEST(PrivatizeMgTest, ReleasedCountsStayInDeviationWindow) {
  const Sketch pristine = run(2, 3, {1, 1, 1});
  const PrivacyParams params{1.0, 0.05, 0.05};
  const double noise_bound = 2.0 * std::log((2 + 1) / params.beta);
  const double lower = -noise_bound - threshold_pmg(params);
  const int trials = 10000;
  int inside = 0;
  for (int t = 0; t < trials; ++t) {
    Sketch s = pristine;
    NoiseSampler sampler(NoiseBackend::kLaplace, 5000 + t);
    const PrivateSummary out = privatize_mg(s, params, sampler);
    const double deviation = out.value_or_zero(1) - 3.0;
    if (deviation >= lower && deviation <= noise_bound) ++inside;
  }
  EXPECT_GE(static_cast<double>(inside) / trials, 1 - params.beta);
}

TEST(PrivatizeStandardTest, EmptyCanonicalSketchReleasesNothing) {
  CanonicalSketch empty(2, 3);
  NoiseSampler sampler(NoiseBackend::kLaplace, 9);
  const PrivateSummary out = privatize_standard_mg(empty, {1.0, 0.05}, sampler);
  EXPECT_TRUE(out.entries.empty());
  EXPECT_EQ(out.mechanism, "standard");
}

TEST(PrivatizeStandardTest, ZeroNoiseAboveThresholdIsIdentity) {
  CanonicalSketch s(2, 3);
  s.set_count(1, 50);
  NoiseSampler zero(NoiseBackend::kZero, 1);
  const PrivateSummary out = privatize_standard_mg(s, {1.0, 0.05}, zero);
  ASSERT_EQ(out.entries.size(), 1u);
  EXPECT_DOUBLE_EQ(out.entries[0].count, 50.0);
  EXPECT_NEAR(*out.threshold, 7.802394763324311, 1e-12);
}

TEST(PrivatizeStandardTest, OneShotGuard) {
  CanonicalSketch s(2, 3);
  s.set_count(1, 50);
  NoiseSampler sampler(NoiseBackend::kLaplace, 4);
  privatize_standard_mg(s, {1.0, 0.05}, sampler);
  EXPECT_THROW(privatize_standard_mg(s, {1.0, 0.05}, sampler),
               std::logic_error);
}

TEST(PrivatizeStandardTest, ReleasesOnlyStoredKeys) {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    Sketch source = run(2, 4, {1, 1, 2, 3, 4});
    CanonicalSketch s = CanonicalSketch::from_sketch(source);  // {1:1, 4:1}
    NoiseSampler sampler(NoiseBackend::kLaplace, seed);
    const PrivateSummary out = privatize_standard_mg(s, {2.0, 0.2}, sampler);
    for (const auto& e : out.entries)
      EXPECT_TRUE(e.key == 1 || e.key == 4) << "leaked key " << e.key;
  }
}

}  // namespace
}  // namespace mgdp
