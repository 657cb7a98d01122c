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
// Acceptance suite. Each test is one release criterion; one PASS/FAIL line
// per criterion is printed at teardown. Monte Carlo pieces run on fixed
// seeds, exhaustive pieces run full grids with runtime ceilings.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "gtest/gtest.h"
#include "mgdp/io.hpp"
#include "mgdp/merge.hpp"
#include "mgdp/noise.hpp"
#include "mgdp/oracle.hpp"
#include "mgdp/pure.hpp"
#include "mgdp/release.hpp"
#include "mgdp/sketch.hpp"
#include "mgdp/verify.hpp"

namespace mgdp {
namespace {

namespace fs = std::filesystem;

class Acceptance : public ::testing::Test {
 protected:
  void TearDown() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    std::cout << "[ACCEPTANCE] " << info->name()
              << (HasFailure() ? ": FAIL" : ": PASS") << std::endl;
  }

  double elapsed_seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_ =
      std::chrono::steady_clock::now();
};

TEST_F(Acceptance, C01_SketchAccuracyExhaustive) {
  const GridCheckResult r = grid_check_sketch_accuracy(4, 10, {1, 2, 3});
  EXPECT_GT(r.cases, 10000000u);
  EXPECT_EQ(r.violations, 0u) << (r.samples.empty() ? "" : r.samples[0]);
  EXPECT_LT(elapsed_seconds(), 60.0);
}

TEST_F(Acceptance, C02_NeighborStructureExhaustiveBothDirections) {
  const GridCheckResult r = grid_check_neighbor_structure(4, 8, {1, 2, 3});
  EXPECT_GT(r.cases, 2000000u);
  EXPECT_EQ(r.violations, 0u) << (r.samples.empty() ? "" : r.samples[0]);
  EXPECT_LT(elapsed_seconds(), 60.0);
}

TEST_F(Acceptance, C03_EstimateEquivalenceWithZeroRemovingVariant) {
  const GridCheckResult r = grid_check_estimate_equivalence(4, 10, {1, 2, 3});
  EXPECT_GT(r.cases, 10000000u);
  EXPECT_EQ(r.violations, 0u) << (r.samples.empty() ? "" : r.samples[0]);
  EXPECT_LT(elapsed_seconds(), 60.0);
}

TEST_F(Acceptance, C04_OffsetSensitivityAndAccuracyExhaustive) {
  const GridCheckResult r = grid_check_offset_sensitivity(4, 8, {1, 2, 3});
  EXPECT_GT(r.cases, 2000000u);
  EXPECT_EQ(r.violations, 0u) << (r.samples.empty() ? "" : r.samples[0]);
  EXPECT_LT(elapsed_seconds(), 60.0);
}

TEST_F(Acceptance, C05_MergeSensitivityAndAccuracyExhaustive) {
  const GridCheckResult r = grid_check_merge(4, 6, {1, 2});
  EXPECT_GT(r.cases, 500000u);
  EXPECT_EQ(r.violations, 0u) << (r.samples.empty() ? "" : r.samples[0]);
  EXPECT_LT(elapsed_seconds(), 60.0);
}

TEST_F(Acceptance, C06_SamplerFidelity) {
  // Kolmogorov-Smirnov distance against the Laplace CDF at one million draws.
  for (const double b : {1.0, 0.5}) {
    const int n = 1000000;
    std::vector<double> draws(n);
    NoiseSampler sampler(NoiseBackend::kLaplace, 20260811);
    for (auto& x : draws) x = sampler.sample(b);
    std::sort(draws.begin(), draws.end());
    const auto cdf = [b](double x) {
      return x < 0 ? 0.5 * std::exp(x / b) : 1.0 - 0.5 * std::exp(-x / b);
    };
    double ks = 0;
    for (int i = 0; i < n; ++i) {
      const double f = cdf(draws[i]);
      ks = std::max(ks, std::max(f - static_cast<double>(i) / n,
                                 static_cast<double>(i + 1) / n - f));
    }
    EXPECT_LE(ks, 0.01) << "scale " << b;
  }

  // Empirical variance within 2% of 2 b^2.
  {
    const double b = 2.0;
    const int n = 1000000;
    NoiseSampler sampler(NoiseBackend::kLaplace, 77);
    double sum = 0, sq = 0;
    for (int i = 0; i < n; ++i) {
      const double x = sampler.sample(b);
      sum += x;
      sq += x * x;
    }
    const double var = sq / n - (sum / n) * (sum / n);
    EXPECT_NEAR(var / (2 * b * b), 1.0, 0.02);
  }

  // The quoted tail value: Pr[Lap(1/eps) >= ln(3/delta)/eps] = delta/6,
  // exactly in closed form and empirically within three standard errors.
  {
    const double epsilon = 1.0, delta = 0.05;
    const double threshold = std::log(3.0 / delta) / epsilon;
    EXPECT_NEAR(laplace_tail(1.0 / epsilon, threshold), delta / 6.0, 1e-12);

    const int n = 10000000;
    NoiseSampler sampler(NoiseBackend::kLaplace, 31415926);
    int hits = 0;
    for (int i = 0; i < n; ++i)
      if (sampler.sample(1.0 / epsilon) >= threshold) ++hits;
    const double p = delta / 6.0;
    const double se = std::sqrt(p * (1 - p) / n);
    EXPECT_NEAR(static_cast<double>(hits) / n, p, 3 * se);
  }
}

TEST_F(Acceptance, C07_ReleaseErrorIntervalAndMse) {
  // Fixed skewed stream: frequencies roughly proportional to 1/rank, n=1e5.
  const std::uint64_t k = 50, d = 200, n_target = 100000;
  const PrivacyParams params{1.0, 1e-6, 0.05};

  Stream stream;
  stream.reserve(n_target);
  double harmonic = 0;
  for (std::uint64_t i = 1; i <= d; ++i) harmonic += 1.0 / static_cast<double>(i);
  for (std::uint64_t i = 1; i <= d && stream.size() < n_target; ++i) {
    const auto count = static_cast<std::uint64_t>(
        static_cast<double>(n_target) / (harmonic * static_cast<double>(i)));
    for (std::uint64_t c = 0; c < count && stream.size() < n_target; ++c)
      stream.push_back(i);
  }
  while (stream.size() < n_target) stream.push_back(1);

  const Sketch pristine = [&] {
    Sketch s(k, d);
    s.process(stream);
    return s;
  }();
  const ExactHistogram oracle(stream, d);

  // Release deviation interval relative to the sketch counts.
  const double noise_bound = 2.0 * std::log((k + 1) / params.beta) / params.epsilon;
  const double lo = -noise_bound - threshold_pmg(params);
  const double hi = noise_bound;

  const int trials = 10000;
  int trials_with_violation = 0;
  std::vector<double> sq_error(d + 1, 0.0);
  for (int t = 0; t < trials; ++t) {
    Sketch s = pristine;
    NoiseSampler sampler(NoiseBackend::kLaplace, 600000 + t);
    const PrivateSummary out = privatize_mg(s, params, sampler);

    bool violated = false;
    for (const auto& e : pristine.entries()) {
      if (pristine.is_dummy(e.key)) continue;
      const double deviation =
          out.value_or_zero(e.key) - static_cast<double>(e.count);
      if (deviation < lo || deviation > hi) violated = true;
    }
    trials_with_violation += violated;

    for (ItemId u = 1; u <= d; ++u) {
      const double err =
          out.value_or_zero(u) - static_cast<double>(oracle.count(u));
      sq_error[u] += err * err;
    }
  }

  const double violation_rate =
      static_cast<double>(trials_with_violation) / trials;
  EXPECT_LE(violation_rate, params.beta)
      << "released counts left the deviation window too often";

  const double mse_bound = error_bound(params, k, n_target).mse_bound;
  double worst_mse = 0;
  for (ItemId u = 1; u <= d; ++u) {
    const double mse = sq_error[u] / trials;
    worst_mse = std::max(worst_mse, mse);
    ASSERT_LE(mse, mse_bound) << "key " << u;
  }
  std::cout << "  interval violation rate " << violation_rate << " (beta "
            << params.beta << "); worst per-key MSE " << worst_mse
            << " (bound " << mse_bound << ")\n";

  EXPECT_LT(elapsed_seconds(), 300.0);
}

TEST_F(Acceptance, C08_DpAuditOnWorstCasePairs) {
  struct AuditCase {
    NeighborPair pair;
    std::uint64_t k;
    std::uint64_t d;
  };
  // Both counter cases from the neighbor-structure analysis plus key-set
  // changes, across k = 1..3.
  const std::vector<AuditCase> cases = {
      {{{1, 2, 3}, {1, 2}, 2}, 2, 3},        // all counters decremented
      {{{1, 1}, {1}, 1}, 2, 2},              // one counter incremented
      {{{1}, {}, 0}, 2, 3},                  // stored key set changes
      {{{1, 2, 3, 4}, {1, 2, 3}, 3}, 3, 4},  // decrement case at k=3
      {{{1, 2}, {2}, 0}, 1, 2},              // eviction at capacity one
  };
  const double epsilon = 1.0, delta = 0.05;
  for (const auto& tc : cases) {
    const PrivacyParams params{epsilon, delta, 0.05};
    const AuditMechanism mech = [&tc, params](const Stream& stream,
                                                std::uint64_t seed) {
      Sketch s(tc.k, tc.d);
      s.process(stream);
      NoiseSampler sampler(NoiseBackend::kLaplace, seed);
      return privatize_mg(s, params, sampler);
    };
    const AuditReport report =
        dp_audit(mech, tc.pair, epsilon, delta, 200000, 987654);
    EXPECT_FALSE(report.any_flagged())
        << "k=" << tc.k << " pair=" << tc.pair.longer.size() << "-item";
    std::cout << "  k=" << tc.k << " pair of " << tc.pair.longer.size()
              << "/" << tc.pair.shorter.size()
              << " items: worst empirical ratio " << report.worst_ratio
              << " (e^eps = " << std::exp(epsilon) << ")\n";
  }

  // Harness sensitivity: the no-shared-noise, no-threshold variant must be
  // flagged on a pair whose sketches differ in every counter.
  const std::uint64_t k = 3, d = 4;
  const AuditMechanism broken = [&](const Stream& stream, std::uint64_t seed) {
    Sketch s(k, d);
    s.process(stream);
    NoiseSampler sampler(NoiseBackend::kLaplace, seed);
    return broken_release_no_shared_noise(s, 1.0, sampler);
  };
  NeighborPair decrement_pair{{1, 2, 3, 4}, {1, 2, 3}, 3};
  const AuditEventExtractor extractor =
      make_quartile_extractor(broken, decrement_pair.longer, 2000, 4242);
  const AuditReport flagged =
      dp_audit(broken, decrement_pair, 1.0, 0.0, 200000, 24680, extractor);
  EXPECT_TRUE(flagged.any_flagged())
      << "auditor failed to flag the deliberately broken mechanism";

  EXPECT_LT(elapsed_seconds(), 600.0);
}

TEST_F(Acceptance, C09_ThresholdAndBoundFormulas) {
  EXPECT_NEAR(threshold_pmg({1.0, 0.05}), 1.0 + 2.0 * std::log(60.0), 1e-12);
  EXPECT_NEAR(threshold_pmg({1.0, 0.05}), 9.188689124444201, 1e-12);

  // Raised threshold for zero-removing sketches, k=2:
  // 1 + 2 ln((k+1)/(2 delta))/eps = 1 + 2 ln 30.
  EXPECT_NEAR(threshold_standard_mg({1.0, 0.05}, 2),
              1.0 + 2.0 * std::log(30.0), 1e-12);

  // Merged stored-keys threshold: 1 + (k/eps) ln(2k/delta) = 1 + 2 ln 80.
  EXPECT_NEAR(threshold_merged({1.0, 0.05}, 2), 1.0 + 2.0 * std::log(80.0),
              1e-12);

  const ErrorBound b = error_bound({1.0, 0.05, 0.05}, 2, 0);
  EXPECT_NEAR(b.upper, 2.0 * std::log(60.0), 1e-12);
  EXPECT_NEAR(b.lower, -2.0 * std::log(60.0) - 1.0 - 2.0 * std::log(60.0),
              1e-12);
  const double mse_root = 1.0 + (2.0 + 2.0 * std::log(60.0)) / 1.0;
  EXPECT_NEAR(error_bound({1.0, 0.05, 0.05}, 2, 0).mse_bound,
              3.0 * mse_root * mse_root, 1e-12);
}

TEST_F(Acceptance, C10_DeterminismAndRoundTrip) {
  // Serialization identity over every enumerated sketch state.
  for (std::uint64_t d = 1; d <= 4; ++d) {
    for (std::uint64_t k : {1, 2, 3}) {
      enumerate_streams(d, 8, [&](const Stream& stream) {
        Sketch s(k, d);
        s.process(stream);
        const Sketch back = parse_sketch(serialize_sketch(s));
        ASSERT_EQ(back.entries(), s.entries());
        ASSERT_EQ(back.stream_length(), s.stream_length());
        ASSERT_EQ(back.decrement_count(), s.decrement_count());
        ASSERT_EQ(serialize_sketch(back), serialize_sketch(s));
      });
    }
  }

  // Byte-identical end-to-end CLI runs for identical inputs, flags and seed.
  const fs::path dir = fs::temp_directory_path() / "mgdp_acceptance_c10";
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::string stream;
  for (int i = 0; i < 40; ++i) stream += std::to_string(i % 3 + 1) + "\n";
  {
    std::ofstream f(dir / "stream.txt");
    f << stream;
  }
  const auto shell = [&](const std::string& args, const std::string& out) {
    const std::string cmd = std::string(MGDP_CLI_PATH) + " " + args + " > " +
                            (dir / out).string() + " 2> " +
                            (dir / "stderr").string();
    return WEXITSTATUS(std::system(cmd.c_str()));
  };
  const auto slurp = [&](const std::string& name) {
    std::ifstream in(dir / name, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  for (const char* name : {"a.json", "b.json"}) {
    ASSERT_EQ(shell("build --k 2 --universe-size 3 --input " +
                        (dir / "stream.txt").string() + " --output-sketch " +
                        (dir / name).string(),
                    "build_out"),
              0);
  }
  ASSERT_EQ(slurp("a.json"), slurp("b.json"));
  ASSERT_EQ(shell("release --sketch " + (dir / "a.json").string() +
                      " --epsilon 1 --delta 0.05 --beta 0.05 --seed 424242 "
                      "--mechanism approx",
                  "r1.json"),
            0);
  ASSERT_EQ(shell("release --sketch " + (dir / "b.json").string() +
                      " --epsilon 1 --delta 0.05 --beta 0.05 --seed 424242 "
                      "--mechanism approx",
                  "r2.json"),
            0);
  EXPECT_EQ(slurp("r1.json"), slurp("r2.json"));
  EXPECT_FALSE(slurp("r1.json").empty());
  fs::remove_all(dir);
}

}  // namespace
}  // namespace mgdp
