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
#include <stdexcept>
#include <string>

namespace mgdp {

/// SplitMix64: a tiny counter-based generator. The state advances by a fixed
/// increment and the output is a bijective hash of the state, so a given seed
/// always yields the same stream on every platform.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit constexpr SplitMix64(std::uint64_t seed) : state_(seed) {}

  constexpr std::uint64_t operator()() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  static constexpr std::uint64_t min() { return 0; }
  static constexpr std::uint64_t max() { return UINT64_MAX; }

 private:
  std::uint64_t state_;
};

enum class NoiseBackend {
  kLaplace,    // continuous Laplace, 64-bit floating point
  kGeometric,  // two-sided geometric (discrete Laplace analogue)
  kZero,       // always 0; testing hook, provides no privacy
};

inline std::string to_string(NoiseBackend b) {
  switch (b) {
    case NoiseBackend::kLaplace: return "laplace";
    case NoiseBackend::kGeometric: return "geometric";
    case NoiseBackend::kZero: return "zero";
  }
  throw std::logic_error("unknown noise backend");
}

inline NoiseBackend parse_noise_backend(const std::string& s) {
  if (s == "laplace") return NoiseBackend::kLaplace;
  if (s == "geometric") return NoiseBackend::kGeometric;
  if (s == "zero") return NoiseBackend::kZero;
  throw std::invalid_argument("unknown noise backend: " + s);
}

/// Inverse-CDF transform of the Laplace distribution with scale b:
/// maps u in (0,1) to -b * sign(u - 1/2) * ln(1 - 2|u - 1/2|).
inline double laplace_from_uniform(double scale, double u) {
  if (!(scale > 0)) throw std::invalid_argument("laplace scale must be > 0");
  if (!(u > 0 && u < 1))
    throw std::invalid_argument("uniform input must lie in (0,1)");
  const double t = u - 0.5;
  return (t >= 0 ? -scale : scale) * std::log1p(-2.0 * std::fabs(t));
}

/// Upper tail Pr[Lap(b) >= t] = (1/2) e^{-t/b} for t >= 0.
inline double laplace_tail(double scale, double t) {
  if (!(scale > 0)) throw std::invalid_argument("laplace scale must be > 0");
  if (t < 0) throw std::invalid_argument("tail threshold must be >= 0");
  return 0.5 * std::exp(-t / scale);
}

/// Seeded noise source. One instance per release; the same (seed, backend)
/// and the same sequence of sample() calls reproduce the same variates.
class NoiseSampler {
 public:
  NoiseSampler(NoiseBackend backend, std::uint64_t seed)
      : backend_(backend), rng_(seed) {}

  NoiseBackend backend() const { return backend_; }

  /// One symmetric variate at the given scale. Continuous for the Laplace
  /// backend, integer-valued for the geometric backend, 0 for the zero hook.
  double sample(double scale) {
    switch (backend_) {
      case NoiseBackend::kLaplace:
        return laplace_from_uniform(scale, next_uniform());
      case NoiseBackend::kGeometric:
        return static_cast<double>(two_sided_geometric(scale));
      case NoiseBackend::kZero:
        return 0.0;
    }
    throw std::logic_error("unknown noise backend");
  }

  /// Uniform in the open interval (0,1): (word >> 11 is 53 bits, +1/2 keeps
  /// the value away from both endpoints).
  double next_uniform() {
    return (static_cast<double>(rng_() >> 11) + 0.5) * 0x1.0p-53;
  }

 private:
  // Pr[X = x] = ((1-a)/(1+a)) a^{|x|} with a = e^{-1/b}, realized as the
  // difference of two one-sided geometric draws.
  std::int64_t two_sided_geometric(double scale) {
    if (!(scale > 0)) throw std::invalid_argument("noise scale must be > 0");
    const double log_alpha = -1.0 / scale;
    return one_sided(log_alpha) - one_sided(log_alpha);
  }

  std::int64_t one_sided(double log_alpha) {
    // Pr[G >= g] = alpha^g for g = floor(log(1-u)/log(alpha)).
    const double u = next_uniform();
    return static_cast<std::int64_t>(std::floor(std::log1p(-u) / log_alpha));
  }

  NoiseBackend backend_;
  SplitMix64 rng_;
};

}  // namespace mgdp
