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

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "mgdp/noise.hpp"
#include "mgdp/sketch.hpp"
#include "mgdp/summary.hpp"

namespace mgdp {

/// Sketch after the sensitivity-reducing shift: each retained counter holds
/// count + gamma - n/(k+1), which is an exact rational with denominator k+1.
/// Counters are kept as integer numerators over that common denominator so
/// sensitivity checks need no floating point.
class OffsetSketch {
 public:
  struct Entry {
    ItemId key;
    std::int64_t numerator;  // value = numerator / (k+1), always >= 0
  };

  OffsetSketch(std::uint64_t k, std::uint64_t d, std::uint64_t n,
               std::vector<Entry> entries)
      : k_(k), d_(d), n_(n), entries_(std::move(entries)) {}

  std::uint64_t capacity() const { return k_; }
  std::uint64_t universe_size() const { return d_; }
  std::uint64_t stream_length() const { return n_; }
  std::uint64_t denominator() const { return k_ + 1; }
  const std::vector<Entry>& entries() const { return entries_; }

  /// Exact numerator of the stored value, 0 for absent keys.
  std::int64_t numerator(ItemId x) const {
    auto it = std::lower_bound(
        entries_.begin(), entries_.end(), x,
        [](const Entry& e, ItemId id) { return e.key < id; });
    return (it != entries_.end() && it->key == x) ? it->numerator : 0;
  }

  double estimate(ItemId x) const {
    return static_cast<double>(numerator(x)) / static_cast<double>(k_ + 1);
  }

  bool released() const { return released_; }
  void mark_released() { released_ = true; }

 private:
  std::uint64_t k_;
  std::uint64_t d_;
  std::uint64_t n_;
  std::vector<Entry> entries_;  // sorted by key; real keys only
  bool released_ = false;
};

/// Shifts every real counter by gamma - n/(k+1) and drops the ones that go
/// negative. Estimates keep the [f(x) - n/(k+1), f(x)] guarantee while the
/// l1-sensitivity of the full-universe vector drops to 1 + k/(k+1).
inline OffsetSketch postprocess(const Sketch& s) {
  const std::uint64_t k = s.capacity();
  const std::uint64_t n = s.stream_length();
  const std::uint64_t gamma = s.decrement_count();
  std::vector<OffsetSketch::Entry> entries;
  entries.reserve(k);
  if (n > static_cast<std::uint64_t>(INT64_MAX))
    throw std::overflow_error("stream length exceeds supported range");
  for (const auto& e : s.entries()) {
    if (s.is_dummy(e.key)) continue;
    // numerator = (count + gamma)(k+1) - n, exact in 64-bit for any stream
    // this sketch can legally represent.
    const std::uint64_t shifted = e.count + gamma;
    if (shifted > static_cast<std::uint64_t>(INT64_MAX) / (k + 1))
      throw std::overflow_error("offset numerator overflows 64-bit range");
    const std::int64_t numerator =
        static_cast<std::int64_t>(shifted * (k + 1)) -
        static_cast<std::int64_t>(n);
    if (numerator >= 0) entries.push_back({e.key, numerator});
  }
  return OffsetSketch(k, s.universe_size(), n, std::move(entries));
}

struct PureReleaseOptions {
  std::uint64_t universe_cap = kDefaultUniverseCap;
  double beta = 0.05;  // sizes the reported interval only
};

/// Pure-DP release: Laplace(2/eps) noise on the count of every universe
/// element (implicit zeros included), keeping the k largest noisy counts.
/// Ties break toward the smaller key. O(d) time; refuses oversized universes.
inline PrivateSummary privatize_pure(OffsetSketch& o, double epsilon,
                                     NoiseSampler& sampler,
                                     const PureReleaseOptions& opt = {}) {
  if (!(epsilon > 0) || !std::isfinite(epsilon))
    throw std::invalid_argument("epsilon must be finite and > 0");
  if (o.released())
    throw std::logic_error("sketch was already released; privacy budget spent");
  if (o.universe_size() > opt.universe_cap)
    throw std::invalid_argument(
        "universe too large for full-universe noise (cap " +
        std::to_string(opt.universe_cap) + ")");

  const double scale = 2.0 / epsilon;
  const std::uint64_t d = o.universe_size();
  const std::uint64_t k = o.capacity();

  std::vector<SummaryEntry> noisy;
  noisy.reserve(d);
  for (ItemId u = 1; u <= d; ++u)
    noisy.push_back({u, o.estimate(u) + sampler.sample(scale)});

  const std::size_t keep = static_cast<std::size_t>(std::min<std::uint64_t>(k, d));
  auto larger = [](const SummaryEntry& a, const SummaryEntry& b) {
    return a.count > b.count || (a.count == b.count && a.key < b.key);
  };
  std::partial_sort(noisy.begin(), noisy.begin() + keep, noisy.end(), larger);
  noisy.resize(keep);
  std::sort(noisy.begin(), noisy.end(),
            [](const SummaryEntry& a, const SummaryEntry& b) {
              return a.key < b.key;
            });

  PrivateSummary out;
  out.mechanism = "pure";
  out.k = k;
  out.d = d;
  out.n = o.stream_length();
  out.epsilon = epsilon;
  out.beta = opt.beta;
  out.noise = sampler.backend();
  out.entries = std::move(noisy);
  // All d noise magnitudes stay below 2 ln(d/beta)/eps with prob >= 1-beta;
  // the sketch itself errs by at most n/(k+1) downward.
  const double noise_bound = scale * std::log(static_cast<double>(d) / opt.beta);
  out.interval = ErrorInterval{
      -noise_bound - static_cast<double>(o.stream_length()) / (k + 1),
      noise_bound};
  o.mark_released();
  return out;
}

}  // namespace mgdp
