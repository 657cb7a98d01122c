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
#include "mgdp/release.hpp"
#include "mgdp/sketch.hpp"
#include "mgdp/summary.hpp"

namespace mgdp {

/// Combination of one or more Misra-Gries sketches under a trusted
/// aggregator. Canonical form: at most k real keys, all counts positive,
/// N = total length of all contributing streams. Frequency estimates keep
/// the N/(k+1) undercount bound regardless of merge order.
class MergedSketch {
 public:
  MergedSketch(std::uint64_t capacity, std::uint64_t universe_size)
      : k_(capacity), d_(universe_size) {
    if (k_ == 0) throw std::invalid_argument("sketch capacity k must be >= 1");
    if (d_ == 0) throw std::invalid_argument("universe size d must be >= 1");
  }

  /// A single sketch in mergeable form: dummies and zero counters dropped.
  static MergedSketch from_sketch(const Sketch& s) {
    MergedSketch m(s.capacity(), s.universe_size());
    for (const auto& e : s.entries())
      if (!s.is_dummy(e.key) && e.count > 0) m.entries_.push_back(e);
    m.total_length_ = s.stream_length();
    return m;
  }

  static MergedSketch from_parts(std::uint64_t k, std::uint64_t d,
                                 std::uint64_t total_length,
                                 std::vector<SketchEntry> entries) {
    MergedSketch m(k, d);
    if (entries.size() > k)
      throw std::invalid_argument("merged sketch holds more than k entries");
    for (std::size_t i = 0; i < entries.size(); ++i) {
      if (i > 0 && entries[i - 1].key >= entries[i].key)
        throw std::invalid_argument("entries must be strictly ascending");
      if (entries[i].key == 0 || entries[i].key > d)
        throw std::invalid_argument("merged sketch key outside [1, d]");
      if (entries[i].count == 0)
        throw std::invalid_argument("merged sketch counts must be positive");
    }
    m.entries_ = std::move(entries);
    m.total_length_ = total_length;
    return m;
  }

  std::uint64_t capacity() const { return k_; }
  std::uint64_t universe_size() const { return d_; }
  std::uint64_t total_length() const { return total_length_; }
  const std::vector<SketchEntry>& entries() const { return entries_; }

  Count estimate(ItemId x) const {
    auto it = std::lower_bound(
        entries_.begin(), entries_.end(), x,
        [](const SketchEntry& e, ItemId id) { return e.key < id; });
    return (it != entries_.end() && it->key == x) ? it->count : 0;
  }

  bool released() const { return released_; }
  void mark_released() { released_ = true; }

 private:
  friend MergedSketch merge(const MergedSketch&, const MergedSketch&);

  std::uint64_t k_;
  std::uint64_t d_;
  std::uint64_t total_length_ = 0;
  std::vector<SketchEntry> entries_;  // sorted by key; positive counts only
  bool released_ = false;
};

/// Sums counters over the key union, subtracts the (k+1)-th largest summed
/// counter from everything, and drops non-positive results.
inline MergedSketch merge(const MergedSketch& a, const MergedSketch& b) {
  if (a.capacity() != b.capacity())
    throw std::invalid_argument("cannot merge sketches with different k");
  if (a.universe_size() != b.universe_size())
    throw std::invalid_argument("cannot merge sketches over different universes");

  std::vector<SketchEntry> summed;
  summed.reserve(a.entries().size() + b.entries().size());
  auto ia = a.entries().begin(), ib = b.entries().begin();
  while (ia != a.entries().end() || ib != b.entries().end()) {
    if (ib == b.entries().end() || (ia != a.entries().end() && ia->key < ib->key)) {
      summed.push_back(*ia++);
    } else if (ia == a.entries().end() || ib->key < ia->key) {
      summed.push_back(*ib++);
    } else {
      summed.push_back({ia->key, ia->count + ib->count});
      ++ia, ++ib;
    }
  }

  // Value of the (k+1)-th largest summed counter, 0 when there are at most k.
  Count v = 0;
  const std::uint64_t k = a.capacity();
  if (summed.size() > k) {
    std::vector<Count> counts;
    counts.reserve(summed.size());
    for (const auto& e : summed) counts.push_back(e.count);
    std::nth_element(counts.begin(), counts.begin() + k, counts.end(),
                     std::greater<Count>());
    v = counts[k];
  }

  MergedSketch out(a.capacity(), a.universe_size());
  for (const auto& e : summed)
    if (e.count > v) out.entries_.push_back({e.key, e.count - v});
  out.total_length_ = a.total_length() + b.total_length();
  return out;
}

/// Merged release via full-universe noise: Laplace(k/eps) on every element
/// of [1, d], keeping the top-k noisy counts (ties toward the smaller key).
inline PrivateSummary privatize_merged_universe(
    MergedSketch& m, double epsilon, NoiseSampler& sampler,
    std::uint64_t universe_cap = kDefaultUniverseCap) {
  if (!(epsilon > 0) || !std::isfinite(epsilon))
    throw std::invalid_argument("epsilon must be finite and > 0");
  if (m.released())
    throw std::logic_error("sketch was already released; privacy budget spent");
  if (m.universe_size() > universe_cap)
    throw std::invalid_argument(
        "universe too large for full-universe noise (cap " +
        std::to_string(universe_cap) + ")");

  const std::uint64_t k = m.capacity();
  const std::uint64_t d = m.universe_size();
  const double scale = static_cast<double>(k) / epsilon;

  std::vector<SummaryEntry> noisy;
  noisy.reserve(d);
  for (ItemId u = 1; u <= d; ++u)
    noisy.push_back(
        {u, static_cast<double>(m.estimate(u)) + sampler.sample(scale)});

  const std::size_t keep = static_cast<std::size_t>(std::min<std::uint64_t>(k, d));
  std::partial_sort(noisy.begin(), noisy.begin() + keep, noisy.end(),
                    [](const SummaryEntry& a, const SummaryEntry& b) {
                      return a.count > b.count ||
                             (a.count == b.count && a.key < b.key);
                    });
  noisy.resize(keep);
  std::sort(noisy.begin(), noisy.end(),
            [](const SummaryEntry& a, const SummaryEntry& b) {
              return a.key < b.key;
            });

  PrivateSummary out;
  out.mechanism = "merged-universe";
  out.k = k;
  out.d = d;
  out.n = m.total_length();
  out.epsilon = epsilon;
  out.beta = 0.05;
  out.noise = sampler.backend();
  out.entries = std::move(noisy);
  const double noise_bound = scale * std::log(static_cast<double>(d) / out.beta);
  out.interval = ErrorInterval{
      -noise_bound - static_cast<double>(m.total_length()) / (k + 1),
      noise_bound};
  m.mark_released();
  return out;
}

/// Cutoff for the stored-keys-only merged release. Between neighboring
/// inputs up to 2k keys can differ, each with a count difference of at most
/// 1, so a per-key tail of delta/(4k) union-bounds the release probability
/// of any such key to at most delta/2.
inline double threshold_merged(const PrivacyParams& p, std::uint64_t k) {
  p.validate();
  if (k == 0) throw std::invalid_argument("capacity k must be >= 1");
  return 1.0 + static_cast<double>(k) / p.epsilon *
                   std::log(2.0 * static_cast<double>(k) / p.delta);
}

/// Merged release with noise on stored counters only: Laplace(k/eps) per
/// stored key, keeping noisy counts that reach the threshold above.
inline PrivateSummary privatize_merged_threshold(MergedSketch& m,
                                                 const PrivacyParams& p,
                                                 NoiseSampler& sampler,
                                                 const ReleaseOptions& opt = {}) {
  p.validate();
  if (m.released())
    throw std::logic_error("sketch was already released; privacy budget spent");

  const std::uint64_t k = m.capacity();
  const double scale = static_cast<double>(k) / p.epsilon;
  const double cutoff = opt.threshold_override.value_or(threshold_merged(p, k));

  PrivateSummary out;
  out.mechanism = "merged-threshold";
  out.k = k;
  out.d = m.universe_size();
  out.n = m.total_length();
  out.epsilon = p.epsilon;
  out.delta = p.delta;
  out.beta = p.beta;
  out.noise = sampler.backend();
  out.threshold = cutoff;
  for (const auto& e : m.entries()) {
    const double noisy = static_cast<double>(e.count) + sampler.sample(scale);
    if (noisy >= cutoff) out.entries.push_back({e.key, noisy});
  }
  const double noise_bound =
      scale * std::log(static_cast<double>(k) / p.beta);
  out.interval = detail::deviation_interval(
      noise_bound, cutoff, static_cast<double>(m.total_length()) / (k + 1));
  m.mark_released();
  return out;
}

}  // namespace mgdp
