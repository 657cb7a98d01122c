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
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mgdp {

// Items are positive integers. Real items live in [1, d]; the ids in
// (d, d+k] are reserved for the sketch's dummy slots and never appear in a
// stream.
using ItemId = std::uint64_t;
using Count = std::uint64_t;

struct SketchEntry {
  ItemId key;
  Count count;

  friend bool operator==(const SketchEntry&, const SketchEntry&) = default;
};

/// Misra-Gries sketch with fixed occupancy.
///
/// The sketch always stores exactly k key/counter pairs. Unused slots hold
/// dummy keys d+1, ..., d+k with counter 0, and keys whose counter reaches 0
/// are kept until their slot is reused. When a slot is needed, the smallest
/// key with a zero counter is evicted; since dummy ids sit above the real
/// universe, real zero-count keys are always recycled before dummies.
///
/// The sketch also tracks gamma, the number of decrement-all steps executed,
/// and n, the number of items processed. Both are needed by the private
/// release mechanisms built on top.
class Sketch {
 public:
  Sketch(std::uint64_t capacity, std::uint64_t universe_size)
      : k_(capacity), d_(universe_size) {
    if (k_ == 0) throw std::invalid_argument("sketch capacity k must be >= 1");
    if (d_ == 0) throw std::invalid_argument("universe size d must be >= 1");
    if (d_ > UINT64_MAX - k_)
      throw std::invalid_argument("universe size d + capacity k overflows");
    entries_.reserve(k_);
    for (std::uint64_t i = 1; i <= k_; ++i) entries_.push_back({d_ + i, 0});
  }

  std::uint64_t capacity() const { return k_; }
  std::uint64_t universe_size() const { return d_; }
  std::uint64_t stream_length() const { return n_; }
  std::uint64_t decrement_count() const { return gamma_; }

  /// Stored entries, sorted by key ascending; always exactly k of them.
  const std::vector<SketchEntry>& entries() const { return entries_; }

  bool is_dummy(ItemId id) const { return id > d_ && id <= d_ + k_; }

  /// Process one stream element (Algorithm: increment if stored, decrement
  /// all if saturated, otherwise evict the smallest zero-count key).
  void update(ItemId x) {
    require_real(x);
    auto it = find(x);
    if (it != entries_.end()) {
      ++it->count;  // Branch 1: x already has a counter.
    } else {
      auto zero = std::find_if(entries_.begin(), entries_.end(),
                               [](const SketchEntry& e) { return e.count == 0; });
      if (zero == entries_.end()) {
        // Branch 2: all counters >= 1; decrement everything.
        for (auto& e : entries_) --e.count;
        ++gamma_;
      } else {
        // Branch 3: evict the smallest zero-count key (entries_ is sorted,
        // so the first zero is the smallest).
        entries_.erase(zero);
        entries_.insert(std::upper_bound(entries_.begin(), entries_.end(), x,
                                         [](ItemId id, const SketchEntry& e) {
                                           return id < e.key;
                                         }),
                        {x, 1});
      }
    }
    ++n_;
  }

  /// Left-fold of update over a stream. Reports the failing position on
  /// invalid items.
  void process(std::span<const ItemId> items) {
    for (std::size_t i = 0; i < items.size(); ++i) {
      try {
        update(items[i]);
      } catch (const std::invalid_argument& e) {
        throw std::invalid_argument("stream position " + std::to_string(i) +
                                    ": " + e.what());
      }
    }
  }

  /// Frequency estimate for a real item: its stored counter, or 0.
  Count estimate(ItemId x) const {
    require_real(x);
    auto it = find(x);
    return it == entries_.end() ? 0 : it->count;
  }

  /// True once a private release has consumed this sketch.
  bool released() const { return released_; }
  void mark_released() { released_ = true; }

  /// Rebuilds a sketch from serialized state, revalidating every invariant.
  static Sketch from_parts(std::uint64_t k, std::uint64_t d, std::uint64_t n,
                           std::uint64_t gamma,
                           std::vector<SketchEntry> entries) {
    Sketch s(k, d);
    if (entries.size() != k)
      throw std::invalid_argument("sketch must store exactly k entries");
    Count total = 0;
    for (std::size_t i = 0; i < entries.size(); ++i) {
      const auto& e = entries[i];
      if (i > 0 && entries[i - 1].key >= e.key)
        throw std::invalid_argument("sketch entries must be strictly ascending");
      if (e.key == 0 || e.key > d + k)
        throw std::invalid_argument("sketch key outside [1, d+k]");
      if (e.key > d && e.count != 0)
        throw std::invalid_argument("dummy key with nonzero counter");
      total += e.count;
    }
    if (total > n)
      throw std::invalid_argument("counter sum exceeds stream length");
    if (gamma > n / (k + 1))
      throw std::invalid_argument("gamma exceeds floor(n/(k+1))");
    s.entries_ = std::move(entries);
    s.n_ = n;
    s.gamma_ = gamma;
    return s;
  }

 private:
  std::vector<SketchEntry>::iterator find(ItemId x) {
    auto it = std::lower_bound(
        entries_.begin(), entries_.end(), x,
        [](const SketchEntry& e, ItemId id) { return e.key < id; });
    return (it != entries_.end() && it->key == x) ? it : entries_.end();
  }
  std::vector<SketchEntry>::const_iterator find(ItemId x) const {
    return const_cast<Sketch*>(this)->find(x);
  }

  void require_real(ItemId x) const {
    if (x == 0 || x > d_)
      throw std::invalid_argument("item id " + std::to_string(x) +
                                  " outside universe [1, " +
                                  std::to_string(d_) + "]");
  }

  std::uint64_t k_;
  std::uint64_t d_;
  std::uint64_t n_ = 0;
  std::uint64_t gamma_ = 0;
  std::vector<SketchEntry> entries_;  // sorted by key, size k
  bool released_ = false;
};

/// A zero-retention ("standard") Misra-Gries state: real keys with positive
/// counters only, at most k of them. This is the input shape accepted by the
/// raised-threshold release for stock MG implementations.
class CanonicalSketch {
 public:
  CanonicalSketch(std::uint64_t capacity, std::uint64_t universe_size)
      : k_(capacity), d_(universe_size) {
    if (k_ == 0) throw std::invalid_argument("sketch capacity k must be >= 1");
    if (d_ == 0) throw std::invalid_argument("universe size d must be >= 1");
  }

  /// Drops dummy slots and zero counters from a fixed-occupancy sketch.
  static CanonicalSketch from_sketch(const Sketch& s) {
    CanonicalSketch c(s.capacity(), s.universe_size());
    for (const auto& e : s.entries())
      if (!s.is_dummy(e.key) && e.count > 0) c.entries_.push_back(e);
    c.n_ = s.stream_length();
    return c;
  }

  std::uint64_t capacity() const { return k_; }
  std::uint64_t universe_size() const { return d_; }
  std::uint64_t stream_length() const { return n_; }
  void set_stream_length(std::uint64_t n) { n_ = n; }
  const std::vector<SketchEntry>& entries() const { return entries_; }

  Count estimate(ItemId x) const {
    auto it = std::lower_bound(
        entries_.begin(), entries_.end(), x,
        [](const SketchEntry& e, ItemId id) { return e.key < id; });
    return (it != entries_.end() && it->key == x) ? it->count : 0;
  }

  /// Inserts or overwrites a counter; used by the reference updater.
  void set_count(ItemId x, Count c) {
    auto it = std::lower_bound(
        entries_.begin(), entries_.end(), x,
        [](const SketchEntry& e, ItemId id) { return e.key < id; });
    if (it != entries_.end() && it->key == x) {
      it->count = c;
    } else {
      if (entries_.size() == k_)
        throw std::logic_error("canonical sketch already holds k keys");
      entries_.insert(it, {x, c});
    }
  }

  void erase(ItemId x) {
    auto it = std::lower_bound(
        entries_.begin(), entries_.end(), x,
        [](const SketchEntry& e, ItemId id) { return e.key < id; });
    if (it != entries_.end() && it->key == x) entries_.erase(it);
  }

  std::size_t size() const { return entries_.size(); }

  bool released() const { return released_; }
  void mark_released() { released_ = true; }

 private:
  std::uint64_t k_;
  std::uint64_t d_;
  std::uint64_t n_ = 0;
  std::vector<SketchEntry> entries_;  // sorted by key, no zeros, no dummies
  bool released_ = false;
};

}  // namespace mgdp
