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
// Brute-force oracles and verification harnesses. Everything in this header
// is deliberately independent of the sketch implementation it checks: exact
// histograms by direct counting, a separate reference implementation of the
// zero-removing Misra-Gries variant, exhaustive stream enumeration, and a
// sampling-based differential privacy auditor.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "mgdp/sketch.hpp"
#include "mgdp/summary.hpp"

namespace mgdp {

using Stream = std::vector<ItemId>;

/// Exact frequencies, the ground truth every estimate is compared against.
class ExactHistogram {
 public:
  ExactHistogram(const Stream& items, std::uint64_t universe_size)
      : d_(universe_size) {
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (items[i] == 0 || items[i] > d_)
        throw std::invalid_argument("stream position " + std::to_string(i) +
                                    ": item id " + std::to_string(items[i]) +
                                    " outside universe [1, " +
                                    std::to_string(d_) + "]");
      ++counts_[items[i]];
    }
    n_ = items.size();
  }

  std::uint64_t universe_size() const { return d_; }
  std::uint64_t total() const { return n_; }
  const std::map<ItemId, Count>& counts() const { return counts_; }

  Count count(ItemId x) const {
    auto it = counts_.find(x);
    return it == counts_.end() ? 0 : it->second;
  }

 private:
  std::uint64_t d_;
  std::uint64_t n_ = 0;
  std::map<ItemId, Count> counts_;
};

/// Reference implementation of the textbook Misra-Gries variant that removes
/// zero counters immediately. Used as the estimate-equivalence oracle.
inline CanonicalSketch canonical_mg(const Stream& items, std::uint64_t k,
                                    std::uint64_t d) {
  CanonicalSketch sketch(k, d);
  std::map<ItemId, Count> counts;
  for (std::size_t i = 0; i < items.size(); ++i) {
    const ItemId x = items[i];
    if (x == 0 || x > d)
      throw std::invalid_argument("stream position " + std::to_string(i) +
                                  ": item id outside universe");
    if (auto it = counts.find(x); it != counts.end()) {
      ++it->second;
    } else if (counts.size() < k) {
      counts.emplace(x, 1);
    } else {
      for (auto it = counts.begin(); it != counts.end();) {
        if (--it->second == 0)
          it = counts.erase(it);
        else
          ++it;
      }
    }
  }
  for (const auto& [key, count] : counts) sketch.set_count(key, count);
  sketch.set_stream_length(items.size());
  return sketch;
}

/// A stream and the same stream with one element deleted (the add/remove
/// neighbor relation).
struct NeighborPair {
  Stream longer;
  Stream shorter;
  std::size_t removal_index;
};

namespace detail {

inline std::uint64_t enumeration_cost(std::uint64_t d, std::size_t n_max) {
  // streams times their length; overflow-safe for any guard-worthy input.
  long double total = 0;
  long double streams = 1;
  for (std::size_t m = 1; m <= n_max; ++m) {
    streams *= static_cast<long double>(d);
    total += streams * static_cast<long double>(m);
    if (total > 1e18L) return UINT64_MAX;
  }
  return static_cast<std::uint64_t>(total);
}

}  // namespace detail

inline constexpr std::uint64_t kEnumerationGuard = 500'000'000;

/// Visits every stream over [1, d] with length in [min_len, n_max].
/// The buffer passed to the callback is reused between calls.
inline void enumerate_streams(std::uint64_t d, std::size_t n_max,
                              const std::function<void(const Stream&)>& visit,
                              std::size_t min_len = 0) {
  if (d == 0) throw std::invalid_argument("universe size d must be >= 1");
  if (detail::enumeration_cost(d, n_max) > kEnumerationGuard)
    throw std::invalid_argument("enumeration grid too large");
  Stream stream;
  for (std::size_t len = min_len; len <= n_max; ++len) {
    stream.assign(len, 1);
    if (len == 0) {
      visit(stream);
      continue;
    }
    while (true) {
      visit(stream);
      // odometer increment over [1, d]^len
      std::size_t pos = len;
      while (pos > 0 && stream[pos - 1] == d) stream[--pos] = 1;
      if (pos == 0) break;
      ++stream[pos - 1];
    }
  }
}

/// Visits every neighboring pair: each stream of length 1..n_max over [1, d]
/// and each of its single-element deletions.
inline void enumerate_neighbor_pairs(
    std::uint64_t d, std::size_t n_max,
    const std::function<void(const NeighborPair&)>& visit) {
  NeighborPair pair;
  enumerate_streams(
      d, n_max,
      [&](const Stream& s) {
        pair.longer = s;
        for (std::size_t i = 0; i < s.size(); ++i) {
          pair.shorter.clear();
          pair.shorter.insert(pair.shorter.end(), s.begin(), s.begin() + i);
          pair.shorter.insert(pair.shorter.end(), s.begin() + i + 1, s.end());
          pair.removal_index = i;
          visit(pair);
        }
      },
      /*min_len=*/1);
}

enum class NeighborCase {
  kAllMinusOne,       // every counter of the longer run is one below its peer
  kSinglePlusOne,     // exactly one counter of the longer run is one above
  kViolation,
};

inline std::string to_string(NeighborCase c) {
  switch (c) {
    case NeighborCase::kAllMinusOne: return "all-minus-one";
    case NeighborCase::kSinglePlusOne: return "single-plus-one";
    case NeighborCase::kViolation: return "violation";
  }
  return "unknown";
}

struct NeighborStructureReport {
  std::size_t intersection_size = 0;
  Count off_intersection_max = 0;
  NeighborCase structure_case = NeighborCase::kViolation;
  std::string detail;  // sketch dumps on violation
};

namespace detail {

inline std::string dump_entries(const Sketch& s) {
  std::ostringstream os;
  os << "{";
  for (const auto& e : s.entries()) os << e.key << ":" << e.count << " ";
  os << "gamma=" << s.decrement_count() << " n=" << s.stream_length() << "}";
  return os.str();
}

// Counter value of key `x`, with the implicit 0 for keys outside the stored
// set. Dummy ids are valid lookups.
inline Count value_of(const Sketch& s, ItemId x) {
  for (const auto& e : s.entries())
    if (e.key == x) return e.count;
  return 0;
}

inline bool stores(const Sketch& s, ItemId x) {
  return std::any_of(s.entries().begin(), s.entries().end(),
                     [&](const SketchEntry& e) { return e.key == x; });
}

inline std::vector<ItemId> key_union(const Sketch& a, const Sketch& b) {
  std::vector<ItemId> keys;
  for (const auto& e : a.entries()) keys.push_back(e.key);
  for (const auto& e : b.entries())
    if (!stores(a, e.key)) keys.push_back(e.key);
  return keys;
}

}  // namespace detail

/// Verifies the neighbor-structure facts on sketches of neighboring streams:
/// the key sets share at least k-2 keys, counters outside the intersection
/// are at most 1, and exactly one of the two admissible counter relations
/// holds. `on_longer` must be the sketch of the stream with the extra
/// element; conditions are phrased as in the removal direction, where the
/// longer stream plays S.
inline NeighborStructureReport check_neighbor_structure(
    const Sketch& on_longer, const Sketch& on_shorter) {
  NeighborStructureReport report;
  const std::uint64_t k = on_longer.capacity();

  std::size_t intersection = 0;
  Count off_max = 0;
  for (const auto& e : on_longer.entries()) {
    if (detail::stores(on_shorter, e.key))
      ++intersection;
    else
      off_max = std::max(off_max, e.count);
  }
  for (const auto& e : on_shorter.entries())
    if (!detail::stores(on_longer, e.key)) off_max = std::max(off_max, e.count);
  report.intersection_size = intersection;
  report.off_intersection_max = off_max;

  // Case 1: c_i = c'_i - 1 for every i stored by the shorter run, and
  // c_j = 0 for every key outside that set.
  bool all_minus_one = true;
  for (const auto& e : on_shorter.entries())
    if (detail::value_of(on_longer, e.key) + 1 != e.count) {
      all_minus_one = false;
      break;
    }
  if (all_minus_one)
    for (const auto& e : on_longer.entries())
      if (!detail::stores(on_shorter, e.key) && e.count != 0) {
        all_minus_one = false;
        break;
      }

  // Case 2: exactly one key with c_i = c'_i + 1, all other values equal.
  std::size_t plus_one_keys = 0;
  bool others_equal = true;
  for (ItemId key : detail::key_union(on_longer, on_shorter)) {
    const Count c = detail::value_of(on_longer, key);
    const Count cp = detail::value_of(on_shorter, key);
    if (c == cp + 1)
      ++plus_one_keys;
    else if (c != cp)
      others_equal = false;
  }
  const bool single_plus_one = others_equal && plus_one_keys == 1;

  if (intersection + 2 >= k && off_max <= 1 &&
      (all_minus_one != single_plus_one)) {
    report.structure_case = all_minus_one ? NeighborCase::kAllMinusOne
                                          : NeighborCase::kSinglePlusOne;
  } else {
    report.structure_case = NeighborCase::kViolation;
    report.detail = "S=" + detail::dump_entries(on_longer) +
                    " S'=" + detail::dump_entries(on_shorter);
  }
  return report;
}

namespace detail {

// The same facts phrased from the insertion direction, where the shorter
// stream plays S and the cases flip: either c_i - 1 = c'_i on all of T with
// c'_j = 0 off T, or c_i + 1 = c'_i for exactly one i in T'. Transcribed
// independently of check_neighbor_structure so the two phrasings guard each
// other; a flipped case 1 is reported with the forward label kAllMinusOne.
inline NeighborStructureReport check_neighbor_structure_reversed(
    const Sketch& on_longer, const Sketch& on_shorter) {
  NeighborStructureReport report;
  const std::uint64_t k = on_longer.capacity();
  const Sketch& s = on_shorter;   // plays S
  const Sketch& sp = on_longer;   // plays S'

  std::size_t intersection = 0;
  Count off_max = 0;
  for (const auto& e : s.entries()) {
    if (stores(sp, e.key))
      ++intersection;
    else
      off_max = std::max(off_max, e.count);
  }
  for (const auto& e : sp.entries())
    if (!stores(s, e.key)) off_max = std::max(off_max, e.count);
  report.intersection_size = intersection;
  report.off_intersection_max = off_max;

  bool flipped_case1 = true;
  for (const auto& e : s.entries())
    if (e.count != value_of(sp, e.key) + 1) {
      flipped_case1 = false;
      break;
    }
  if (flipped_case1)
    for (const auto& e : sp.entries())
      if (!stores(s, e.key) && e.count != 0) {
        flipped_case1 = false;
        break;
      }

  std::size_t raised_in_sp = 0;
  bool others_equal = true;
  for (ItemId key : key_union(s, sp)) {
    const Count c = value_of(s, key);
    const Count cp = value_of(sp, key);
    if (c + 1 == cp)
      ++raised_in_sp;
    else if (c != cp)
      others_equal = false;
  }
  const bool flipped_case2 = others_equal && raised_in_sp == 1;

  if (intersection + 2 >= k && off_max <= 1 &&
      (flipped_case1 != flipped_case2)) {
    report.structure_case = flipped_case1 ? NeighborCase::kAllMinusOne
                                          : NeighborCase::kSinglePlusOne;
  } else {
    report.structure_case = NeighborCase::kViolation;
    report.detail = "S=" + dump_entries(s) + " S'=" + dump_entries(sp) +
                    " (reversed direction)";
  }
  return report;
}

}  // namespace detail

/// Runs the sketch on both streams of a pair and checks the structure. With
/// `reversed` set, the shorter stream plays S and the flipped conditions are
/// evaluated; labels stay in the longer run's terms, so a healthy pair
/// reports the same case in both directions.
inline NeighborStructureReport check_neighbor_pair(const NeighborPair& pair,
                                            std::uint64_t k, std::uint64_t d,
                                            bool reversed = false) {
  Sketch on_longer(k, d);
  on_longer.process(pair.longer);
  Sketch on_shorter(k, d);
  on_shorter.process(pair.shorter);
  return reversed
             ? detail::check_neighbor_structure_reversed(on_longer, on_shorter)
             : check_neighbor_structure(on_longer, on_shorter);
}

/// Largest absolute released-minus-true deviation over the whole universe,
/// implicit zeros included on both sides.
inline double max_error(const PrivateSummary& summary,
                        const ExactHistogram& oracle) {
  if (summary.d != oracle.universe_size())
    throw std::invalid_argument("summary and histogram universes differ");
  double worst = 0;
  for (ItemId u = 1; u <= oracle.universe_size(); ++u) {
    const double err = std::fabs(summary.value_or_zero(u) -
                                 static_cast<double>(oracle.count(u)));
    worst = std::max(worst, err);
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Statistical differential privacy auditor.
//
// The auditor runs a mechanism many times on both streams of a neighboring
// pair, maps each output to a finite event, and tests the empirical version
// of Pr[M(S) in Z] <= e^eps Pr[M(S') in Z] + delta in both directions. It can
// only falsify privacy, never certify it; slack of three binomial standard
// errors keeps the false-alarm rate low.
// ---------------------------------------------------------------------------

/// Mechanism under audit: maps (stream, per-trial seed) to a summary.
using AuditMechanism =
    std::function<PrivateSummary(const Stream&, std::uint64_t seed)>;

/// Maps a summary to a finite event label.
using AuditEventExtractor = std::function<std::string(const PrivateSummary&)>;

/// Default event: the set of released keys, e.g. "1,3".
inline std::string key_set_event(const PrivateSummary& summary) {
  std::string s;
  for (const auto& e : summary.entries) {
    if (!s.empty()) s += ',';
    s += std::to_string(e.key);
  }
  return s;
}

struct AuditEventStats {
  std::string event;
  std::uint64_t hits_longer = 0;
  std::uint64_t hits_shorter = 0;
  double worst_gap = 0;  // empirical lhs - (e^eps rhs + delta), before slack
  bool flagged = false;
  bool undersampled = false;
};

struct AuditReport {
  std::uint64_t trials = 0;
  double epsilon = 0;
  double delta = 0;
  std::vector<AuditEventStats> events;
  double worst_ratio = 0;  // max empirical Pr ratio over well-sampled events

  bool any_flagged() const {
    for (const auto& e : events)
      if (e.flagged) return true;
    return false;
  }
};

inline constexpr std::uint64_t kAuditMinHits = 100;

/// Intentionally broken variant of the private release: independent
/// per-counter noise only, no shared variate, no threshold. Its sensitivity
/// is k, not O(1), so the auditor must be able to flag it on a pair whose
/// sketches differ in every counter. Exists solely to calibrate the auditor.
inline PrivateSummary broken_release_no_shared_noise(const Sketch& s,
                                                     double epsilon,
                                                     NoiseSampler& sampler) {
  PrivateSummary out;
  out.mechanism = "broken-no-shared-noise";
  out.k = s.capacity();
  out.d = s.universe_size();
  out.n = s.stream_length();
  out.epsilon = epsilon;
  out.beta = 0.05;
  out.noise = sampler.backend();
  const double scale = 1.0 / epsilon;
  for (const auto& e : s.entries()) {
    const double noisy = static_cast<double>(e.count) + sampler.sample(scale);
    if (e.key <= s.universe_size()) out.entries.push_back({e.key, noisy});
  }
  return out;
}

/// Count-valued event extractor: per released key, the quartile bucket of
/// its count relative to boundaries estimated in a calibration run of the
/// mechanism on `calibration_stream`. Keys are listed in ascending order as
/// "key@bucket"; absent keys contribute nothing. Boundaries are frozen after
/// calibration, so the extractor is a fixed measurable function.
inline AuditEventExtractor make_quartile_extractor(
    const AuditMechanism& mechanism, const Stream& calibration_stream,
    std::uint64_t calibration_trials, std::uint64_t seed) {
  std::map<ItemId, std::vector<double>> observed;
  SplitMix64 seeder(seed);
  for (std::uint64_t t = 0; t < calibration_trials; ++t) {
    const PrivateSummary summary = mechanism(calibration_stream, seeder());
    for (const auto& e : summary.entries) observed[e.key].push_back(e.count);
  }
  std::map<ItemId, std::array<double, 3>> boundaries;
  for (auto& [key, values] : observed) {
    std::sort(values.begin(), values.end());
    const auto at = [&](double q) {
      return values[static_cast<std::size_t>(q * (values.size() - 1))];
    };
    boundaries[key] = {at(0.25), at(0.5), at(0.75)};
  }
  return [boundaries](const PrivateSummary& summary) {
    std::string event;
    for (const auto& e : summary.entries) {
      int bucket = 0;
      if (auto it = boundaries.find(e.key); it != boundaries.end()) {
        for (double b : it->second) bucket += e.count > b ? 1 : 0;
      }
      if (!event.empty()) event += ',';
      event += std::to_string(e.key) + "@" + std::to_string(bucket);
    }
    return event;
  };
}

inline AuditReport dp_audit(const AuditMechanism& mechanism,
                            const NeighborPair& pair, double epsilon,
                            double delta, std::uint64_t trials,
                            std::uint64_t seed,
                            const AuditEventExtractor& extract = key_set_event) {
  if (trials < 100000)
    throw std::invalid_argument("dp_audit needs at least 1e5 trials");
  AuditReport report;
  report.trials = trials;
  report.epsilon = epsilon;
  report.delta = delta;

  std::map<std::string, std::pair<std::uint64_t, std::uint64_t>> tally;
  SplitMix64 seeder(seed);
  for (std::uint64_t t = 0; t < trials; ++t) {
    const std::uint64_t s1 = seeder();
    const std::uint64_t s2 = seeder();
    ++tally[extract(mechanism(pair.longer, s1))].first;
    ++tally[extract(mechanism(pair.shorter, s2))].second;
  }

  const double tn = static_cast<double>(trials);
  const double boost = std::exp(epsilon);
  for (const auto& [event, hits] : tally) {
    AuditEventStats stats;
    stats.event = event;
    stats.hits_longer = hits.first;
    stats.hits_shorter = hits.second;
    if (hits.first < kAuditMinHits && hits.second < kAuditMinHits) {
      stats.undersampled = true;
      report.events.push_back(std::move(stats));
      continue;
    }
    const double p = hits.first / tn;
    const double q = hits.second / tn;
    const double se_p = std::sqrt(p * (1 - p) / tn);
    const double se_q = std::sqrt(q * (1 - q) / tn);
    // Both directions of the DP inequality, each with 3-sigma slack on the
    // difference estimator.
    const double slack_fwd = 3.0 * std::sqrt(se_p * se_p + boost * boost * se_q * se_q);
    const double slack_rev = 3.0 * std::sqrt(se_q * se_q + boost * boost * se_p * se_p);
    const double gap_fwd = p - (boost * q + delta) - slack_fwd;
    const double gap_rev = q - (boost * p + delta) - slack_rev;
    stats.worst_gap = std::max(p - (boost * q + delta), q - (boost * p + delta));
    stats.flagged = gap_fwd > 0 || gap_rev > 0;
    if (q > 0) report.worst_ratio = std::max(report.worst_ratio, p / q);
    if (p > 0) report.worst_ratio = std::max(report.worst_ratio, q / p);
    report.events.push_back(std::move(stats));
  }
  return report;
}

}  // namespace mgdp
