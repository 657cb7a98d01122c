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
// Exhaustive small-grid verifiers for the structural claims the sketch and
// its release mechanisms rely on. Each driver walks every stream (or stream
// pair) on a grid and returns how many cases were checked and how many
// violated the claim, with a few sample descriptions for debugging.

#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "mgdp/merge.hpp"
#include "mgdp/oracle.hpp"
#include "mgdp/pure.hpp"
#include "mgdp/sketch.hpp"

namespace mgdp {

struct GridCheckResult {
  std::uint64_t cases = 0;
  std::uint64_t violations = 0;
  std::vector<std::string> samples;  // first few violating cases

  void record_violation(const std::string& description) {
    ++violations;
    if (samples.size() < 10) samples.push_back(description);
  }
};

namespace detail {

inline std::string describe_stream(const Stream& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(s[i]);
  }
  return out + "]";
}

}  // namespace detail

/// Sketch accuracy: estimate(x) in [f(x) - n/(k+1), f(x)] for every stream
/// on the grid and every universe element.
inline GridCheckResult grid_check_sketch_accuracy(
    std::uint64_t d_max, std::size_t n_max,
    const std::vector<std::uint64_t>& ks) {
  GridCheckResult result;
  for (std::uint64_t d = 1; d <= d_max; ++d) {
    for (std::uint64_t k : ks) {
      enumerate_streams(d, n_max, [&](const Stream& stream) {
        Sketch s(k, d);
        s.process(stream);
        const ExactHistogram oracle(stream, d);
        // est >= f - n/(k+1) is checked as est*(k+1) + n >= f*(k+1) so the
        // comparison stays in integers.
        const std::uint64_t n = stream.size();
        for (ItemId x = 1; x <= d; ++x) {
          ++result.cases;
          const std::uint64_t est = s.estimate(x);
          const std::uint64_t f = oracle.count(x);
          const bool upper_ok = est <= f;
          const bool lower_ok = est * (k + 1) + n >= f * (k + 1);
          if (!upper_ok || !lower_ok)
            result.record_violation("stream=" +
                                    detail::describe_stream(stream) + " k=" +
                                    std::to_string(k) + " x=" +
                                    std::to_string(x));
        }
      });
    }
  }
  return result;
}

/// Neighbor sketch structure, checked in both removal directions.
inline GridCheckResult grid_check_neighbor_structure(
    std::uint64_t d_max, std::size_t n_max,
    const std::vector<std::uint64_t>& ks) {
  GridCheckResult result;
  for (std::uint64_t d = 1; d <= d_max; ++d) {
    for (std::uint64_t k : ks) {
      enumerate_neighbor_pairs(d, n_max, [&](const NeighborPair& pair) {
        ++result.cases;
        const auto forward = check_neighbor_pair(pair, k, d, /*reversed=*/false);
        const auto reversed = check_neighbor_pair(pair, k, d, /*reversed=*/true);
        if (forward.structure_case == NeighborCase::kViolation ||
            reversed.structure_case == NeighborCase::kViolation ||
            forward.structure_case != reversed.structure_case)
          result.record_violation(
              "pair=" + detail::describe_stream(pair.longer) + "/" +
              detail::describe_stream(pair.shorter) + " k=" +
              std::to_string(k) + " " + forward.detail + reversed.detail);
      });
    }
  }
  return result;
}

/// Estimate equivalence between the fixed-occupancy sketch and the
/// zero-removing reference implementation.
inline GridCheckResult grid_check_estimate_equivalence(
    std::uint64_t d_max, std::size_t n_max,
    const std::vector<std::uint64_t>& ks) {
  GridCheckResult result;
  for (std::uint64_t d = 1; d <= d_max; ++d) {
    for (std::uint64_t k : ks) {
      enumerate_streams(d, n_max, [&](const Stream& stream) {
        Sketch s(k, d);
        s.process(stream);
        const CanonicalSketch reference = canonical_mg(stream, k, d);
        for (ItemId x = 1; x <= d; ++x) {
          ++result.cases;
          if (s.estimate(x) != reference.estimate(x))
            result.record_violation("stream=" +
                                    detail::describe_stream(stream) + " k=" +
                                    std::to_string(k) + " x=" +
                                    std::to_string(x));
        }
      });
    }
  }
  return result;
}

/// Offset-sketch checks: l1 distance between the full-universe vectors of
/// neighbors stays within 1 + k/(k+1) (numerator sum <= 2k+1 over the common
/// denominator k+1, each sketch shifted by its own length), and estimates
/// keep the [f - n/(k+1), f] window. Exact integer arithmetic throughout.
inline GridCheckResult grid_check_offset_sensitivity(
    std::uint64_t d_max, std::size_t n_max,
    const std::vector<std::uint64_t>& ks) {
  GridCheckResult result;
  for (std::uint64_t d = 1; d <= d_max; ++d) {
    for (std::uint64_t k : ks) {
      enumerate_neighbor_pairs(d, n_max, [&](const NeighborPair& pair) {
        ++result.cases;
        Sketch sl(k, d);
        sl.process(pair.longer);
        Sketch ss(k, d);
        ss.process(pair.shorter);
        const OffsetSketch ol = postprocess(sl);
        const OffsetSketch os = postprocess(ss);

        std::int64_t numerator_l1 = 0;
        for (ItemId u = 1; u <= d; ++u) {
          const std::int64_t diff = ol.numerator(u) - os.numerator(u);
          numerator_l1 += diff < 0 ? -diff : diff;
        }
        // 1 + k/(k+1) == (2k+1)/(k+1)
        if (numerator_l1 > static_cast<std::int64_t>(2 * k + 1))
          result.record_violation(
              "l1 pair=" + detail::describe_stream(pair.longer) + "/" +
              detail::describe_stream(pair.shorter) + " k=" +
              std::to_string(k));

        // Accuracy of the postprocessed estimates, on the longer stream:
        // f - n/(k+1) <= value <= f, scaled by (k+1).
        const ExactHistogram oracle(pair.longer, d);
        const std::int64_t n = static_cast<std::int64_t>(pair.longer.size());
        for (ItemId u = 1; u <= d; ++u) {
          const std::int64_t value_num = ol.numerator(u);
          const std::int64_t f_num =
              static_cast<std::int64_t>(oracle.count(u) * (k + 1));
          if (value_num > f_num || value_num < f_num - n)
            result.record_violation(
                "accuracy stream=" + detail::describe_stream(pair.longer) +
                " k=" + std::to_string(k) + " u=" + std::to_string(u));
        }
      });
    }
  }
  return result;
}

/// The common-length variant of the offset comparison: running the shift
/// with the longer stream's n on both sketches must leave vectors that agree
/// everywhere except at most one coordinate, which differs by at most 1.
inline GridCheckResult grid_check_offset_structure(
    std::uint64_t d_max, std::size_t n_max,
    const std::vector<std::uint64_t>& ks) {
  GridCheckResult result;
  for (std::uint64_t d = 1; d <= d_max; ++d) {
    for (std::uint64_t k : ks) {
      enumerate_neighbor_pairs(d, n_max, [&](const NeighborPair& pair) {
        ++result.cases;
        Sketch sl(k, d);
        sl.process(pair.longer);
        Sketch ss(k, d);
        ss.process(pair.shorter);
        const std::int64_t n = static_cast<std::int64_t>(pair.longer.size());

        // value numerator over denominator k+1, clamped at zero like the
        // negative-counter removal does.
        auto value_num = [&](const Sketch& s, ItemId u) -> std::int64_t {
          for (const auto& e : s.entries()) {
            if (e.key != u) continue;
            const std::int64_t raw = static_cast<std::int64_t>(
                                         (e.count + s.decrement_count()) *
                                         (k + 1)) -
                                     n;
            return raw < 0 ? 0 : raw;
          }
          return 0;
        };

        std::size_t differing = 0;
        bool small_diffs = true;
        for (ItemId u = 1; u <= d; ++u) {
          const std::int64_t diff = value_num(sl, u) - value_num(ss, u);
          if (diff != 0) {
            ++differing;
            if (diff > static_cast<std::int64_t>(k + 1) ||
                diff < -static_cast<std::int64_t>(k + 1))
              small_diffs = false;
          }
        }
        if (differing > 1 || !small_diffs)
          result.record_violation(
              "pair=" + detail::describe_stream(pair.longer) + "/" +
              detail::describe_stream(pair.shorter) + " k=" +
              std::to_string(k));
      });
    }
  }
  return result;
}

/// Merge checks on pairs of streams with one neighbor substitution:
/// merged counter vectors differ by 1 on at most k keys and agree elsewhere,
/// and merged estimates keep the N/(k+1) window against the combined
/// histogram. Streams are deduplicated by the state the checks depend on.
inline GridCheckResult grid_check_merge(std::uint64_t d_max, std::size_t n_max,
                                        const std::vector<std::uint64_t>& ks) {
  GridCheckResult result;
  for (std::uint64_t d = 1; d <= d_max; ++d) {
    for (std::uint64_t k : ks) {
      // Gather one representative per (merged-form sketch, histogram) class;
      // every check below depends only on that state.
      std::vector<MergedSketch> sketches;
      std::vector<std::vector<Count>> histograms;
      std::vector<Stream> streams;
      std::map<std::string, std::size_t> class_of;
      std::map<std::string, std::size_t> stream_to_class;

      auto encode_sketch = [](const MergedSketch& m) {
        std::string s;
        for (const auto& e : m.entries())
          s += std::to_string(e.key) + ":" + std::to_string(e.count) + ",";
        return s;
      };

      enumerate_streams(d, n_max, [&](const Stream& stream) {
        Sketch s(k, d);
        s.process(stream);
        MergedSketch m = MergedSketch::from_sketch(s);
        std::vector<Count> hist(d + 1, 0);
        for (ItemId x : stream) ++hist[x];
        std::string key = encode_sketch(m) + "|n=" + std::to_string(stream.size()) + "|h=";
        for (Count c : hist) key += std::to_string(c) + ",";
        auto [it, inserted] = class_of.try_emplace(key, sketches.size());
        if (inserted) {
          sketches.push_back(std::move(m));
          histograms.push_back(std::move(hist));
          streams.push_back(stream);
        }
        stream_to_class[detail::describe_stream(stream)] = it->second;
      });

      // Substitution pairs: distinct (class(longer), class(shorter)).
      std::set<std::pair<std::size_t, std::size_t>> neighbor_classes;
      enumerate_neighbor_pairs(d, n_max, [&](const NeighborPair& pair) {
        neighbor_classes.emplace(
            stream_to_class.at(detail::describe_stream(pair.longer)),
            stream_to_class.at(detail::describe_stream(pair.shorter)));
      });

      for (const auto& [a, b] : neighbor_classes) {
        for (std::size_t c = 0; c < sketches.size(); ++c) {
          ++result.cases;
          const MergedSketch m1 = merge(sketches[a], sketches[c]);
          const MergedSketch m2 = merge(sketches[b], sketches[c]);
          std::size_t differing = 0;
          bool unit_diffs = true;
          for (ItemId u = 1; u <= d; ++u) {
            const std::int64_t diff =
                static_cast<std::int64_t>(m1.estimate(u)) -
                static_cast<std::int64_t>(m2.estimate(u));
            if (diff != 0) {
              ++differing;
              if (diff != 1 && diff != -1) unit_diffs = false;
            }
          }
          if (differing > k || !unit_diffs)
            result.record_violation(
                "substitution streams=" + detail::describe_stream(streams[a]) +
                "/" + detail::describe_stream(streams[b]) + "+" +
                detail::describe_stream(streams[c]) + " k=" +
                std::to_string(k));
        }
      }

      // Merged accuracy across every (class, class) pair.
      for (std::size_t a = 0; a < sketches.size(); ++a) {
        for (std::size_t b = 0; b < sketches.size(); ++b) {
          ++result.cases;
          const MergedSketch m = merge(sketches[a], sketches[b]);
          const std::uint64_t total =
              streams[a].size() + streams[b].size();
          bool ok = true;
          for (ItemId u = 1; u <= d; ++u) {
            const std::uint64_t est = m.estimate(u);
            const std::uint64_t f = histograms[a][u] + histograms[b][u];
            if (est > f || est * (k + 1) + total < f * (k + 1)) ok = false;
          }
          if (!ok)
            result.record_violation(
                "accuracy streams=" + detail::describe_stream(streams[a]) +
                "+" + detail::describe_stream(streams[b]) + " k=" +
                std::to_string(k));
        }
      }
    }
  }
  return result;
}

}  // namespace mgdp
