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
// File formats.
//
// Sketch files and summaries are single-line UTF-8 JSON objects, newline
// terminated, with fields in a fixed order and entries sorted ascending by
// key, so identical states always serialize to identical bytes. Floating
// point values are written with 17 significant digits, which round-trips
// IEEE-754 doubles exactly.
//
//   sketch:  {"format":"mg-sketch","version":1,"k":..,"d":..,"n":..,
//             "gamma":..,"entries":[{"key":..,"count":..},...]}
//   merged:  {"format":"mg-merged","version":1,"k":..,"d":..,"n":..,
//             "entries":[...]}
//   summary: {"mechanism":..,"k":..,"d":..,"n":..,"epsilon":..,("delta":..,)
//             "beta":..,"noise":..,("threshold":..,)("error_interval":..,)
//             "entries":[...]}
//
// The writer is hand-rolled to keep the byte layout canonical; parsing goes
// through nlohmann::json.

#pragma once

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <fcntl.h>
#include <unistd.h>

#include <json.hpp>

#include "mgdp/merge.hpp"
#include "mgdp/sketch.hpp"
#include "mgdp/summary.hpp"

namespace mgdp {

/// 17-significant-digit decimal form of a double (lossless round-trip).
inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace detail {

inline void append_entries(std::string& out,
                           const std::vector<SketchEntry>& entries) {
  out += "\"entries\":[";
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (i) out += ',';
    out += "{\"key\":" + std::to_string(entries[i].key) +
           ",\"count\":" + std::to_string(entries[i].count) + "}";
  }
  out += "]";
}

}  // namespace detail

inline std::string serialize_sketch(const Sketch& s) {
  std::string out = "{\"format\":\"mg-sketch\",\"version\":1";
  out += ",\"k\":" + std::to_string(s.capacity());
  out += ",\"d\":" + std::to_string(s.universe_size());
  out += ",\"n\":" + std::to_string(s.stream_length());
  out += ",\"gamma\":" + std::to_string(s.decrement_count());
  out += ",";
  detail::append_entries(out, s.entries());
  out += "}\n";
  return out;
}

inline std::string serialize_merged(const MergedSketch& m) {
  std::string out = "{\"format\":\"mg-merged\",\"version\":1";
  out += ",\"k\":" + std::to_string(m.capacity());
  out += ",\"d\":" + std::to_string(m.universe_size());
  out += ",\"n\":" + std::to_string(m.total_length());
  out += ",";
  detail::append_entries(out, m.entries());
  out += "}\n";
  return out;
}

inline std::string serialize_summary(const PrivateSummary& s) {
  std::string out = "{\"mechanism\":\"" + s.mechanism + "\"";
  out += ",\"k\":" + std::to_string(s.k);
  out += ",\"d\":" + std::to_string(s.d);
  out += ",\"n\":" + std::to_string(s.n);
  out += ",\"epsilon\":" + format_double(s.epsilon);
  if (s.delta) out += ",\"delta\":" + format_double(*s.delta);
  out += ",\"beta\":" + format_double(s.beta);
  out += ",\"noise\":\"" + to_string(s.noise) + "\"";
  if (s.threshold) out += ",\"threshold\":" + format_double(*s.threshold);
  if (s.interval)
    out += ",\"error_interval\":{\"lower\":" + format_double(s.interval->lower) +
           ",\"upper\":" + format_double(s.interval->upper) + "}";
  out += ",\"entries\":[";
  for (std::size_t i = 0; i < s.entries.size(); ++i) {
    if (i) out += ',';
    out += "{\"key\":" + std::to_string(s.entries[i].key) +
           ",\"count\":" + format_double(s.entries[i].count) + "}";
  }
  out += "]}\n";
  return out;
}

namespace detail {

inline std::vector<SketchEntry> parse_entries(const nlohmann::json& j) {
  std::vector<SketchEntry> entries;
  for (const auto& e : j.at("entries"))
    entries.push_back(
        {e.at("key").get<std::uint64_t>(), e.at("count").get<std::uint64_t>()});
  return entries;
}

inline nlohmann::json parse_object(const std::string& text,
                                   const char* expected_format) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("malformed JSON: ") + e.what());
  }
  if (expected_format &&
      (!j.contains("format") || j.at("format") != expected_format))
    throw std::invalid_argument(std::string("expected a ") + expected_format +
                                " file");
  return j;
}

}  // namespace detail

inline Sketch parse_sketch(const std::string& text) {
  const auto j = detail::parse_object(text, "mg-sketch");
  return Sketch::from_parts(
      j.at("k").get<std::uint64_t>(), j.at("d").get<std::uint64_t>(),
      j.at("n").get<std::uint64_t>(), j.at("gamma").get<std::uint64_t>(),
      detail::parse_entries(j));
}

inline MergedSketch parse_merged(const std::string& text) {
  const auto j = detail::parse_object(text, "mg-merged");
  return MergedSketch::from_parts(
      j.at("k").get<std::uint64_t>(), j.at("d").get<std::uint64_t>(),
      j.at("n").get<std::uint64_t>(), detail::parse_entries(j));
}

inline PrivateSummary parse_summary(const std::string& text) {
  const auto j = detail::parse_object(text, nullptr);
  PrivateSummary s;
  s.mechanism = j.at("mechanism").get<std::string>();
  s.k = j.at("k").get<std::uint64_t>();
  s.d = j.at("d").get<std::uint64_t>();
  s.n = j.at("n").get<std::uint64_t>();
  s.epsilon = j.at("epsilon").get<double>();
  if (j.contains("delta")) s.delta = j.at("delta").get<double>();
  s.beta = j.at("beta").get<double>();
  s.noise = parse_noise_backend(j.at("noise").get<std::string>());
  if (j.contains("threshold")) s.threshold = j.at("threshold").get<double>();
  if (j.contains("error_interval"))
    s.interval = ErrorInterval{j.at("error_interval").at("lower").get<double>(),
                               j.at("error_interval").at("upper").get<double>()};
  for (const auto& e : j.at("entries"))
    s.entries.push_back(
        {e.at("key").get<std::uint64_t>(), e.at("count").get<double>()});
  return s;
}

/// Either kind of sketch file, detected by its format tag.
using AnySketch = std::variant<Sketch, MergedSketch>;

inline AnySketch parse_any_sketch(const std::string& text) {
  const auto j = detail::parse_object(text, nullptr);
  const std::string format =
      j.contains("format") ? j.at("format").get<std::string>() : "";
  if (format == "mg-sketch") return parse_sketch(text);
  if (format == "mg-merged") return parse_merged(text);
  throw std::invalid_argument("not a sketch file (unknown format tag)");
}

// ---------------------------------------------------------------------------
// Flat-file helpers used by the CLI.
// ---------------------------------------------------------------------------

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
  if (!out) throw std::runtime_error("short write to " + path);
}

/// Marks a sketch file as released. Exclusive create: a second release of
/// the same file fails here, enforcing the one-shot budget.
inline void create_release_stamp(const std::string& sketch_path) {
  const std::string stamp = sketch_path + ".released";
  const int fd = ::open(stamp.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
  if (fd < 0)
    throw std::runtime_error(
        "sketch already released (stamp " + stamp +
        " exists); a second release would spend the privacy budget again");
  ::close(fd);
}

/// Streams are one item per line. Integer mode expects ids in [1, d]; token
/// mode maps arbitrary non-empty lines to ids in first-appearance order and
/// records the bijection. Blank lines are skipped in both modes.
inline std::vector<ItemId> read_integer_stream(std::istream& in,
                                               std::uint64_t d) {
  std::vector<ItemId> items;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::size_t pos = 0;
    unsigned long long value = 0;
    try {
      value = std::stoull(line, &pos);
    } catch (const std::exception&) {
      throw std::invalid_argument("line " + std::to_string(lineno) +
                                  ": not an integer: '" + line + "'");
    }
    if (pos != line.size())
      throw std::invalid_argument("line " + std::to_string(lineno) +
                                  ": trailing characters after integer");
    if (value == 0 || value > d)
      throw std::invalid_argument("line " + std::to_string(lineno) + ": id " +
                                  std::to_string(value) +
                                  " outside universe [1, " + std::to_string(d) +
                                  "]");
    items.push_back(value);
  }
  return items;
}

/// Token ids are assigned 1, 2, ... in order of first appearance; at most d
/// distinct tokens are allowed. The dictionary maps token -> id.
inline std::vector<ItemId> read_token_stream(
    std::istream& in, std::uint64_t d,
    std::vector<std::pair<std::string, ItemId>>& dictionary) {
  std::vector<ItemId> items;
  std::map<std::string, ItemId> ids;
  for (const auto& [token, id] : dictionary) ids.emplace(token, id);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto it = ids.find(line);
    if (it == ids.end()) {
      if (ids.size() >= d)
        throw std::invalid_argument(
            "line " + std::to_string(lineno) + ": token '" + line +
            "' would exceed the universe size " + std::to_string(d));
      const ItemId id = static_cast<ItemId>(ids.size()) + 1;
      it = ids.emplace(line, id).first;
      dictionary.emplace_back(line, id);
    }
    items.push_back(it->second);
  }
  return items;
}

/// Dictionary sidecar: "token<TAB>id" lines, ascending by id. The dictionary
/// is public metadata; it is not privatized.
inline std::string serialize_dictionary(
    const std::vector<std::pair<std::string, ItemId>>& dictionary) {
  std::string out;
  for (const auto& [token, id] : dictionary)
    out += token + "\t" + std::to_string(id) + "\n";
  return out;
}

inline std::vector<std::pair<std::string, ItemId>> parse_dictionary(
    const std::string& text) {
  std::vector<std::pair<std::string, ItemId>> dictionary;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto tab = line.rfind('\t');
    if (tab == std::string::npos)
      throw std::invalid_argument("dictionary line " + std::to_string(lineno) +
                                  ": missing tab separator");
    dictionary.emplace_back(line.substr(0, tab),
                            std::stoull(line.substr(tab + 1)));
  }
  return dictionary;
}

}  // namespace mgdp
