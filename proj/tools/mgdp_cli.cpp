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
// Command line frontend: build sketches from streams, release them under
// differential privacy, merge them, evaluate released summaries against raw
// streams, run the statistical privacy auditor, and run the exhaustive
// structural checks.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <CLI11.hpp>

#include "mgdp/io.hpp"
#include "mgdp/merge.hpp"
#include "mgdp/noise.hpp"
#include "mgdp/oracle.hpp"
#include "mgdp/pure.hpp"
#include "mgdp/release.hpp"
#include "mgdp/sketch.hpp"
#include "mgdp/verify.hpp"

namespace {

using namespace mgdp;

std::uint64_t resolve_seed(std::optional<std::uint64_t> flag_seed) {
  if (flag_seed) return *flag_seed;
  if (const char* env = std::getenv("MGDP_SEED")) return std::stoull(env);
  std::random_device rd;
  return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

Stream read_stream(const std::string& input, const std::string& format,
                   std::uint64_t d,
                   std::vector<std::pair<std::string, ItemId>>& dictionary) {
  std::ifstream file;
  std::istream* in = &std::cin;
  if (input != "-") {
    file.open(input);
    if (!file) throw std::runtime_error("cannot open " + input);
    in = &file;
  }
  if (format == "integers") return read_integer_stream(*in, d);
  if (format == "tokens") return read_token_stream(*in, d, dictionary);
  throw std::invalid_argument("unknown stream format: " + format);
}

int cmd_build(const std::string& input, const std::string& format,
              std::uint64_t k, std::uint64_t d, const std::string& output) {
  std::vector<std::pair<std::string, ItemId>> dictionary;
  const Stream items = read_stream(input, format, d, dictionary);
  Sketch sketch(k, d);
  sketch.process(items);
  write_file(output, serialize_sketch(sketch));
  if (format == "tokens")
    write_file(output + ".dict", serialize_dictionary(dictionary));
  std::cerr << "built sketch over " << items.size() << " items -> " << output
            << "\n";
  return 0;
}

int cmd_release(const std::string& sketch_path, const std::string& mechanism,
                double epsilon, std::optional<double> delta, double beta,
                const std::string& noise, std::optional<std::uint64_t> seed_flag,
                std::uint64_t universe_cap) {
  const NoiseBackend backend = parse_noise_backend(noise);
  const std::uint64_t seed = resolve_seed(seed_flag);
  NoiseSampler sampler(backend, seed);
  const std::string text = read_file(sketch_path);

  // Cheap parameter validation happens before the release stamp is taken so
  // a flag typo cannot consume a sketch's budget.
  if (!(epsilon > 0) || !std::isfinite(epsilon))
    throw std::invalid_argument("epsilon must be finite and > 0");

  PrivateSummary summary;
  if (mechanism == "approx" || mechanism == "standard" || mechanism == "pure") {
    Sketch sketch = parse_sketch(text);
    if (mechanism == "pure") {
      if (sketch.universe_size() > universe_cap)
        throw std::invalid_argument("universe too large for full-universe noise");
      OffsetSketch offset = postprocess(sketch);
      PureReleaseOptions opt;
      opt.universe_cap = universe_cap;
      opt.beta = beta;
      create_release_stamp(sketch_path);
      summary = privatize_pure(offset, epsilon, sampler, opt);
    } else {
      if (!delta)
        throw std::invalid_argument("--delta is required for mechanism " +
                                    mechanism);
      const PrivacyParams params{epsilon, *delta, beta};
      params.validate();
      if (mechanism == "approx") {
        create_release_stamp(sketch_path);
        summary = privatize_mg(sketch, params, sampler);
      } else {
        CanonicalSketch canonical = CanonicalSketch::from_sketch(sketch);
        create_release_stamp(sketch_path);
        summary = privatize_standard_mg(canonical, params, sampler);
      }
    }
  } else if (mechanism == "merged-universe" || mechanism == "merged-threshold") {
    MergedSketch merged = parse_merged(text);
    if (mechanism == "merged-universe") {
      if (merged.universe_size() > universe_cap)
        throw std::invalid_argument("universe too large for full-universe noise");
      create_release_stamp(sketch_path);
      summary = privatize_merged_universe(merged, epsilon, sampler, universe_cap);
    } else {
      if (!delta)
        throw std::invalid_argument(
            "--delta is required for mechanism merged-threshold");
      const PrivacyParams params{epsilon, *delta, beta};
      params.validate();
      create_release_stamp(sketch_path);
      summary = privatize_merged_threshold(merged, params, sampler);
    }
  } else {
    throw std::invalid_argument("unknown mechanism: " + mechanism);
  }

  std::cout << serialize_summary(summary);
  return 0;
}

int cmd_merge(const std::vector<std::string>& inputs,
              const std::string& output) {
  if (inputs.size() < 2)
    throw std::invalid_argument("merge needs at least two sketch files");
  auto load = [](const std::string& path) -> MergedSketch {
    AnySketch any = parse_any_sketch(read_file(path));
    if (std::holds_alternative<Sketch>(any))
      return MergedSketch::from_sketch(std::get<Sketch>(any));
    return std::get<MergedSketch>(std::move(any));
  };
  MergedSketch acc = load(inputs[0]);
  for (std::size_t i = 1; i < inputs.size(); ++i)
    acc = merge(acc, load(inputs[i]));
  write_file(output, serialize_merged(acc));
  std::cerr << "merged " << inputs.size() << " sketches -> " << output << "\n";
  return 0;
}

int cmd_eval(const std::string& summary_path, const std::string& input,
             const std::string& format, const std::string& dict_path) {
  const PrivateSummary summary = parse_summary(read_file(summary_path));
  std::vector<std::pair<std::string, ItemId>> dictionary;
  if (!dict_path.empty()) dictionary = parse_dictionary(read_file(dict_path));
  const Stream items = read_stream(input, format, summary.d, dictionary);
  const ExactHistogram oracle(items, summary.d);

  const double worst = max_error(summary, oracle);
  double sq_sum = 0;
  std::string per_key = "[";
  bool first = true;
  bool inside = true;
  for (ItemId u = 1; u <= summary.d; ++u) {
    const double deviation = summary.value_or_zero(u) -
                             static_cast<double>(oracle.count(u));
    sq_sum += deviation * deviation;
    if (summary.interval &&
        (deviation < summary.interval->lower ||
         deviation > summary.interval->upper))
      inside = false;
    if (oracle.count(u) != 0 || summary.contains(u)) {
      if (!first) per_key += ',';
      first = false;
      per_key += "{\"key\":" + std::to_string(u) +
                 ",\"true\":" + std::to_string(oracle.count(u)) +
                 ",\"released\":" + format_double(summary.value_or_zero(u)) +
                 ",\"error\":" + format_double(deviation) + "}";
    }
  }
  per_key += "]";

  std::string out = "{\"max_error\":" + format_double(worst);
  out += ",\"mse\":" + format_double(sq_sum / static_cast<double>(summary.d));
  out += ",\"n\":" + std::to_string(oracle.total());
  if (summary.interval)
    out += ",\"within_interval\":" + std::string(inside ? "true" : "false") +
           ",\"interval\":{\"lower\":" + format_double(summary.interval->lower) +
           ",\"upper\":" + format_double(summary.interval->upper) +
           ",\"beta\":" + format_double(summary.beta) + "}";
  out += ",\"per_key\":" + per_key + "}\n";
  std::cout << out;
  return 0;
}

int cmd_audit(const std::string& input, const std::string& format,
              std::size_t remove_index, std::uint64_t k, std::uint64_t d,
              double epsilon, double delta, std::uint64_t trials,
              std::optional<std::uint64_t> seed_flag,
              const std::string& mechanism_name, const std::string& event_name) {
  std::vector<std::pair<std::string, ItemId>> dictionary;
  const Stream longer = read_stream(input, format, d, dictionary);
  if (longer.empty()) throw std::invalid_argument("audit stream is empty");
  if (remove_index >= longer.size())
    throw std::invalid_argument("--remove-index is past the end of the stream");

  NeighborPair pair;
  pair.longer = longer;
  pair.shorter = longer;
  pair.shorter.erase(pair.shorter.begin() + remove_index);
  pair.removal_index = remove_index;

  // The audited inequality allows epsilon >= 0 and delta >= 0 (delta = 0 is
  // the pure-DP audit); the release mechanisms themselves validate their own
  // parameters.
  if (!(epsilon >= 0) || !(delta >= 0))
    throw std::invalid_argument("audit epsilon and delta must be >= 0");
  AuditMechanism mech;
  if (mechanism_name == "approx") {
    const PrivacyParams params{epsilon, delta, 0.05};
    params.validate();
    mech = [=](const Stream& stream, std::uint64_t seed) {
      Sketch s(k, d);
      s.process(stream);
      NoiseSampler sampler(NoiseBackend::kLaplace, seed);
      return privatize_mg(s, params, sampler);
    };
  } else if (mechanism_name == "standard") {
    const PrivacyParams params{epsilon, delta, 0.05};
    params.validate();
    mech = [=](const Stream& stream, std::uint64_t seed) {
      Sketch s(k, d);
      s.process(stream);
      CanonicalSketch c = CanonicalSketch::from_sketch(s);
      NoiseSampler sampler(NoiseBackend::kLaplace, seed);
      return privatize_standard_mg(c, params, sampler);
    };
  } else if (mechanism_name == "broken") {
    mech = [=](const Stream& stream, std::uint64_t seed) {
      Sketch s(k, d);
      s.process(stream);
      NoiseSampler sampler(NoiseBackend::kLaplace, seed);
      return broken_release_no_shared_noise(s, epsilon, sampler);
    };
  } else {
    throw std::invalid_argument("unknown audit mechanism: " + mechanism_name);
  }

  const std::uint64_t seed = resolve_seed(seed_flag);
  AuditEventExtractor extractor = key_set_event;
  if (event_name == "quartiles")
    extractor = make_quartile_extractor(mech, pair.longer, 2000, seed ^ 0x5eedULL);
  else if (event_name != "keyset")
    throw std::invalid_argument("unknown event extractor: " + event_name);

  const AuditReport report =
      dp_audit(mech, pair, epsilon, delta, trials, seed, extractor);
  for (const auto& e : report.events) {
    std::cout << "{\"event\":\"" << e.event << "\",\"hits_longer\":"
              << e.hits_longer << ",\"hits_shorter\":" << e.hits_shorter
              << ",\"worst_gap\":" << format_double(e.worst_gap)
              << ",\"flagged\":" << (e.flagged ? "true" : "false")
              << ",\"undersampled\":" << (e.undersampled ? "true" : "false")
              << "}\n";
  }
  std::cout << "{\"summary\":true,\"trials\":" << report.trials
            << ",\"epsilon\":" << format_double(epsilon)
            << ",\"delta\":" << format_double(delta)
            << ",\"worst_ratio\":" << format_double(report.worst_ratio)
            << ",\"violations\":" << (report.any_flagged() ? "true" : "false")
            << "}\n";
  return report.any_flagged() ? 1 : 0;
}

int cmd_enumerate(const std::string& check, std::uint64_t d_max,
                  std::size_t n_max, std::vector<std::uint64_t> ks) {
  if (ks.empty()) ks = {1, 2, 3};
  struct Entry {
    const char* name;
    GridCheckResult (*run)(std::uint64_t, std::size_t,
                           const std::vector<std::uint64_t>&);
  };
  const Entry table[] = {
      {"accuracy", grid_check_sketch_accuracy},
      {"neighbor-structure", grid_check_neighbor_structure},
      {"equivalence", grid_check_estimate_equivalence},
      {"offset-sensitivity", grid_check_offset_sensitivity},
      {"offset-structure", grid_check_offset_structure},
      {"merge", grid_check_merge},
  };
  bool ran = false;
  bool all_clean = true;
  for (const auto& entry : table) {
    if (check != "all" && check != entry.name) continue;
    ran = true;
    const GridCheckResult result = entry.run(d_max, n_max, ks);
    for (const auto& sample : result.samples)
      std::cout << "{\"check\":\"" << entry.name << "\",\"violation\":\""
                << sample << "\"}\n";
    std::cout << "{\"check\":\"" << entry.name << "\",\"cases\":"
              << result.cases << ",\"violations\":" << result.violations
              << "}\n";
    all_clean = all_clean && result.violations == 0;
  }
  if (!ran) throw std::invalid_argument("unknown check: " + check);
  return all_clean ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Streaming heavy hitters with differentially private release"};
  app.require_subcommand(1);

  // build
  auto* build = app.add_subcommand("build", "Build a sketch from a stream");
  std::string in_path = "-", format = "integers", out_path;
  std::uint64_t k = 0, d = 0;
  build->add_option("--input", in_path, "Stream file, or - for stdin");
  build->add_option("--format", format, "integers | tokens")
      ->check(CLI::IsMember({"integers", "tokens"}));
  build->add_option("--k", k, "Sketch capacity")->required();
  build->add_option("--universe-size", d, "Universe size d")->required();
  build->add_option("--output-sketch", out_path, "Output path")->required();

  // release
  auto* release = app.add_subcommand("release", "Privately release a sketch");
  std::string sketch_path, mechanism = "approx", noise = "laplace";
  double epsilon = 1.0, beta = 0.05;
  std::optional<double> delta;
  std::optional<std::uint64_t> seed;
  std::uint64_t universe_cap = kDefaultUniverseCap;
  release->add_option("--sketch", sketch_path, "Sketch file")->required();
  release->add_option("--epsilon", epsilon, "Privacy parameter epsilon")
      ->required();
  release->add_option("--delta", delta, "Privacy parameter delta");
  release->add_option("--beta", beta, "Error-interval tail probability");
  release->add_option("--seed", seed, "Noise seed (default: MGDP_SEED or random)");
  release
      ->add_option("--mechanism", mechanism,
                   "approx | standard | pure | merged-universe | merged-threshold")
      ->check(CLI::IsMember({"approx", "standard", "pure", "merged-universe",
                             "merged-threshold"}));
  release->add_option("--noise", noise, "laplace | geometric | zero")
      ->check(CLI::IsMember({"laplace", "geometric", "zero"}));
  release->add_option("--universe-cap", universe_cap,
                      "Refuse full-universe noise beyond this many elements");

  // merge
  auto* merge_cmd = app.add_subcommand("merge", "Merge sketches");
  std::vector<std::string> merge_inputs;
  std::string merge_output;
  merge_cmd->add_option("inputs", merge_inputs, "Sketch files")->required();
  merge_cmd->add_option("--output", merge_output, "Output path")->required();

  // eval
  auto* eval = app.add_subcommand("eval", "Compare a summary to a raw stream");
  std::string summary_path, eval_input = "-", eval_format = "integers",
              dict_path;
  eval->add_option("--summary", summary_path, "Summary JSON file")->required();
  eval->add_option("--input", eval_input, "Stream file, or - for stdin");
  eval->add_option("--format", eval_format, "integers | tokens")
      ->check(CLI::IsMember({"integers", "tokens"}));
  eval->add_option("--dict", dict_path, "Token dictionary for token streams");

  // audit
  auto* audit = app.add_subcommand(
      "audit", "Statistically audit a mechanism on a neighboring pair");
  std::string audit_input = "-", audit_format = "integers",
              audit_mechanism = "approx", audit_event = "keyset";
  std::size_t remove_index = 0;
  std::uint64_t audit_k = 2, audit_d = 3, trials = 200000;
  double audit_epsilon = 1.0, audit_delta = 0.05;
  std::optional<std::uint64_t> audit_seed;
  audit->add_option("--input", audit_input, "Longer stream file, or - for stdin");
  audit->add_option("--format", audit_format, "integers | tokens")
      ->check(CLI::IsMember({"integers", "tokens"}));
  audit->add_option("--remove-index", remove_index,
                    "Element removed to form the neighbor");
  audit->add_option("--k", audit_k, "Sketch capacity");
  audit->add_option("--universe-size", audit_d, "Universe size d");
  audit->add_option("--epsilon", audit_epsilon, "epsilon to audit against");
  audit->add_option("--delta", audit_delta, "delta to audit against");
  audit->add_option("--trials", trials, "Trials per stream (>= 1e5)");
  audit->add_option("--seed", audit_seed, "Audit seed");
  audit->add_option("--mechanism", audit_mechanism, "approx | standard | broken")
      ->check(CLI::IsMember({"approx", "standard", "broken"}));
  audit->add_option("--event", audit_event, "keyset | quartiles")
      ->check(CLI::IsMember({"keyset", "quartiles"}));

  // enumerate
  auto* enumerate = app.add_subcommand(
      "enumerate", "Run exhaustive structural checks on a small grid");
  std::string check = "all";
  std::uint64_t enum_d = 3;
  std::size_t enum_n = 6;
  std::vector<std::uint64_t> enum_ks;
  enumerate->add_option(
      "--check", check,
      "accuracy | neighbor-structure | equivalence | offset-sensitivity | "
      "offset-structure | merge | all");
  enumerate->add_option("--d", enum_d, "Max universe size");
  enumerate->add_option("--n-max", enum_n, "Max stream length");
  enumerate->add_option("--k", enum_ks, "Capacities to check (default 1 2 3)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (build->parsed()) return cmd_build(in_path, format, k, d, out_path);
    if (release->parsed())
      return cmd_release(sketch_path, mechanism, epsilon, delta, beta, noise,
                         seed, universe_cap);
    if (merge_cmd->parsed()) return cmd_merge(merge_inputs, merge_output);
    if (eval->parsed())
      return cmd_eval(summary_path, eval_input, eval_format, dict_path);
    if (audit->parsed())
      return cmd_audit(audit_input, audit_format, remove_index, audit_k,
                       audit_d, audit_epsilon, audit_delta, trials, audit_seed,
                       audit_mechanism, audit_event);
    if (enumerate->parsed()) return cmd_enumerate(check, enum_d, enum_n, enum_ks);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
