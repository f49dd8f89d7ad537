// Copyright 2026 The MergeSched Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "commands.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "mergesched/calibration.hpp"
#include "mergesched/costmodel.hpp"
#include "mergesched/error.hpp"
#include "mergesched/profiles.hpp"
#include "mergesched/scheduler.hpp"
#include "mergesched/serialize.hpp"
#include "mergesched/simulator.hpp"
#include "mergesched/trainer.hpp"
#include "mergesched/version.hpp"

namespace mergesched::cli {
namespace {

namespace fs = std::filesystem;

class UsageError : public std::runtime_error {
 public:
  explicit UsageError(const std::string& what) : std::runtime_error(what) {}
};

const char* const kSweepHeader =
    "model,algo,compressor,n,scheme,y,partition,T_ms,overlap_ms,scaling_factor";

// Fields of a --config document; relative paths resolve against its folder.
Json load_config(const std::string& path, std::initializer_list<const char*> keys,
                 std::initializer_list<const char*> path_keys) {
  Json j = read_json_file(path);
  if (!j.is_object()) throw ValidationError(path + ": config must be a JSON object");
  for (const auto& [k, v] : j.items()) {
    if (std::find_if(keys.begin(), keys.end(), [&](const char* key) { return k == key; }) ==
        keys.end()) {
      throw ValidationError(path + ": unknown config field '" + k + "'");
    }
  }
  const fs::path dir = fs::path(path).parent_path();
  for (const char* key : path_keys) {
    if (j.contains(key) && j[key].is_string()) {
      const fs::path p = j[key].get<std::string>();
      if (p.is_relative()) j[key] = (dir / p).lexically_normal().string();
    }
  }
  return j;
}

void emit(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty()) {
    out << text;
    return;
  }
  std::ofstream f(path);
  if (!f) throw RuntimeFailure("cannot write " + path);
  f << text;
  if (!f) throw RuntimeFailure("write failed: " + path);
}

void emit_json(const std::string& path, const Json& doc, std::ostream& out) {
  emit(path, doc.dump(2) + "\n", out);
}

std::string csv_preamble(std::string_view kind, const Json& config) {
  return "# mergesched " + std::string(kVersion) + " " + std::string(kind) + "\n# config " +
         config.dump() + "\n";
}

template <typename T>
T field(const Json& cfg, const char* key) {
  try {
    return cfg.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ValidationError(std::string("config field '") + key + "' is missing or has the wrong type");
  }
}

std::string opt_path(const Json& cfg, const char* key) {
  return cfg.contains(key) && !cfg[key].is_null() ? field<std::string>(cfg, key) : std::string();
}

// 'value' when the option was given on the command line.
template <typename T>
void override_from(CLI::App* app, const char* flag, Json& cfg, const char* key, const T& value) {
  if (app->count(flag) > 0) cfg[key] = value;
}

CostParams read_costs(const std::string& path) {
  const Json j = read_json_file(path);
  if (j.is_object() && j.contains("kind")) {
    if (j.at("kind") != "costs") throw ValidationError(path + ": expected a costs document");
    return costs_from_json(j.at("result").at("costs"));
  }
  return costs_from_json(j);
}

std::vector<TimingSample> read_samples(const std::string& path, Json& provenance) {
  const Json j = read_json_file(path);
  if (j.is_array()) return samples_from_json(j);
  if (j.is_object() && j.value("kind", "") == "samples" && j.contains("result")) {
    provenance = j.value("config", Json());
    return samples_from_json(j.at("result").at("samples"));
  }
  throw ValidationError(path + ": expected a samples document or an array of samples");
}

// Profile and per-(spec, n) cost source shared by search and sweep.
struct CostSource {
  ModelProfile profile;
  std::optional<Calibration> calibration;
  CostParams fixed;

  CostParams costs(const CompressorSpec& spec, std::size_t n, bool g_on_payload) const {
    return calibration ? calibrated_costs(*calibration, profile, spec, n, g_on_payload) : fixed;
  }
};

CostSource cost_source(Json& cfg) {
  const std::string cal_path = opt_path(cfg, "calibration");
  const std::string costs_path = opt_path(cfg, "costs");
  std::string profile_path = opt_path(cfg, "profile");
  if (cal_path.empty() == costs_path.empty()) {
    throw UsageError("give exactly one of --calibration or --costs");
  }
  CostSource src;
  if (!cal_path.empty()) {
    src.calibration = load_calibration_file(cal_path);
    if (profile_path.empty()) {
      profile_path = (fs::path(cal_path).parent_path() / src.calibration->profile).string();
      cfg["profile"] = profile_path;
    }
    src.profile = calibrated_profile(*src.calibration, load_profile_file(profile_path));
  } else {
    if (profile_path.empty()) throw UsageError("--costs needs --profile");
    src.profile = load_profile_file(profile_path);
    src.fixed = read_costs(costs_path);
    cfg["resolved_costs"] = to_json(src.fixed);
  }
  return src;
}

SearchConfig search_config(const Json& cfg) {
  SearchConfig s;
  s.max_groups = field<std::size_t>(cfg, "Y");
  s.alpha = field<double>(cfg, "alpha");
  s.unimodal_guard = field<std::size_t>(cfg, "unimodal_guard");
  return s;
}

// ---------------------------------------------------------------- bench

struct BenchOpts {
  std::string config, compressor, out;
  std::vector<std::uint64_t> sizes;
  std::size_t reps = 20;
  std::uint64_t seed = 0;
};

void bench(CLI::App* app, const BenchOpts& o, std::ostream& out) {
  Json cfg{{"compressor", "identity"}, {"sizes", Json::array()}, {"reps", 20}, {"seed", nullptr}};
  for (int e = 6; e <= 22; ++e) cfg["sizes"].push_back(std::uint64_t{1} << e);
  if (!o.config.empty()) cfg.update(load_config(o.config, {"compressor", "sizes", "reps", "seed"}, {}));
  override_from(app, "--compressor", cfg, "compressor", o.compressor);
  override_from(app, "--sizes", cfg, "sizes", o.sizes);
  override_from(app, "--reps", cfg, "reps", o.reps);
  override_from(app, "--seed", cfg, "seed", o.seed);
  const CompressorSpec spec = spec_from_json(cfg["compressor"]);
  cfg["compressor"] = to_json(spec);
  if (is_stochastic(spec.algorithm) && cfg["seed"].is_null()) {
    throw UsageError("bench: --seed is required for stochastic compressor '" +
                     std::string(algorithm_name(spec.algorithm)) + "'");
  }
  const auto sizes = field<std::vector<std::uint64_t>>(cfg, "sizes");
  if (sizes.empty()) throw ValidationError("bench: empty size grid");
  const std::uint64_t seed = cfg["seed"].is_null() ? 0 : field<std::uint64_t>(cfg, "seed");
  const auto samples = microbench(spec, sizes, field<std::size_t>(cfg, "reps"), seed);
  emit_json(o.out, make_document("samples", cfg, Json{{"samples", to_json(samples)}}), out);
}

// ---------------------------------------------------------------- fit

struct FitOpts {
  std::string config, samples, out;
  double compute_ms = 0.0;
};

void fit_cmd(CLI::App* app, const FitOpts& o, std::ostream& out) {
  Json cfg{{"samples", nullptr}, {"compute_ms", 0.0}};
  if (!o.config.empty()) cfg.update(load_config(o.config, {"samples", "compute_ms"}, {"samples"}));
  override_from(app, "--samples", cfg, "samples", o.samples);
  override_from(app, "--compute-ms", cfg, "compute_ms", o.compute_ms);
  const std::string path = opt_path(cfg, "samples");
  if (path.empty()) throw UsageError("fit: --samples is required");
  Json provenance;
  const auto samples = read_samples(path, provenance);
  const CostFit f = fit_cost_params(samples, field<double>(cfg, "compute_ms"));
  if (!provenance.is_null()) cfg["samples_config"] = provenance;
  Json result{{"costs", to_json(f.params)},
              {"compression", f.has_compression ? to_json(f.compression) : Json(nullptr)},
              {"communication", f.has_communication ? to_json(f.communication) : Json(nullptr)}};
  emit_json(o.out, make_document("costs", cfg, result), out);
}

// ---------------------------------------------------------------- search

struct SearchOpts {
  std::string config, profile, costs, calibration, compressor, mode, out;
  std::size_t workers = 2, y = 2, guard = 3;
  double alpha = 0.02;
  bool literal = false;
};

void search_cmd(CLI::App* app, const SearchOpts& o, std::ostream& out) {
  Json cfg{{"profile", nullptr}, {"costs", nullptr},   {"calibration", nullptr},
           {"workers", 2},       {"compressor", "identity"}, {"mode", "heuristic"},
           {"alpha", 0.02},      {"unimodal_guard", 3},      {"g_on_payload", true}};
  if (!o.config.empty()) {
    cfg.update(load_config(o.config,
                           {"profile", "costs", "calibration", "workers", "compressor", "mode", "Y",
                            "alpha", "unimodal_guard", "g_on_payload"},
                           {"profile", "costs", "calibration"}));
  }
  override_from(app, "--profile", cfg, "profile", o.profile);
  override_from(app, "--costs", cfg, "costs", o.costs);
  override_from(app, "--calibration", cfg, "calibration", o.calibration);
  override_from(app, "--workers", cfg, "workers", o.workers);
  override_from(app, "--compressor", cfg, "compressor", o.compressor);
  override_from(app, "--mode", cfg, "mode", o.mode);
  override_from(app, "--Y", cfg, "Y", o.y);
  override_from(app, "--alpha", cfg, "alpha", o.alpha);
  override_from(app, "--unimodal-guard", cfg, "unimodal_guard", o.guard);
  if (app->count("--literal") > 0) cfg["g_on_payload"] = !o.literal;

  const CostSource src = cost_source(cfg);
  const std::size_t n_t = src.profile.num_tensors();
  const std::string mode = field<std::string>(cfg, "mode");
  if (!cfg.contains("Y")) cfg["Y"] = mode == "exhaustive" ? n_t : std::size_t{2};
  const CompressorSpec spec = spec_from_json(cfg["compressor"]);
  cfg["compressor"] = to_json(spec);
  const auto n = field<std::size_t>(cfg, "workers");
  const bool payload = field<bool>(cfg, "g_on_payload");
  const CostParams costs = src.costs(spec, n, payload);
  cfg["resolved_costs"] = to_json(costs);
  const SearchConfig sc = search_config(cfg);
  auto evaluator = [&] { return analytic_evaluator(src.profile, spec, costs, payload); };

  Json result;
  if (mode == "heuristic") {
    auto eval = evaluator();
    result = to_json(heuristic_search(eval, sc));
  } else if (mode == "exhaustive") {
    auto eval = evaluator();
    result = to_json(exhaustive_search(eval, sc.max_groups));
  } else if (mode == "both") {
    auto he = evaluator();
    auto ee = evaluator();
    const auto h = heuristic_search(he, sc);
    const auto e = exhaustive_search(ee, sc.max_groups);
    result = Json{{"heuristic", to_json(h)},
                  {"exhaustive", to_json(e)},
                  {"agree", h.f_ms == e.f_ms},
                  {"F_gap_ms", h.f_ms - e.f_ms}};
  } else if (mode == "naive") {
    const Partition p = naive_partition(n_t, sc.max_groups);
    const auto r = simulate_iteration(src.profile, p, spec, costs, payload);
    result = Json{{"partition", partition_json(p)},
                  {"partition_string", p.to_string()},
                  {"groups", p.num_groups()},
                  {"F_ms", r.iteration_ms},
                  {"simulation", to_json(r)}};
  } else {
    throw UsageError("search: --mode must be heuristic, exhaustive, both or naive");
  }
  result["model"] = src.profile.name();
  result["tensors"] = n_t;
  emit_json(o.out, make_document("search", cfg, result), out);
}

// ---------------------------------------------------------------- sweep

struct SweepEntry {
  std::string token;
  CompressorSpec spec;
  std::string scheme;  // layer_wise, merged, single, naive
};

SweepEntry parse_sweep_token(const std::string& token) {
  static const std::vector<std::pair<std::string, std::string>> kSuffixes{
      {"_layerwise", "layer_wise"}, {"_merged", "merged"}, {"_single", "single"}, {"_naive", "naive"}};
  for (const auto& [suffix, scheme] : kSuffixes) {
    if (token.size() > suffix.size() &&
        token.compare(token.size() - suffix.size(), suffix.size(), suffix) == 0) {
      const std::string name = token.substr(0, token.size() - suffix.size());
      return {token, CompressorSpec::make(parse_algorithm(name)), scheme};
    }
  }
  return {token, CompressorSpec::make(parse_algorithm(token)), "layer_wise"};
}

struct SweepOpts {
  std::string config, profile, costs, calibration, out;
  std::vector<std::string> algos;
  std::vector<std::size_t> workers;
  std::size_t y = 2, guard = 3;
  double alpha = 0.02;
  bool literal = false;
};

void sweep_cmd(CLI::App* app, const SweepOpts& o, std::ostream& out) {
  Json cfg{{"profile", nullptr},
           {"costs", nullptr},
           {"calibration", nullptr},
           {"algos", {"fp32", "dgc_layerwise", "dgc_merged"}},
           {"workers", {2, 4, 8}},
           {"Y", 2},
           {"alpha", 0.02},
           {"unimodal_guard", 3},
           {"g_on_payload", true}};
  if (!o.config.empty()) {
    cfg.update(load_config(o.config,
                           {"profile", "costs", "calibration", "algos", "workers", "Y", "alpha",
                            "unimodal_guard", "g_on_payload"},
                           {"profile", "costs", "calibration"}));
  }
  override_from(app, "--profile", cfg, "profile", o.profile);
  override_from(app, "--costs", cfg, "costs", o.costs);
  override_from(app, "--calibration", cfg, "calibration", o.calibration);
  override_from(app, "--algos", cfg, "algos", o.algos);
  override_from(app, "--workers", cfg, "workers", o.workers);
  override_from(app, "--Y", cfg, "Y", o.y);
  override_from(app, "--alpha", cfg, "alpha", o.alpha);
  override_from(app, "--unimodal-guard", cfg, "unimodal_guard", o.guard);
  if (app->count("--literal") > 0) cfg["g_on_payload"] = !o.literal;

  const CostSource src = cost_source(cfg);
  const bool payload = field<bool>(cfg, "g_on_payload");
  const SearchConfig sc = search_config(cfg);
  const auto workers = field<std::vector<std::size_t>>(cfg, "workers");
  std::vector<SweepEntry> entries;
  for (const auto& t : field<std::vector<std::string>>(cfg, "algos")) entries.push_back(parse_sweep_token(t));
  if (entries.empty() || workers.empty()) throw ValidationError("sweep: empty algos or workers list");
  const std::size_t n_t = src.profile.num_tensors();
  const double a = src.profile.total_compute();
  if (!(a > 0.0)) throw ValidationError("sweep: profile has zero compute time");

  std::ostringstream csv;
  csv.precision(10);
  csv << csv_preamble("sweep", cfg) << kSweepHeader << '\n';
  for (const auto& e : entries) {
    for (std::size_t n : workers) {
      if (n < 1) throw ValidationError("sweep: worker counts must be >= 1");
      const CostParams costs = src.costs(e.spec, n, payload);
      Partition p;
      if (e.scheme == "layer_wise") {
        p = Partition::layer_wise(n_t);
      } else if (e.scheme == "single") {
        p = Partition::single(n_t);
      } else if (e.scheme == "naive") {
        p = naive_partition(n_t, std::min(sc.max_groups, n_t));
      } else {
        auto eval = analytic_evaluator(src.profile, e.spec, costs, payload);
        p = heuristic_search(eval, sc).partition;
      }
      const SimConfig sim{src.profile, p, e.spec, costs, n, payload};
      const auto r = simulate_iteration(sim);
      const double sf = scaling_factor(1000.0 / a, predict_speed(sim, 1.0), n);
      csv << src.profile.name() << ',' << e.token << ',' << algorithm_name(e.spec.algorithm) << ','
          << n << ',' << e.scheme << ',' << p.num_groups() << ',' << p.to_string() << ','
          << r.iteration_ms << ',' << r.overlap_ms << ',' << sf << '\n';
    }
  }
  emit(o.out, csv.str(), out);
}

// ---------------------------------------------------------------- train

struct TrainOpts {
  std::string config, out, curves;
  std::uint64_t seed = 0;
  std::size_t iterations = 0, threads = 1;
  double loss_threshold = 0.0;
};

void train_cmd(CLI::App* app, const TrainOpts& o, std::ostream& out) {
  const Json doc = read_json_file(o.config);
  if (!doc.is_object()) throw ValidationError(o.config + ": config must be a JSON object");
  Json runs_json;
  std::optional<double> threshold;
  std::optional<std::uint64_t> seed;
  if (doc.contains("runs")) {
    for (const auto& [k, v] : doc.items()) {
      if (k != "runs" && k != "seed" && k != "loss_threshold") {
        throw ValidationError(o.config + ": unknown config field '" + k + "'");
      }
    }
    runs_json = doc.at("runs");
    if (!runs_json.is_array() || runs_json.empty()) {
      throw ValidationError(o.config + ": 'runs' must be a non-empty array");
    }
    if (doc.contains("seed")) seed = field<std::uint64_t>(doc, "seed");
    if (doc.contains("loss_threshold")) threshold = field<double>(doc, "loss_threshold");
  } else {
    runs_json = Json::array({doc});
    if (doc.contains("seed")) seed = field<std::uint64_t>(doc, "seed");
  }
  if (app->count("--seed") > 0) seed = o.seed;
  if (!seed) throw UsageError("train: --seed is required (or a 'seed' field in the config)");
  if (app->count("--loss-threshold") > 0) threshold = o.loss_threshold;

  std::vector<TrainConfig> runs;
  for (Json r : runs_json) {
    if (!r.is_object()) throw ValidationError(o.config + ": each run must be an object");
    r["seed"] = *seed;
    if (app->count("--iterations") > 0) r["iterations"] = o.iterations;
    if (app->count("--threads") > 0) r["threads"] = o.threads;
    runs.push_back(train_config_from_json(r));
  }
  Json cfg{{"runs", Json::array()}, {"seed", *seed}};
  for (const auto& r : runs) cfg["runs"].push_back(to_json(r));
  if (threshold) cfg["loss_threshold"] = *threshold;

  const Comparison cmp = compare(runs, threshold);
  Json result = to_json(cmp);
  Json summaries = Json::array();
  for (const auto& r : cmp.reports) summaries.push_back(summary_json(r));
  result["summaries"] = summaries;
  emit_json(o.out, make_document("train", cfg, result), out);

  if (!o.curves.empty()) {
    std::ostringstream csv;
    csv.precision(17);
    csv << csv_preamble("train_curves", cfg) << "label,iteration,loss,time_ms\n";
    for (std::size_t i = 0; i < cmp.reports.size(); ++i) {
      const auto& rep = cmp.reports[i];
      for (std::size_t t = 0; t < rep.loss_curve.size(); ++t) {
        csv << cmp.rows[i].label << ',' << t << ',' << rep.loss_curve[t] << ','
            << rep.iteration_times_ms[t] << '\n';
      }
    }
    emit(o.curves, csv.str(), out);
  }
}

// ---------------------------------------------------------------- report

struct CsvTable {
  Json config;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw RuntimeFailure("cannot open " + path);
  CsvTable t;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (line.rfind("# config ", 0) == 0) {
        try {
          t.config = Json::parse(line.substr(9));
        } catch (const nlohmann::json::parse_error&) {
          throw ValidationError(path + ": malformed config line");
        }
      }
      continue;
    }
    auto cells = split_csv_line(line);
    if (t.header.empty()) {
      t.header = std::move(cells);
    } else {
      if (cells.size() != t.header.size()) {
        throw ValidationError(path + ": row with " + std::to_string(cells.size()) + " cells, header has " +
                              std::to_string(t.header.size()));
      }
      t.rows.push_back(std::move(cells));
    }
  }
  if (t.header.empty()) throw ValidationError(path + ": no header row");
  return t;
}

double to_number(const std::string& s, const std::string& where) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ValidationError(where + ": '" + s + "' is not a number");
  }
}

struct ReportOpts {
  std::vector<std::string> inputs;
  std::string out, long_csv;
};

void report_cmd(const ReportOpts& o, std::ostream& out) {
  const auto expected = split_csv_line(kSweepHeader);
  std::vector<CsvTable> tables;
  for (const auto& path : o.inputs) {
    tables.push_back(read_csv(path));
    if (tables.back().header != tables.front().header) {
      throw ValidationError("report: mixed schemas (" + path + " differs from " + o.inputs.front() + ")");
    }
  }
  if (tables.front().header != expected) {
    throw ValidationError("report: inputs are not sweep CSVs (expected header '" +
                          std::string(kSweepHeader) + "')");
  }
  auto col = [&](const char* name) {
    return static_cast<std::size_t>(std::find(expected.begin(), expected.end(), name) - expected.begin());
  };
  const std::size_t c_model = col("model"), c_algo = col("algo"), c_comp = col("compressor"),
                    c_n = col("n"), c_scheme = col("scheme"), c_y = col("y"),
                    c_part = col("partition"), c_sf = col("scaling_factor");

  // Best scheme per (model, compressor, n); first row wins ties.
  using Key = std::tuple<std::string, std::string, long>;
  std::map<Key, std::pair<double, const std::vector<std::string>*>> best;
  std::vector<Key> order;
  std::size_t total = 0;
  for (std::size_t ti = 0; ti < tables.size(); ++ti) {
    for (const auto& row : tables[ti].rows) {
      ++total;
      const std::string where = o.inputs[ti];
      const double sf = to_number(row[c_sf], where);
      const Key key{row[c_model], row[c_comp], std::lround(to_number(row[c_n], where))};
      auto it = best.find(key);
      if (it == best.end()) {
        best.emplace(key, std::make_pair(sf, &row));
        order.push_back(key);
      } else if (sf > it->second.first) {
        it->second = {sf, &row};
      }
    }
  }
  Json rows = Json::array();
  for (const auto& key : order) {
    const auto& [sf, row] = best.at(key);
    rows.push_back({{"model", (*row)[c_model]},
                    {"compressor", (*row)[c_comp]},
                    {"n", std::get<2>(key)},
                    {"best_algo", (*row)[c_algo]},
                    {"best_scheme", (*row)[c_scheme]},
                    {"y", std::lround(to_number((*row)[c_y], "y"))},
                    {"partition", (*row)[c_part]},
                    {"scaling_factor", sf}});
  }
  Json cfg{{"inputs", o.inputs}, {"sources", Json::array()}};
  for (const auto& t : tables) cfg["sources"].push_back(t.config);
  emit_json(o.out, make_document("report", cfg, Json{{"rows_in", total}, {"best", rows}}), out);

  if (!o.long_csv.empty()) {
    std::ostringstream csv;
    csv << csv_preamble("report_long", cfg)
        << "model,algo,compressor,n,scheme,y,partition,metric,value\n";
    for (const auto& t : tables) {
      for (const auto& row : t.rows) {
        for (const char* metric : {"T_ms", "overlap_ms", "scaling_factor"}) {
          csv << row[c_model] << ',' << row[c_algo] << ',' << row[c_comp] << ',' << row[c_n] << ','
              << row[c_scheme] << ',' << row[c_y] << ',' << row[c_part] << ',' << metric << ','
              << row[col(metric)] << '\n';
        }
      }
    }
    emit(o.long_csv, csv.str(), out);
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"mergesched: gradient-compression scheduling experiments"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  app.footer("Exit codes: 0 ok, 2 usage, 3 validation, 4 runtime.\n"
             "MERGESCHED_GUARD_N overrides the exhaustive-enumeration guard (default 24).");
  std::function<void()> action;

  BenchOpts bo;
  auto* b = app.add_subcommand("bench", "time encode + decode of a compressor over a size grid");
  b->add_option("--config", bo.config, "JSON config document")->check(CLI::ExistingFile);
  b->add_option("--compressor", bo.compressor, "compressor name");
  b->add_option("--sizes", bo.sizes, "element counts (default 2^6..2^22)");
  b->add_option("--reps", bo.reps, "timed repetitions per size (default 20)");
  b->add_option("--seed", bo.seed, "seed; required for stochastic compressors");
  b->add_option("--out", bo.out, "output file (default stdout)");
  b->callback([&] { action = [&] { bench(b, bo, out); }; });

  FitOpts fo;
  auto* f = app.add_subcommand("fit", "fit affine cost parameters to timing samples");
  f->add_option("--config", fo.config, "JSON config document")->check(CLI::ExistingFile);
  f->add_option("--samples", fo.samples, "samples document from bench, or an array of samples");
  f->add_option("--compute-ms", fo.compute_ms, "backprop compute time A to carry along");
  f->add_option("--out", fo.out, "output file (default stdout)");
  f->callback([&] { action = [&] { fit_cmd(f, fo, out); }; });

  SearchOpts so;
  auto* s = app.add_subcommand("search", "search a model partition");
  s->add_option("--config", so.config, "JSON config document")->check(CLI::ExistingFile);
  s->add_option("--profile", so.profile, "model profile");
  s->add_option("--costs", so.costs, "cost parameters (fit output or plain object)");
  s->add_option("--calibration", so.calibration, "calibration fixture");
  s->add_option("--workers", so.workers, "workers, for calibrated costs (default 2)");
  s->add_option("--compressor", so.compressor, "compressor name (default identity)");
  s->add_option("--mode", so.mode, "heuristic, exhaustive, both or naive")
      ->check(CLI::IsMember({"heuristic", "exhaustive", "both", "naive"}));
  s->add_option("--Y,--max-groups", so.y, "largest group count (default 2; N for exhaustive)");
  s->add_option("--alpha", so.alpha, "marginal-benefit fraction (default 0.02)");
  s->add_option("--unimodal-guard", so.guard, "half-width of the verification scan (default 3)");
  s->add_flag("--literal", so.literal, "communication priced on dense group size");
  s->add_option("--out", so.out, "output file (default stdout)");
  s->callback([&] { action = [&] { search_cmd(s, so, out); }; });

  SweepOpts wo;
  auto* w = app.add_subcommand("sweep", "simulate algorithm x workers x scheme, write CSV");
  w->add_option("--config", wo.config, "JSON config document")->check(CLI::ExistingFile);
  w->add_option("--profile", wo.profile, "model profile");
  w->add_option("--costs", wo.costs, "cost parameters (fit output or plain object)");
  w->add_option("--calibration", wo.calibration, "calibration fixture");
  w->add_option("--algos", wo.algos,
                "tokens <compressor>[_layerwise|_merged|_single|_naive]; fp32 = identity");
  w->add_option("--workers", wo.workers, "worker counts (default 2 4 8)");
  w->add_option("--Y,--max-groups", wo.y, "Y for merged (heuristic) and naive schemes");
  w->add_option("--alpha", wo.alpha, "marginal-benefit fraction (default 0.02)");
  w->add_option("--unimodal-guard", wo.guard, "half-width of the verification scan (default 3)");
  w->add_flag("--literal", wo.literal, "communication priced on dense group size");
  w->add_option("--out", wo.out, "output CSV (default stdout)");
  w->callback([&] { action = [&] { sweep_cmd(w, wo, out); }; });

  TrainOpts to;
  auto* t = app.add_subcommand("train", "train one config or compare several");
  t->add_option("--config", to.config, "TrainConfig object or {\"runs\": [...]}")
      ->required()
      ->check(CLI::ExistingFile);
  t->add_option("--seed", to.seed, "seed for every run (required here or in the config)");
  t->add_option("--iterations", to.iterations, "override iterations");
  t->add_option("--threads", to.threads, "worker threads");
  t->add_option("--loss-threshold", to.loss_threshold, "threshold for iterations-to-loss");
  t->add_option("--out", to.out, "output file (default stdout)");
  t->add_option("--curves", to.curves, "loss-curve CSV");
  t->callback([&] { action = [&] { train_cmd(t, to, out); }; });

  ReportOpts ro;
  auto* r = app.add_subcommand("report", "merge sweep CSVs: best scheme per compressor and n");
  r->add_option("inputs", ro.inputs, "sweep CSV files")->required()->check(CLI::ExistingFile);
  r->add_option("--out", ro.out, "summary document (default stdout)");
  r->add_option("--long", ro.long_csv, "long-format CSV for plotting");
  r->callback([&] { action = [&] { report_cmd(ro, out); }; });

  std::vector<std::string> rev(args.rbegin(), args.rend());
  if (!rev.empty()) rev.pop_back();  // program name
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    action();
    return kExitOk;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ValidationError& e) {
    err << "validation error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const OverflowError& e) {
    err << "validation error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const nlohmann::json::exception& e) {
    err << "validation error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "runtime failure: " << e.what() << '\n';
    return kExitRuntime;
  }
}

}  // namespace mergesched::cli
