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

#include "mergesched/serialize.hpp"

#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>

#include "mergesched/error.hpp"
#include "mergesched/version.hpp"

namespace mergesched {

namespace {

void only_keys(const Json& j, std::string_view what, std::initializer_list<const char*> keys) {
  if (!j.is_object()) throw ValidationError(std::string(what) + ": expected an object");
  const std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [k, v] : j.items()) {
    if (!allowed.count(k)) {
      throw ValidationError(std::string(what) + ": unknown field '" + k + "'");
    }
  }
}

template <typename T>
void read(const Json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ValidationError(std::string("field '") + key + "' has the wrong type");
  }
}

}  // namespace

Json to_json(const CompressorSpec& s) {
  Json j;
  j["algorithm"] = std::string(algorithm_name(s.algorithm));
  j["sparsity"] = s.sparsity;
  j["levels"] = s.levels;
  j["bucket_size"] = s.bucket_size;
  j["error_feedback"] = s.error_feedback;
  j["unbiased_scaling"] = s.unbiased_scaling;
  j["threshold"] = s.threshold;
  j["momentum"] = s.momentum;
  j["momentum_correction"] = s.momentum_correction;
  return j;
}

CompressorSpec spec_from_json(const Json& j) {
  if (j.is_string()) {
    auto s = CompressorSpec::make(parse_algorithm(j.get<std::string>()));
    s.validate();
    return s;
  }
  only_keys(j, "compressor", {"algorithm", "sparsity", "levels", "bucket_size", "error_feedback",
                              "unbiased_scaling", "threshold", "momentum", "momentum_correction"});
  if (!j.contains("algorithm")) throw ValidationError("compressor: missing 'algorithm'");
  std::string name;
  read(j, "algorithm", name);
  CompressorSpec s = CompressorSpec::make(parse_algorithm(name));
  read(j, "sparsity", s.sparsity);
  read(j, "levels", s.levels);
  read(j, "bucket_size", s.bucket_size);
  read(j, "error_feedback", s.error_feedback);
  read(j, "unbiased_scaling", s.unbiased_scaling);
  read(j, "threshold", s.threshold);
  read(j, "momentum", s.momentum);
  read(j, "momentum_correction", s.momentum_correction);
  s.validate();
  return s;
}

Json to_json(const CostParams& p) {
  return Json{{"b_h", p.b_h}, {"gamma_h", p.gamma_h}, {"b_g", p.b_g},
              {"gamma_g", p.gamma_g}, {"compute_ms", p.compute_ms}};
}

CostParams costs_from_json(const Json& j) {
  only_keys(j, "costs", {"b_h", "gamma_h", "b_g", "gamma_g", "compute_ms"});
  CostParams p;
  read(j, "b_h", p.b_h);
  read(j, "gamma_h", p.gamma_h);
  read(j, "b_g", p.b_g);
  read(j, "gamma_g", p.gamma_g);
  read(j, "compute_ms", p.compute_ms);
  p.validate();
  return p;
}

Json to_json(const std::vector<TimingSample>& samples) {
  Json arr = Json::array();
  for (const auto& s : samples) {
    arr.push_back(
        {{"size", s.size}, {"time_ms", s.time_ms}, {"kind", std::string(sample_kind_name(s.kind))}});
  }
  return arr;
}

std::vector<TimingSample> samples_from_json(const Json& j) {
  if (!j.is_array()) throw ValidationError("samples: expected an array");
  std::vector<TimingSample> out;
  for (const auto& e : j) {
    only_keys(e, "sample", {"size", "time_ms", "kind"});
    if (!e.contains("size") || !e.contains("time_ms")) {
      throw ValidationError("sample: needs 'size' and 'time_ms'");
    }
    TimingSample s;
    read(e, "size", s.size);
    read(e, "time_ms", s.time_ms);
    if (e.contains("kind")) s.kind = parse_sample_kind(e.at("kind").get<std::string>());
    out.push_back(s);
  }
  return out;
}

Json to_json(const LineFit& f) {
  return Json{{"intercept", f.intercept},
              {"slope", f.slope},
              {"residual_norm", f.residual_norm},
              {"intercept_clamped", f.intercept_clamped}};
}

Json to_json(const SearchConfig& c) {
  return Json{{"max_groups", c.max_groups},
              {"alpha", c.alpha},
              {"unimodal_guard", c.unimodal_guard},
              {"repetitions", c.repetitions}};
}

SearchConfig search_config_from_json(const Json& j) {
  only_keys(j, "search", {"max_groups", "alpha", "unimodal_guard", "repetitions"});
  SearchConfig c;
  read(j, "max_groups", c.max_groups);
  read(j, "alpha", c.alpha);
  read(j, "unimodal_guard", c.unimodal_guard);
  read(j, "repetitions", c.repetitions);
  return c;
}

Json partition_json(const Partition& p) { return Json(p.group_counts()); }

Partition partition_from_json(std::size_t n_tensors, const Json& j) {
  std::vector<std::size_t> counts;
  try {
    counts = j.get<std::vector<std::size_t>>();
  } catch (const nlohmann::json::exception&) {
    throw ValidationError("partition: expected a list of group tensor counts");
  }
  Partition p = Partition::from_counts(counts);
  if (p.num_tensors() != n_tensors) {
    throw ValidationError("partition: counts sum to " + std::to_string(p.num_tensors()) +
                          ", expected " + std::to_string(n_tensors));
  }
  return p;
}

Json to_json(const SearchResult& r) {
  Json j;
  j["partition"] = partition_json(r.partition);
  j["partition_string"] = r.partition.to_string();
  j["groups"] = r.partition.num_groups();
  j["F_ms"] = r.f_ms;
  j["evaluations"] = r.evaluations;
  j["termination"] = std::string(termination_name(r.termination));
  Json per_y = Json::array();
  for (const auto& [y, f] : r.per_y) per_y.push_back({{"y", y}, {"F_ms", f}});
  j["per_y"] = per_y;
  Json log = Json::array();
  for (const auto& e : r.log) {
    log.push_back({{"partition", e.partition.to_string()}, {"F_ms", e.f_ms}});
  }
  j["log"] = log;
  return j;
}

Json to_json(const SimReport& r) {
  Json j;
  j["T_ms"] = r.iteration_ms;
  j["compute_ms"] = r.compute_ms;
  j["compression_ms"] = r.compression_ms;
  j["communication_ms"] = r.communication_ms;
  j["overlap_ms"] = r.overlap_ms;
  Json groups = Json::array();
  for (const auto& g : r.per_group) {
    groups.push_back({{"ready_ms", g.ready_ms},
                      {"start_ms", g.start_ms},
                      {"finish_ms", g.finish_ms},
                      {"compression_ms", g.compression_ms},
                      {"communication_ms", g.communication_ms}});
  }
  j["groups"] = groups;
  return j;
}

Json to_json(const TaskSpec& t) {
  return std::visit(
      [](const auto& s) -> Json {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, QuadraticSpec>) {
          return Json{{"kind", "quadratic"},
                      {"dimension", s.dimension},
                      {"tensors", s.tensors},
                      {"curvature_min", s.curvature_min},
                      {"curvature_max", s.curvature_max},
                      {"seed", s.seed}};
        } else {
          return Json{{"kind", "blobs_mlp"},   {"features", s.features},
                      {"classes", s.classes},  {"hidden", s.hidden},
                      {"samples", s.samples},  {"separation", s.separation},
                      {"seed", s.seed}};
        }
      },
      t);
}

TaskSpec task_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("kind")) throw ValidationError("task: missing 'kind'");
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "quadratic") {
    only_keys(j, "task", {"kind", "dimension", "tensors", "curvature_min", "curvature_max", "seed"});
    QuadraticSpec s;
    read(j, "dimension", s.dimension);
    read(j, "tensors", s.tensors);
    read(j, "curvature_min", s.curvature_min);
    read(j, "curvature_max", s.curvature_max);
    read(j, "seed", s.seed);
    return s;
  }
  if (kind == "blobs_mlp") {
    only_keys(j, "task", {"kind", "features", "classes", "hidden", "samples", "separation", "seed"});
    BlobsMlpSpec s;
    read(j, "features", s.features);
    read(j, "classes", s.classes);
    read(j, "hidden", s.hidden);
    read(j, "samples", s.samples);
    read(j, "separation", s.separation);
    read(j, "seed", s.seed);
    return s;
  }
  throw ValidationError("task: unknown kind '" + kind + "'");
}

Json to_json(const TrainConfig& c) {
  Json j;
  j["task"] = to_json(c.task);
  j["n_workers"] = c.n_workers;
  j["batch_size"] = c.batch_size;
  j["lr"] = c.lr;
  j["iterations"] = c.iterations;
  j["compressor"] = to_json(c.spec);
  j["scheme"] = scheme_name(c.scheme);
  if (c.scheme == PartitionScheme::kExplicit) j["partition"] = partition_json(c.partition);
  j["seed"] = c.seed;
  j["shared_data"] = c.shared_data;
  j["threads"] = c.threads;
  if (!c.label.empty()) j["label"] = c.label;
  return j;
}

TrainConfig train_config_from_json(const Json& j) {
  only_keys(j, "train", {"task", "n_workers", "batch_size", "lr", "iterations", "compressor",
                         "scheme", "partition", "seed", "shared_data", "threads", "label"});
  TrainConfig c;
  if (j.contains("task")) c.task = task_from_json(j.at("task"));
  read(j, "n_workers", c.n_workers);
  read(j, "batch_size", c.batch_size);
  read(j, "lr", c.lr);
  read(j, "iterations", c.iterations);
  if (j.contains("compressor")) c.spec = spec_from_json(j.at("compressor"));
  std::string scheme = "layer_wise";
  read(j, "scheme", scheme);
  if (scheme == "layer_wise") {
    c.scheme = PartitionScheme::kLayerWise;
  } else if (scheme == "merged_all") {
    c.scheme = PartitionScheme::kMergedAll;
  } else if (scheme == "explicit") {
    c.scheme = PartitionScheme::kExplicit;
    if (!j.contains("partition")) throw ValidationError("train: explicit scheme needs 'partition'");
    const auto n = make_task(c.task)->tensor_sizes().size();
    c.partition = partition_from_json(n, j.at("partition"));
  } else {
    throw ValidationError("train: unknown scheme '" + scheme + "'");
  }
  read(j, "seed", c.seed);
  read(j, "shared_data", c.shared_data);
  read(j, "threads", c.threads);
  read(j, "label", c.label);
  c.validate();
  return c;
}

Json summary_json(const TrainReport& r) {
  Json j;
  j["iterations"] = r.loss_curve.size();
  j["final_loss"] = r.final_loss;
  j[r.metric_is_accuracy ? "final_accuracy" : "final_distance"] = r.final_metric;
  j["wall_ms"] = r.wall_ms;
  j["partition"] = r.partition.to_string();
  j["diverged"] = r.diverged;
  if (!r.message.empty()) j["message"] = r.message;
  return j;
}

Json to_json(const Comparison& c) {
  Json rows = Json::array();
  for (const auto& r : c.rows) {
    Json row{{"label", r.label},
             {"algorithm", r.algorithm},
             {"scheme", r.scheme},
             {"groups", r.groups},
             {"baseline", r.baseline},
             {"iterations", r.iterations},
             {"final_loss", r.final_loss},
             {"final_metric", r.final_metric},
             {"wall_ms", r.wall_ms},
             {"diverged", r.diverged}};
    row["iterations_to_threshold"] =
        r.iterations_to_threshold ? Json(*r.iterations_to_threshold) : Json(nullptr);
    rows.push_back(row);
  }
  return Json{{"loss_threshold", c.loss_threshold}, {"rows", rows}};
}

Json make_document(std::string_view kind, Json config, Json result) {
  Json j;
  j["artifact"] = "mergesched";
  j["version"] = std::string(kVersion);
  j["kind"] = std::string(kind);
  j["config"] = std::move(config);
  j["result"] = std::move(result);
  return j;
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw RuntimeFailure("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

Json read_document(const std::filesystem::path& path, std::string_view kind) {
  Json j = read_json_file(path);
  if (!j.is_object() || !j.contains("kind") || !j.contains("result")) {
    throw ValidationError(path.string() + ": not a mergesched document");
  }
  if (j.at("kind") != std::string(kind)) {
    throw ValidationError(path.string() + ": expected a '" + std::string(kind) +
                          "' document, found '" + j.at("kind").get<std::string>() + "'");
  }
  return j;
}

void write_json_file(const std::filesystem::path& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw RuntimeFailure("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw RuntimeFailure("write failed: " + path.string());
}

}  // namespace mergesched
