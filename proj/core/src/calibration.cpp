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

#include "mergesched/calibration.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "mergesched/error.hpp"

namespace mergesched {

namespace {

constexpr double kGrowthSpan = static_cast<double>((1u << 20) - (1u << 6));

double ring_factor(std::size_t n) {
  return n <= 1 ? 0.0 : 2.0 * static_cast<double>(n - 1) / static_cast<double>(n);
}

std::size_t decodes_per_iteration(const CompressorSpec& spec, std::size_t n) {
  const std::size_t received = collective_for(spec.algorithm) == Collective::kAllgather ? n : 1;
  return received + (spec.error_feedback ? 1 : 0);
}

double positive(const nlohmann::json& doc, const char* key, bool allow_zero = false) {
  if (!doc.contains(key) || !doc[key].is_number()) {
    throw ValidationError(std::string("calibration: missing numeric field '") + key + "'");
  }
  const double v = doc[key].get<double>();
  if (!std::isfinite(v) || v < 0.0 || (!allow_zero && v == 0.0)) {
    throw ValidationError(std::string("calibration: field '") + key + "' out of range");
  }
  return v;
}

}  // namespace

Collective collective_for(Algorithm a) {
  return a == Algorithm::kIdentity || a == Algorithm::kFp16 ? Collective::kAllreduce
                                                            : Collective::kAllgather;
}

Calibration load_calibration(std::string_view document) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(document);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(std::string("calibration: malformed document: ") + e.what());
  }
  if (!doc.is_object()) throw ValidationError("calibration: expected an object");
  Calibration cal;
  cal.name = doc.value("name", std::string("calibration"));
  for (const auto& a : doc.value("assumptions", nlohmann::json::array())) {
    cal.assumptions.push_back(a.get<std::string>());
  }
  cal.profile = doc.value("profile", std::string());
  cal.compute_ms = positive(doc, "compute_ms");
  cal.reference_workers = doc.value("reference_workers", std::size_t{2});
  if (cal.reference_workers < 2) {
    throw ValidationError("calibration: reference_workers must be >= 2");
  }
  cal.dense_total_comm_ms = positive(doc, "dense_total_comm_ms");
  cal.dense_latency_ms = positive(doc, "dense_latency_ms", true);
  cal.encode_floor_ms = positive(doc, "encode_floor_ms");
  cal.decode_floor_ms = positive(doc, "decode_floor_ms");
  cal.size_growth = positive(doc, "size_growth", true);
  if (doc.contains("layerwise_total_ms")) {
    for (const auto& [name, v] : doc["layerwise_total_ms"].items()) {
      if (!v.is_number() || v.get<double>() <= 0.0) {
        throw ValidationError("calibration: layerwise_total_ms." + name + " must be positive");
      }
      cal.layerwise_total_ms[parse_algorithm(name)] = v.get<double>();
    }
  }
  return cal;
}

Calibration load_calibration_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw RuntimeFailure("cannot open calibration " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return load_calibration(buf.str());
}

ModelProfile calibrated_profile(const Calibration& cal, const ModelProfile& profile) {
  const double total = profile.total_compute();
  const double scale = total > 0.0 ? cal.compute_ms / total : 0.0;
  std::vector<ModelProfile::Layer> layers;
  layers.reserve(profile.num_tensors());
  for (const auto& l : profile.layers()) layers.push_back({l.size, l.compute_ms * scale});
  return ModelProfile(profile.name(), layers);
}

CompressionOverheads compression_overheads(const Calibration& cal, const ModelProfile& profile,
                                           const CompressorSpec& spec) {
  CompressionOverheads out;
  out.slope_per_ms = cal.size_growth / kGrowthSpan;
  const double ratio = cal.encode_floor_ms / cal.decode_floor_ms;
  const auto it = cal.layerwise_total_ms.find(spec.algorithm);
  if (it == cal.layerwise_total_ms.end()) {
    out.encode_ms = cal.encode_floor_ms;
    out.decode_ms = cal.decode_floor_ms;
    return out;
  }
  // total = N (e + m d) + slope (e + m d) D with e = ratio * d.
  const double m = static_cast<double>(decodes_per_iteration(spec, cal.reference_workers));
  const double n_tensors = static_cast<double>(profile.num_tensors());
  const double d_elems = static_cast<double>(profile.total_size());
  const double d = it->second / ((ratio + m) * (n_tensors + out.slope_per_ms * d_elems));
  out.decode_ms = std::max(d, cal.decode_floor_ms);
  out.encode_ms = std::max(ratio * d, cal.encode_floor_ms);
  return out;
}

CostParams calibrated_costs(const Calibration& cal, const ModelProfile& profile,
                            const CompressorSpec& spec, std::size_t n_workers,
                            bool g_on_payload) {
  if (n_workers < 1) throw ValidationError("calibrated_costs: n_workers must be >= 1");
  const double n_tensors = static_cast<double>(profile.num_tensors());
  const double d_elems = static_cast<double>(profile.total_size());
  const std::size_t ref = cal.reference_workers;

  CostParams p;
  p.compute_ms = cal.compute_ms;
  if (n_workers == 1) return p;  // nothing to exchange, nothing to compress

  // Link time per element moved, from the dense reference point.
  const double dense_slope =
      (cal.dense_total_comm_ms - n_tensors * cal.dense_latency_ms) / d_elems;
  if (dense_slope < 0.0) {
    throw ValidationError("calibration: dense latency exceeds the dense communication total");
  }
  const double per_element = dense_slope / ring_factor(ref);
  const double steps = static_cast<double>(n_workers - 1) / static_cast<double>(ref - 1);
  p.b_g = cal.dense_latency_ms * steps;
  const double moved = collective_for(spec.algorithm) == Collective::kAllreduce
                           ? ring_factor(n_workers)
                           : static_cast<double>(n_workers - 1);
  p.gamma_g = per_element * moved;
  if (!g_on_payload && spec.algorithm != Algorithm::kIdentity) {
    const auto total = static_cast<std::uint64_t>(profile.total_size());
    p.gamma_g *= static_cast<double>(payload_bytes(spec, total)) / (4.0 * d_elems);
  }

  if (spec.algorithm != Algorithm::kIdentity) {
    const auto o = compression_overheads(cal, profile, spec);
    const double m = static_cast<double>(decodes_per_iteration(spec, n_workers));
    p.b_h = o.encode_ms + m * o.decode_ms;
    p.gamma_h = o.slope_per_ms * p.b_h;
  }
  return p;
}

}  // namespace mergesched
