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

#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "mergesched/compressors.hpp"

namespace mergesched {

// Affine overheads: compression h(x) = b_h + gamma_h * x and communication
// g(x) = b_g + gamma_g * x, times in ms and x in elements. compute_ms is the
// iteration's backprop compute A, carried along for convenience.
struct CostParams {
  double b_h = 0.0;
  double gamma_h = 0.0;
  double b_g = 0.0;
  double gamma_g = 0.0;
  double compute_ms = 0.0;

  void validate() const;  // all fields finite and >= 0
  bool operator==(const CostParams&) const = default;
};

inline double h_cost(const CostParams& p, double x) { return p.b_h + p.gamma_h * x; }
inline double g_cost(const CostParams& p, double x) { return p.b_g + p.gamma_g * x; }

enum class SampleKind { kCompression, kCommunication };

std::string_view sample_kind_name(SampleKind k);
SampleKind parse_sample_kind(std::string_view name);

struct TimingSample {
  std::uint64_t size = 0;  // elements
  double time_ms = 0.0;
  SampleKind kind = SampleKind::kCompression;
};

struct LineFit {
  double intercept = 0.0;
  double slope = 0.0;
  double residual_norm = 0.0;  // ||time - (intercept + slope * size)||_2
  bool intercept_clamped = false;
};

// Ordinary least squares of time on size. A negative intercept is clamped to
// zero and the slope refitted through the origin; intercept_clamped reports
// it. Throws ValidationError with fewer than two samples or a single
// distinct size.
LineFit fit(std::span<const TimingSample> samples);

struct CostFit {
  CostParams params;
  LineFit compression;
  LineFit communication;
  bool has_compression = false;
  bool has_communication = false;
};

// Fits each kind present in 'samples' separately.
CostFit fit_cost_params(std::span<const TimingSample> samples, double compute_ms = 0.0);

// Host timings of encode + decode + error-feedback update, one sample per
// size in input order: the median over 'repetitions' timed runs after one
// untimed warm-up. Throws ValidationError when repetitions < 3.
std::vector<TimingSample> microbench(const CompressorSpec& spec,
                                     std::span<const std::uint64_t> sizes,
                                     std::size_t repetitions, std::uint64_t seed = 0);

double median(std::vector<double> values);

}  // namespace mergesched
