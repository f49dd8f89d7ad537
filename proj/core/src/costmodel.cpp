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

#include "mergesched/costmodel.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>

#include "mergesched/error.hpp"

namespace mergesched {

void CostParams::validate() const {
  for (double v : {b_h, gamma_h, b_g, gamma_g, compute_ms}) {
    if (!std::isfinite(v) || v < 0.0) {
      throw ValidationError("cost params must be finite and non-negative");
    }
  }
}

std::string_view sample_kind_name(SampleKind k) {
  return k == SampleKind::kCompression ? "compression" : "communication";
}

SampleKind parse_sample_kind(std::string_view name) {
  if (name == "compression") return SampleKind::kCompression;
  if (name == "communication") return SampleKind::kCommunication;
  throw ValidationError("unknown sample kind '" + std::string(name) + "'");
}

LineFit fit(std::span<const TimingSample> samples) {
  if (samples.size() < 2) throw ValidationError("fit: need at least two samples");
  const double n = static_cast<double>(samples.size());
  double mx = 0.0, my = 0.0;
  for (const auto& s : samples) {
    if (s.size < 1 || !std::isfinite(s.time_ms) || s.time_ms < 0.0) {
      throw ValidationError("fit: samples need size >= 1 and a finite time >= 0");
    }
    mx += static_cast<double>(s.size);
    my += s.time_ms;
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (const auto& s : samples) {
    const double dx = static_cast<double>(s.size) - mx;
    sxx += dx * dx;
    sxy += dx * (s.time_ms - my);
  }
  if (sxx == 0.0) throw ValidationError("fit: degenerate design, all sizes are equal");

  LineFit out;
  out.slope = sxy / sxx;
  out.intercept = my - out.slope * mx;
  if (out.intercept < 0.0) {
    double xx = 0.0, xy = 0.0;
    for (const auto& s : samples) {
      const double x = static_cast<double>(s.size);
      xx += x * x;
      xy += x * s.time_ms;
    }
    out.intercept = 0.0;
    out.slope = xy / xx;
    out.intercept_clamped = true;
  }
  double rss = 0.0;
  for (const auto& s : samples) {
    const double r = s.time_ms - (out.intercept + out.slope * static_cast<double>(s.size));
    rss += r * r;
  }
  out.residual_norm = std::sqrt(rss);
  return out;
}

CostFit fit_cost_params(std::span<const TimingSample> samples, double compute_ms) {
  std::vector<TimingSample> comp, comm;
  for (const auto& s : samples) {
    (s.kind == SampleKind::kCompression ? comp : comm).push_back(s);
  }
  CostFit out;
  out.params.compute_ms = compute_ms;
  if (!comp.empty()) {
    out.compression = fit(comp);
    out.params.b_h = out.compression.intercept;
    out.params.gamma_h = std::max(0.0, out.compression.slope);
    out.has_compression = true;
  }
  if (!comm.empty()) {
    out.communication = fit(comm);
    out.params.b_g = out.communication.intercept;
    out.params.gamma_g = std::max(0.0, out.communication.slope);
    out.has_communication = true;
  }
  if (!out.has_compression && !out.has_communication) {
    throw ValidationError("fit: no samples");
  }
  return out;
}

double median(std::vector<double> values) {
  if (values.empty()) throw ValidationError("median of an empty list");
  const auto mid = values.begin() + static_cast<std::ptrdiff_t>(values.size() / 2);
  std::nth_element(values.begin(), mid, values.end());
  if (values.size() % 2 == 1) return *mid;
  const double hi = *mid;
  const double lo = *std::max_element(values.begin(), mid);
  return 0.5 * (lo + hi);
}

std::vector<TimingSample> microbench(const CompressorSpec& spec,
                                     std::span<const std::uint64_t> sizes,
                                     std::size_t repetitions, std::uint64_t seed) {
  if (repetitions < 3) throw ValidationError("microbench: repetitions must be >= 3");
  spec.validate();
  using Clock = std::chrono::steady_clock;
  std::vector<TimingSample> out;
  out.reserve(sizes.size());
  for (std::uint64_t size : sizes) {
    if (size < 1) throw ValidationError("microbench: sizes must be >= 1");
    SplitMix rng(mix_key(seed, size));
    std::vector<float> grad(size);
    for (auto& g : grad) g = static_cast<float>(rng.normal());
    ResidualState state(size);
    std::vector<double> times;
    times.reserve(repetitions);
    for (std::size_t r = 0; r <= repetitions; ++r) {
      const StreamKey key{seed, 0, r, 0};
      const auto t0 = Clock::now();
      // encode() performs the error-feedback decode internally when enabled.
      const CompressedPayload p = encode(spec, grad, ResidualView(state), key);
      const std::vector<float> d = decode(spec, p);
      const auto t1 = Clock::now();
      if (d.size() != size) throw RuntimeFailure("microbench: decode length mismatch");
      if (r > 0) times.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
    }
    out.push_back({size, median(std::move(times)), SampleKind::kCompression});
  }
  return out;
}

}  // namespace mergesched
