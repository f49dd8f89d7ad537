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

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "mergesched/compressors.hpp"
#include "mergesched/costmodel.hpp"
#include "mergesched/profiles.hpp"

namespace mergesched {

enum class Collective { kAllreduce, kAllgather };

// Dense and half-precision buffers are reduced; every other payload is
// gathered because it cannot be summed in compressed form.
Collective collective_for(Algorithm a);

// A measured operating point plus the modelling assumptions needed to turn it
// into CostParams for any algorithm and worker count.
//
// Communication: the reference dense total fixes a per-element link time.
// Ring allreduce moves 2(n-1)/n of the buffer per worker, allgather moves
// (n-1) payloads; per-message latency grows with (n-1).
//
// Compression: per-tensor encode/decode latencies keep the encode:decode
// floor ratio. When an algorithm lists a layer-wise total at the reference
// worker count they are scaled to reproduce it, otherwise the floors are used.
// Each worker decodes one payload per peer under allgather (one under
// allreduce) plus one extra decode when error feedback is on. Per-element
// slopes make the overhead grow by 'size_growth' between 2^6 and 2^20
// elements.
struct Calibration {
  std::string name;
  std::vector<std::string> assumptions;
  std::string profile;  // profile file, relative to the calibration file
  double compute_ms = 0.0;
  std::size_t reference_workers = 2;
  double dense_total_comm_ms = 0.0;
  double dense_latency_ms = 0.0;
  double encode_floor_ms = 0.0;
  double decode_floor_ms = 0.0;
  double size_growth = 0.0;
  std::map<Algorithm, double> layerwise_total_ms;
};

Calibration load_calibration(std::string_view document);
Calibration load_calibration_file(const std::filesystem::path& path);

// Per-tensor latencies implied by the calibration for one algorithm.
struct CompressionOverheads {
  double encode_ms = 0.0;
  double decode_ms = 0.0;
  double slope_per_ms = 0.0;  // ms per element per ms of latency
};

CompressionOverheads compression_overheads(const Calibration& cal, const ModelProfile& profile,
                                           const CompressorSpec& spec);

// Profile with compute times rescaled so the total equals cal.compute_ms.
ModelProfile calibrated_profile(const Calibration& cal, const ModelProfile& profile);

// Cost parameters for 'spec' on n workers. With g_on_payload off the
// communication slope is pre-multiplied by the payload/dense byte ratio of
// the whole model so that g stays affine in the group size.
CostParams calibrated_costs(const Calibration& cal, const ModelProfile& profile,
                            const CompressorSpec& spec, std::size_t n_workers,
                            bool g_on_payload = true);

}  // namespace mergesched
