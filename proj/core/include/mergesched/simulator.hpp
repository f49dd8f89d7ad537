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
#include <vector>

#include "mergesched/compressors.hpp"
#include "mergesched/costmodel.hpp"
#include "mergesched/profiles.hpp"

namespace mergesched {

struct SimConfig {
  ModelProfile profile;
  Partition partition;
  CompressorSpec spec;
  CostParams costs;
  std::size_t n_workers = 1;
  // Evaluate g at payload_bytes / 4 element-equivalents for compressed
  // schemes; off evaluates g at the group size x_i.
  bool g_on_payload = true;

  void validate() const;
};

struct GroupTiming {
  double ready_ms = 0.0;
  double start_ms = 0.0;
  double finish_ms = 0.0;
  double compression_ms = 0.0;
  double communication_ms = 0.0;
};

// iteration_ms = compute_ms + compression_ms + communication_ms - overlap_ms,
// with overlap_ms defined by that identity.
struct SimReport {
  double iteration_ms = 0.0;
  double compute_ms = 0.0;
  double compression_ms = 0.0;
  double communication_ms = 0.0;
  double overlap_ms = 0.0;
  std::vector<GroupTiming> per_group;
};

// Cumulative backprop compute at the last tensor of each group.
std::vector<double> ready_times(const ModelProfile& profile, const Partition& partition);

// Element count at which g is evaluated for a group of 'group_size' elements.
double communication_size(const CompressorSpec& spec, std::uint64_t group_size,
                          bool g_on_payload);

// WFBP pipeline: one FIFO channel carries each group's compression then
// communication. start_i = max(finish_{i-1}, r_i),
// finish_i = start_i + h(x_i) + g(x_i), T = finish_y.
SimReport simulate_iteration(const SimConfig& config);
// Same pipeline without copying the profile into a SimConfig.
SimReport simulate_iteration(const ModelProfile& profile, const Partition& partition,
                             const CompressorSpec& spec, const CostParams& costs,
                             bool g_on_payload = true);

inline double objective_f(const SimConfig& config) {
  return simulate_iteration(config).iteration_ms;
}

// T_n / (n * T_1) for throughputs in samples/s. Throws ValidationError for
// non-positive T_1 or n == 0.
double scaling_factor(double t1_speed, double tn_speed, std::size_t n);

// n_workers * batch / iteration seconds.
double predict_speed(const SimConfig& config, double batch);

}  // namespace mergesched
