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

#include "mergesched/simulator.hpp"

#include <algorithm>
#include <string>

#include "mergesched/error.hpp"

namespace mergesched {

void SimConfig::validate() const {
  if (partition.num_tensors() != profile.num_tensors()) {
    throw ValidationError("sim: partition covers " + std::to_string(partition.num_tensors()) +
                          " tensors, profile has " + std::to_string(profile.num_tensors()));
  }
  if (n_workers < 1) throw ValidationError("sim: n_workers must be >= 1");
  costs.validate();
  spec.validate();
}

std::vector<double> ready_times(const ModelProfile& profile, const Partition& partition) {
  if (partition.num_tensors() != profile.num_tensors()) {
    throw ValidationError("ready_times: partition does not match profile");
  }
  std::vector<double> ready;
  ready.reserve(partition.num_groups());
  double t = 0.0;
  const auto layers = profile.layers();
  for (std::size_t g = 0; g < partition.num_groups(); ++g) {
    auto [first, last] = partition.group_range(g);
    for (std::size_t i = first; i < last; ++i) t += layers[i].compute_ms;
    ready.push_back(t);
  }
  return ready;
}

double communication_size(const CompressorSpec& spec, std::uint64_t group_size,
                          bool g_on_payload) {
  if (!g_on_payload || spec.algorithm == Algorithm::kIdentity) {
    return static_cast<double>(group_size);
  }
  return static_cast<double>(payload_bytes(spec, group_size)) / 4.0;
}

SimReport simulate_iteration(const SimConfig& config) {
  config.validate();
  return simulate_iteration(config.profile, config.partition, config.spec, config.costs,
                            config.g_on_payload);
}

SimReport simulate_iteration(const ModelProfile& profile, const Partition& partition,
                             const CompressorSpec& spec, const CostParams& costs,
                             bool g_on_payload) {
  const auto ready = ready_times(profile, partition);
  const auto sizes = partition.group_sizes(profile);

  SimReport report;
  report.compute_ms = profile.total_compute();
  report.per_group.reserve(sizes.size());
  double channel_free = 0.0;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    GroupTiming t;
    t.ready_ms = ready[i];
    t.compression_ms = h_cost(costs, static_cast<double>(sizes[i]));
    t.communication_ms = g_cost(costs, communication_size(spec, sizes[i], g_on_payload));
    t.start_ms = std::max(channel_free, t.ready_ms);
    t.finish_ms = t.start_ms + t.compression_ms + t.communication_ms;
    channel_free = t.finish_ms;
    report.compression_ms += t.compression_ms;
    report.communication_ms += t.communication_ms;
    report.per_group.push_back(t);
  }
  report.iteration_ms = channel_free;
  report.overlap_ms =
      report.compute_ms + report.compression_ms + report.communication_ms - report.iteration_ms;
  return report;
}

double scaling_factor(double t1_speed, double tn_speed, std::size_t n) {
  if (!(t1_speed > 0.0)) throw ValidationError("scaling_factor: T_1 must be positive");
  if (n < 1) throw ValidationError("scaling_factor: n must be >= 1");
  return tn_speed / (static_cast<double>(n) * t1_speed);
}

double predict_speed(const SimConfig& config, double batch) {
  const double t = simulate_iteration(config).iteration_ms;
  if (!(t > 0.0)) throw ValidationError("predict_speed: iteration time must be positive");
  return static_cast<double>(config.n_workers) * batch / (t / 1000.0);
}

}  // namespace mergesched
