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
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "mergesched/compressors.hpp"
#include "mergesched/profiles.hpp"
#include "mergesched/scheduler.hpp"
#include "mergesched/tasks.hpp"

namespace mergesched {

enum class PartitionScheme { kExplicit, kLayerWise, kMergedAll };

const char* scheme_name(PartitionScheme s);

struct TrainConfig {
  TaskSpec task = QuadraticSpec{};
  std::size_t n_workers = 4;
  std::size_t batch_size = 64;  // total over all workers
  double lr = 0.1;
  std::size_t iterations = 100;
  CompressorSpec spec = CompressorSpec::make(Algorithm::kIdentity);
  PartitionScheme scheme = PartitionScheme::kLayerWise;
  Partition partition;  // used when scheme == kExplicit
  std::uint64_t seed = 0;
  bool shared_data = true;
  std::size_t threads = 1;
  std::string label;

  void validate() const;
};

struct TrainReport {
  std::vector<double> loss_curve;
  std::vector<double> iteration_times_ms;
  double final_loss = 0.0;
  double final_metric = 0.0;
  bool metric_is_accuracy = false;
  double wall_ms = 0.0;
  bool diverged = false;
  std::string message;
  Partition partition;

  // iteration,loss,time_ms
  void write_csv(std::ostream& out) const;
};

class Trainer final : public IterationTimer {
 public:
  explicit Trainer(TrainConfig config);
  ~Trainer() override;

  Trainer(const Trainer&) = delete;
  Trainer& operator=(const Trainer&) = delete;

  const TrainConfig& config() const { return config_; }
  const Task& task() const { return *task_; }
  const Partition& partition() const { return partition_; }
  std::size_t iteration() const { return t_; }

  // One synchronous iteration; returns the worker-mean local loss. Throws
  // RuntimeFailure when the loss or the parameters become non-finite.
  double step();
  TrainReport run();

  std::size_t num_tensors() const override;
  double timed_iteration(const Partition& partition) override;
  void pin(const Partition& partition) override;

  // When set, timed_iteration still trains but reports clock(partition).
  void set_fake_clock(std::function<double(const Partition&)> clock);

  std::span<const double> params(std::size_t worker) const;
  std::span<const double> residual(std::size_t worker) const;
  // Largest L1 distance from worker 0's parameters; 0 iff every worker is
  // bitwise identical to worker 0.
  double max_worker_divergence() const;

  // Per-worker float gradient and own decoded message from the last step.
  void record_local(bool on) { record_ = on; }
  std::span<const float> last_gradient(std::size_t worker) const;
  std::span<const double> last_decoded(std::size_t worker) const;

 private:
  struct Worker;
  void set_partition(const Partition& p);
  void compute_worker(std::size_t w);

  TrainConfig config_;
  std::unique_ptr<Task> task_;
  std::vector<std::size_t> tensor_offsets_;  // element offset of each tensor
  Partition partition_;
  std::vector<std::unique_ptr<Worker>> workers_;
  std::vector<std::vector<CompressedPayload>> payloads_;  // [group][worker]
  std::function<double(const Partition&)> fake_clock_;
  std::size_t t_ = 0;
  bool record_ = false;
};

TrainReport train(const TrainConfig& config);

struct ComparisonRow {
  std::string label;
  std::string algorithm;
  std::string scheme;
  std::size_t groups = 0;
  bool baseline = false;
  std::size_t iterations = 0;
  double final_loss = 0.0;
  double final_metric = 0.0;
  std::optional<std::size_t> iterations_to_threshold;
  double wall_ms = 0.0;
  bool diverged = false;
};

struct Comparison {
  double loss_threshold = 0.0;
  std::vector<ComparisonRow> rows;
  std::vector<TrainReport> reports;
};

// Runs every config; configs[0] is the baseline. All configs must share the
// task and seed. The default threshold is 1.1x the baseline's final loss.
Comparison compare(const std::vector<TrainConfig>& configs,
                   std::optional<double> loss_threshold = {});

}  // namespace mergesched
