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
#include <functional>
#include <optional>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "mergesched/compressors.hpp"
#include "mergesched/costmodel.hpp"
#include "mergesched/profiles.hpp"

namespace mergesched {

struct EvaluationRecord {
  Partition partition;
  double f_ms = 0.0;
};

// Objective oracle F(partition) with memoization and an audit log. Each
// distinct partition is evaluated at most once; evaluations() counts them.
class Evaluator {
 public:
  using Fn = std::function<double(const Partition&)>;

  Evaluator(std::size_t n_tensors, Fn fn) : n_(n_tensors), fn_(std::move(fn)) {}

  double operator()(const Partition& p);

  std::size_t num_tensors() const { return n_; }
  std::size_t evaluations() const { return log_.size(); }
  const std::vector<EvaluationRecord>& log() const { return log_; }

 private:
  std::size_t n_;
  Fn fn_;
  std::unordered_map<Partition, double, PartitionHash> cache_;
  std::vector<EvaluationRecord> log_;
};

// F from the WFBP simulator. The profile is copied into the evaluator.
Evaluator analytic_evaluator(const ModelProfile& profile, const CompressorSpec& spec,
                             const CostParams& costs, bool g_on_payload = true);

enum class Termination { kWorseThanPrev, kMarginalBenefit, kReachedY, kExhaustive };

std::string_view termination_name(Termination t);

struct SearchConfig {
  std::size_t max_groups = 2;     // Y
  double alpha = 0.02;            // marginal-benefit fraction
  std::size_t unimodal_guard = 3; // half-width of the verification scan
  std::size_t repetitions = 20;   // measured mode: timings per candidate

  void validate(std::size_t n_tensors) const;
};

struct SearchResult {
  Partition partition;
  double f_ms = 0.0;
  std::size_t evaluations = 0;
  std::vector<std::pair<std::size_t, double>> per_y;  // (y, F_min(y))
  Termination termination = Termination::kReachedY;
  std::vector<EvaluationRecord> log;                  // evaluations made by this search
};

// Global argmin over every partition with y <= y_max. Ties go to the smaller
// y, then the lexicographically smaller boundary list. Guarded like
// enumerate_partitions.
SearchResult exhaustive_search(Evaluator& eval, std::size_t y_max,
                               std::optional<std::size_t> guard = {});

struct SplitResult {
  std::size_t split = 0;  // first group holds tensors [0, split)
  double f_ms = 0.0;
};

// Two-group split by binary search on the sign of F(j+1) - F(j), then a
// +-guard scan around the candidate. Returns the best split seen (smallest
// index on ties). Uses at most 2*ceil(log2 N) + 2*guard + 1 evaluations.
SplitResult optimal_split_y2(Evaluator& eval, std::size_t guard = 3);

// Best partition with exactly y groups: every placement of the first y-2
// boundaries, the last one found by the unimodal split search.
std::pair<Partition, double> optimal_partition_y(Evaluator& eval, std::size_t y,
                                                 std::size_t guard = 3);

// Grows y from 1 to Y, stopping when F_min(y-1) < F_min(y) (returns X_{y-1})
// or when the gain F_min(y-1) - F_min(y) is below alpha * F_min(y-1)
// (returns X_y).
SearchResult heuristic_search(Evaluator& eval, const SearchConfig& config);

// y groups whose tensor counts differ by at most one; earlier groups take
// the remainder.
Partition naive_partition(std::size_t n_tensors, std::size_t y);

// A split where the scan of F over the two-group split index is not
// non-increasing-then-non-decreasing: values[j-1] is F at split j.
struct UnimodalityViolation {
  std::size_t prefix_last = 0;  // last fixed boundary (0 for y = 2)
  std::size_t at = 0;           // split index where F rises and later falls
  std::vector<double> values;
};

// Full scan of F over the last free boundary for the given fixed prefix
// (empty for y = 2). Returns the violation, if any.
std::optional<UnimodalityViolation> audit_unimodality(Evaluator& eval,
                                                      std::vector<std::size_t> prefix = {});

// Training loop that can run timed iterations under a pinned partition.
class IterationTimer {
 public:
  virtual ~IterationTimer() = default;
  virtual std::size_t num_tensors() const = 0;
  // Runs one full iteration under 'partition' and returns its duration in ms.
  virtual double timed_iteration(const Partition& partition) = 0;
  virtual void pin(const Partition& partition) = 0;
};

// heuristic_search with F measured as the median of config.repetitions
// timed iterations per candidate; the chosen partition is pinned afterwards.
SearchResult online_search(const SearchConfig& config, IterationTimer& trainer);

}  // namespace mergesched
