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
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace mergesched {

// One gradient tensor in backprop order. Index 0 is the first tensor to
// become ready during backprop (the model's last layer).
struct LayerProfile {
  std::size_t index = 0;
  std::uint64_t size = 0;    // element count, one element = one fp32 value
  double compute_ms = 0.0;   // backprop compute that produces this tensor

  bool operator==(const LayerProfile&) const = default;
};

class ModelProfile {
 public:
  struct Layer {
    std::uint64_t size;
    double compute_ms;
  };

  ModelProfile() = default;
  // Validates every layer (size >= 1, finite non-negative compute) and
  // recomputes the totals. Throws ValidationError.
  ModelProfile(std::string name, std::span<const Layer> layers);

  const std::string& name() const { return name_; }
  std::span<const LayerProfile> layers() const { return layers_; }
  std::size_t num_tensors() const { return layers_.size(); }
  const LayerProfile& layer(std::size_t i) const { return layers_.at(i); }
  std::uint64_t total_size() const { return total_size_; }
  double total_compute() const { return total_compute_; }

  bool operator==(const ModelProfile&) const = default;

 private:
  std::string name_;
  std::vector<LayerProfile> layers_;
  std::uint64_t total_size_ = 0;
  double total_compute_ = 0.0;
};

// Profile document: {"name": str, "layers": [{"size": int, "compute_ms": float}]}
// with layers in backprop order. Extra fields are ignored.
ModelProfile load_profile(std::string_view document);
ModelProfile load_profile_file(const std::filesystem::path& path);
std::string dump_profile(const ModelProfile& profile);

struct Distribution {
  enum class Kind { kConstant, kUniform, kLogUniform };
  Kind kind = Kind::kConstant;
  double lo = 1.0;
  double hi = 1.0;  // ignored for kConstant

  static Distribution constant(double v) { return {Kind::kConstant, v, v}; }
  static Distribution uniform(double lo, double hi) { return {Kind::kUniform, lo, hi}; }
  static Distribution log_uniform(double lo, double hi) {
    return {Kind::kLogUniform, lo, hi};
  }
};

// Deterministic synthetic profile. Sizes are rounded to the nearest integer
// (minimum 1). Throws ValidationError on invalid parameters.
ModelProfile synth_profile(std::size_t n_tensors, const Distribution& sizes,
                           const Distribution& compute, std::uint64_t seed,
                           std::string name = "synthetic");

// Contiguous grouping of N tensors, described by its cut positions. A cut at
// position b means tensors [.., b) and [b, ..) fall in different groups.
class Partition {
 public:
  Partition() = default;
  // Throws ValidationError unless boundaries are strictly increasing in [1, N-1].
  Partition(std::size_t n_tensors, std::vector<std::size_t> boundaries);

  static Partition single(std::size_t n_tensors);
  static Partition layer_wise(std::size_t n_tensors);
  // Groups given by tensor counts, e.g. {2, 2} for N = 4.
  static Partition from_counts(std::span<const std::size_t> counts);

  std::size_t num_tensors() const { return n_; }
  std::size_t num_groups() const { return boundaries_.size() + 1; }
  std::span<const std::size_t> boundaries() const { return boundaries_; }

  // Half-open tensor range [first, last) of group g.
  std::pair<std::size_t, std::size_t> group_range(std::size_t g) const;
  std::vector<std::size_t> group_counts() const;
  // Element count x_i of every group.
  std::vector<std::uint64_t> group_sizes(const ModelProfile& profile) const;

  std::string to_string() const;  // e.g. "[2|2]" in tensor counts

  bool operator==(const Partition&) const = default;
  auto operator<=>(const Partition& o) const {
    if (auto c = boundaries_.size() <=> o.boundaries_.size(); c != 0) return c;
    return boundaries_ <=> o.boundaries_;
  }

 private:
  std::size_t n_ = 0;
  std::vector<std::size_t> boundaries_;
};

struct PartitionHash {
  std::size_t operator()(const Partition& p) const noexcept;
};

// Number of contiguous partitions: C(N-1, y-1) for a fixed y, 2^(N-1) when y
// is omitted. Throws OverflowError instead of wrapping.
std::uint64_t count_partitions(std::size_t n_tensors, std::optional<std::size_t> y = {});
// Number of partitions with at most y_max groups.
std::uint64_t count_partitions_up_to(std::size_t n_tensors, std::size_t y_max);

// Default limit on enumerations (2^(guard-1) partitions). MERGESCHED_GUARD_N
// overrides the built-in value of 24.
std::size_t enumeration_guard();

// Single-consumer stream of every contiguous partition with y <= y_max, ordered
// by group count then lexicographically by boundaries.
class PartitionEnumerator {
 public:
  // Throws RuntimeFailure when the stream would exceed 2^(guard-1) items.
  PartitionEnumerator(std::size_t n_tensors, std::optional<std::size_t> y_max = {},
                      std::optional<std::size_t> guard = {});

  std::optional<Partition> next();

 private:
  bool advance();

  std::size_t n_;
  std::size_t y_max_;
  std::size_t y_ = 1;
  std::vector<std::size_t> cuts_;
  bool started_ = false;
  bool done_ = false;
};

PartitionEnumerator enumerate_partitions(const ModelProfile& profile,
                                         std::optional<std::size_t> y_max = {},
                                         std::optional<std::size_t> guard = {});

}  // namespace mergesched
