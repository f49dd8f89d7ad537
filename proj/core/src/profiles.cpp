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

#include "mergesched/profiles.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "mergesched/error.hpp"
#include "mergesched/rng.hpp"

namespace mergesched {

double SplitMix::normal() {
  // Box-Muller; u1 is kept away from zero.
  const double u1 = (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

ModelProfile::ModelProfile(std::string name, std::span<const Layer> layers)
    : name_(std::move(name)) {
  layers_.reserve(layers.size());
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    if (l.size == 0) {
      throw ValidationError("layer " + std::to_string(i) + ": size must be >= 1");
    }
    if (!std::isfinite(l.compute_ms) || l.compute_ms < 0.0) {
      throw ValidationError("layer " + std::to_string(i) +
                            ": compute_ms must be finite and >= 0");
    }
    layers_.push_back({i, l.size, l.compute_ms});
    total_size_ += l.size;
    total_compute_ += l.compute_ms;
  }
}

ModelProfile load_profile(std::string_view document) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(document);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(std::string("profile: malformed document: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("layers") || !doc["layers"].is_array()) {
    throw ValidationError("profile: expected an object with a 'layers' array");
  }
  std::string name = doc.value("name", std::string("unnamed"));
  std::vector<ModelProfile::Layer> layers;
  layers.reserve(doc["layers"].size());
  for (const auto& entry : doc["layers"]) {
    if (!entry.is_object() || !entry.contains("size") || !entry.contains("compute_ms")) {
      throw ValidationError("profile: every layer needs 'size' and 'compute_ms'");
    }
    const auto& size = entry["size"];
    const auto& compute = entry["compute_ms"];
    if (!size.is_number_integer() || !compute.is_number()) {
      throw ValidationError("profile: 'size' must be an integer, 'compute_ms' a number");
    }
    if (size.get<std::int64_t>() <= 0) {
      throw ValidationError("profile: zero-size tensor at layer " +
                            std::to_string(layers.size()));
    }
    const double ms = compute.get<double>();
    if (ms < 0.0) {
      throw ValidationError("profile: negative compute time at layer " +
                            std::to_string(layers.size()));
    }
    layers.push_back({size.get<std::uint64_t>(), ms});
  }
  if (layers.empty()) throw ValidationError("profile: no layers");
  return ModelProfile(std::move(name), layers);
}

ModelProfile load_profile_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw RuntimeFailure("cannot open profile " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return load_profile(buf.str());
}

std::string dump_profile(const ModelProfile& profile) {
  nlohmann::json doc;
  doc["name"] = profile.name();
  doc["layers"] = nlohmann::json::array();
  for (const auto& l : profile.layers()) {
    doc["layers"].push_back({{"size", l.size}, {"compute_ms", l.compute_ms}});
  }
  return doc.dump(1);
}

namespace {

void check(const Distribution& d, bool positive, const char* what) {
  const bool finite = std::isfinite(d.lo) && std::isfinite(d.hi);
  const bool ordered = d.kind == Distribution::Kind::kConstant || d.lo <= d.hi;
  const bool sign_ok = positive ? d.lo > 0.0 : d.lo >= 0.0;
  if (!finite || !ordered || !sign_ok) {
    throw ValidationError(std::string("synth_profile: invalid ") + what + " distribution");
  }
}

double draw(const Distribution& d, SplitMix& rng) {
  switch (d.kind) {
    case Distribution::Kind::kConstant:
      return d.lo;
    case Distribution::Kind::kUniform:
      return rng.uniform(d.lo, d.hi);
    case Distribution::Kind::kLogUniform:
      return std::exp(rng.uniform(std::log(d.lo), std::log(d.hi)));
  }
  return d.lo;
}

}  // namespace

ModelProfile synth_profile(std::size_t n_tensors, const Distribution& sizes,
                           const Distribution& compute, std::uint64_t seed,
                           std::string name) {
  if (n_tensors == 0) throw ValidationError("synth_profile: n_tensors must be >= 1");
  check(sizes, true, "size");
  check(compute, false, "compute");
  if (compute.kind == Distribution::Kind::kLogUniform && compute.lo <= 0.0) {
    throw ValidationError("synth_profile: log-uniform bounds must be positive");
  }
  SplitMix size_rng(mix_key(seed, 1));
  SplitMix compute_rng(mix_key(seed, 2));
  std::vector<ModelProfile::Layer> layers(n_tensors);
  for (auto& l : layers) {
    l.size = static_cast<std::uint64_t>(std::max(1.0, std::round(draw(sizes, size_rng))));
    l.compute_ms = draw(compute, compute_rng);
  }
  return ModelProfile(std::move(name), layers);
}

Partition::Partition(std::size_t n_tensors, std::vector<std::size_t> boundaries)
    : n_(n_tensors), boundaries_(std::move(boundaries)) {
  if (n_ == 0) throw ValidationError("partition: at least one tensor required");
  std::size_t prev = 0;
  for (std::size_t b : boundaries_) {
    if (b <= prev || b >= n_) {
      throw ValidationError("partition: boundaries must be strictly increasing in [1, N-1]");
    }
    prev = b;
  }
}

Partition Partition::single(std::size_t n_tensors) { return Partition(n_tensors, {}); }

Partition Partition::layer_wise(std::size_t n_tensors) {
  std::vector<std::size_t> cuts;
  for (std::size_t b = 1; b < n_tensors; ++b) cuts.push_back(b);
  return Partition(n_tensors, std::move(cuts));
}

Partition Partition::from_counts(std::span<const std::size_t> counts) {
  std::vector<std::size_t> cuts;
  std::size_t pos = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] == 0) throw ValidationError("partition: empty group");
    pos += counts[i];
    if (i + 1 < counts.size()) cuts.push_back(pos);
  }
  return Partition(pos, std::move(cuts));
}

std::pair<std::size_t, std::size_t> Partition::group_range(std::size_t g) const {
  if (g >= num_groups()) throw ValidationError("partition: group index out of range");
  const std::size_t first = g == 0 ? 0 : boundaries_[g - 1];
  const std::size_t last = g == boundaries_.size() ? n_ : boundaries_[g];
  return {first, last};
}

std::vector<std::size_t> Partition::group_counts() const {
  std::vector<std::size_t> counts;
  counts.reserve(num_groups());
  for (std::size_t g = 0; g < num_groups(); ++g) {
    auto [first, last] = group_range(g);
    counts.push_back(last - first);
  }
  return counts;
}

std::vector<std::uint64_t> Partition::group_sizes(const ModelProfile& profile) const {
  if (profile.num_tensors() != n_) {
    throw ValidationError("partition covers " + std::to_string(n_) +
                          " tensors but the profile has " +
                          std::to_string(profile.num_tensors()));
  }
  std::vector<std::uint64_t> sizes;
  sizes.reserve(num_groups());
  for (std::size_t g = 0; g < num_groups(); ++g) {
    auto [first, last] = group_range(g);
    std::uint64_t s = 0;
    for (std::size_t i = first; i < last; ++i) s += profile.layers()[i].size;
    sizes.push_back(s);
  }
  return sizes;
}

std::string Partition::to_string() const {
  std::string out = "[";
  const auto counts = group_counts();
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (i) out += '|';
    out += std::to_string(counts[i]);
  }
  return out + "]";
}

std::size_t PartitionHash::operator()(const Partition& p) const noexcept {
  std::uint64_t h = splitmix64(p.num_tensors());
  for (std::size_t b : p.boundaries()) h = mix_key(h, b);
  return static_cast<std::size_t>(h);
}

std::uint64_t count_partitions(std::size_t n, std::optional<std::size_t> y) {
  if (n == 0) throw ValidationError("count_partitions: N must be >= 1");
  if (!y) {
    if (n - 1 >= 64) {
      throw OverflowError("count_partitions: 2^" + std::to_string(n - 1) +
                          " does not fit in 64 bits");
    }
    return std::uint64_t{1} << (n - 1);
  }
  if (*y < 1 || *y > n) throw ValidationError("count_partitions: need 1 <= y <= N");
  // C(n-1, k) by the multiplicative formula; each prefix is itself a binomial
  // coefficient so the division is exact.
  const std::uint64_t m = n - 1;
  std::uint64_t k = *y - 1;
  if (k > m - k) k = m - k;
  uint128_t c = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    c = c * (m - k + i) / i;
    if (c > std::numeric_limits<std::uint64_t>::max()) {
      throw OverflowError("count_partitions: C(" + std::to_string(m) + ", " +
                          std::to_string(*y - 1) + ") does not fit in 64 bits");
    }
  }
  return static_cast<std::uint64_t>(c);
}

std::uint64_t count_partitions_up_to(std::size_t n, std::size_t y_max) {
  y_max = std::min(y_max, n);
  std::uint64_t total = 0;
  for (std::size_t y = 1; y <= y_max; ++y) {
    const std::uint64_t c = count_partitions(n, y);
    if (total > std::numeric_limits<std::uint64_t>::max() - c) {
      throw OverflowError("count_partitions_up_to: overflow");
    }
    total += c;
  }
  return total;
}

std::size_t enumeration_guard() {
  if (const char* env = std::getenv("MERGESCHED_GUARD_N")) {
    char* end = nullptr;
    const unsigned long v = std::strtoul(env, &end, 10);
    if (end == env || *end != '\0' || v < 1 || v > 64) {
      throw ValidationError("MERGESCHED_GUARD_N must be an integer in [1, 64], got '" +
                            std::string(env) + "'");
    }
    return static_cast<std::size_t>(v);
  }
  return 24;
}

PartitionEnumerator::PartitionEnumerator(std::size_t n_tensors,
                                         std::optional<std::size_t> y_max,
                                         std::optional<std::size_t> guard)
    : n_(n_tensors), y_max_(std::min(y_max.value_or(n_tensors), n_tensors)) {
  if (n_ == 0) throw ValidationError("enumerate_partitions: N must be >= 1");
  if (y_max_ == 0) throw ValidationError("enumerate_partitions: y_max must be >= 1");
  // The guard bounds the stream length rather than N itself, so restricted
  // enumerations (small y_max) stay available on large models.
  const std::size_t g = guard.value_or(enumeration_guard());
  if (g < 1) throw ValidationError("enumerate_partitions: guard must be >= 1");
  const std::uint64_t limit =
      g - 1 >= 64 ? std::numeric_limits<std::uint64_t>::max() : std::uint64_t{1} << (g - 1);
  std::uint64_t count = 0;
  try {
    count = count_partitions_up_to(n_, y_max_);
  } catch (const OverflowError&) {
    count = std::numeric_limits<std::uint64_t>::max();
  }
  if (count > limit) {
    throw RuntimeFailure("enumerate_partitions: " + std::to_string(n_) +
                         " tensors exceed the enumeration guard (N <= " +
                         std::to_string(g) + "); set MERGESCHED_GUARD_N to override");
  }
}

bool PartitionEnumerator::advance() {
  // Next (y-1)-combination of [1, N-1] in lexicographic order.
  const std::size_t k = cuts_.size();
  for (std::size_t i = k; i-- > 0;) {
    if (cuts_[i] < n_ - k + i) {
      ++cuts_[i];
      for (std::size_t j = i + 1; j < k; ++j) cuts_[j] = cuts_[j - 1] + 1;
      return true;
    }
  }
  if (y_ >= y_max_) return false;
  ++y_;
  cuts_.resize(y_ - 1);
  for (std::size_t j = 0; j < cuts_.size(); ++j) cuts_[j] = j + 1;
  return true;
}

std::optional<Partition> PartitionEnumerator::next() {
  if (done_) return std::nullopt;
  if (!started_) {
    started_ = true;
  } else if (!advance()) {
    done_ = true;
    return std::nullopt;
  }
  return Partition(n_, cuts_);
}

PartitionEnumerator enumerate_partitions(const ModelProfile& profile,
                                         std::optional<std::size_t> y_max,
                                         std::optional<std::size_t> guard) {
  return PartitionEnumerator(profile.num_tensors(), y_max, guard);
}

}  // namespace mergesched
