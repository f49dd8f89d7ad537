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
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mergesched/rng.hpp"

namespace mergesched {

enum class Algorithm : std::uint8_t {
  kIdentity = 0,
  kFp16,
  kTopK,
  kRandK,
  kDgcLite,
  kThreshold,
  kQsgd,
  kSignSgd,
  kEfSignSgd,
  kOneBit,
  kSignum,
  kTernGrad,
  kInt8,
};

inline constexpr std::size_t kNumAlgorithms = 13;

std::string_view algorithm_name(Algorithm a);
// Accepts canonical names plus the aliases "fp32" (identity) and "dgc".
Algorithm parse_algorithm(std::string_view name);
std::span<const Algorithm> all_algorithms();

bool is_sparsifier(Algorithm a);
bool is_stochastic(Algorithm a);
bool default_error_feedback(Algorithm a);

struct CompressorSpec {
  Algorithm algorithm = Algorithm::kIdentity;
  double sparsity = 0.99;            // topk, randk, dgc_lite, threshold (expected)
  std::uint32_t levels = 256;        // qsgd quantization levels per sign
  std::uint32_t bucket_size = 512;   // elements per scaler bucket
  bool error_feedback = false;
  bool unbiased_scaling = false;     // randk: multiply kept values by len/k
  double threshold = 1e-3;           // threshold: keep |g| >= threshold
  double momentum = 0.9;             // signum and dgc_lite momentum factor
  bool momentum_correction = false;  // dgc_lite

  // Spec for 'a' with that algorithm's default error-feedback setting.
  static CompressorSpec make(Algorithm a);

  // Throws ValidationError when a field is out of range.
  void validate() const;

  bool operator==(const CompressorSpec&) const = default;
};

// Wire form of one compressed buffer. Sparsifiers fill indices/values;
// quantizers store per-bucket scalers in values and packed codes in bits.
struct CompressedPayload {
  Algorithm algorithm = Algorithm::kIdentity;
  std::uint8_t flags = 0;
  std::uint64_t original_len = 0;
  std::vector<std::uint32_t> indices;
  std::vector<float> values;
  std::vector<std::uint8_t> bits;

  static constexpr std::uint8_t kFlagScaled = 1;
  static constexpr std::uint8_t kFlagErrorFeedback = 2;

  // Header: algo u8, flags u8, original_len u64, then u32 counts for the
  // index, value and bit sections.
  static constexpr std::size_t kHeaderBytes = 1 + 1 + 8 + 4 + 4 + 4;

  std::size_t byte_size() const {
    return kHeaderBytes + 4 * indices.size() + 4 * values.size() + bits.size();
  }

  bool operator==(const CompressedPayload&) const = default;
};

// Little-endian canonical layout; the result is exactly byte_size() long.
std::vector<std::uint8_t> serialize(const CompressedPayload& payload);
// Throws ValidationError on truncated, oversized, or inconsistent input.
CompressedPayload deserialize(std::span<const std::uint8_t> bytes);

// Error-feedback memory owned by a single (worker, group).
struct ResidualState {
  std::vector<double> residual;
  std::vector<double> momentum;

  explicit ResidualState(std::size_t len = 0) : residual(len, 0.0), momentum(len, 0.0) {}
};

// Non-owning view so one flat per-worker buffer can back every group.
struct ResidualView {
  std::span<double> residual;
  std::span<double> momentum;

  ResidualView() = default;
  ResidualView(std::span<double> r, std::span<double> m) : residual(r), momentum(m) {}
  ResidualView(ResidualState& s) : residual(s.residual), momentum(s.momentum) {}  // NOLINT
};

// Number of elements kept by the top-k style sparsifiers: ceil((1-s)*len),
// never less than 1.
std::size_t kept_count(double sparsity, std::size_t len);

// Compresses 'gradient'. With error feedback the compressor sees
// gradient + residual and the residual becomes corrected - decode(payload).
// Momentum (signum, dgc_lite with correction) lives in state.momentum.
// Deterministic in (spec, gradient, state, key). Throws ValidationError on
// empty or non-finite input and on state length mismatch.
CompressedPayload encode(const CompressorSpec& spec, std::span<const float> gradient,
                         std::optional<ResidualView> state, const StreamKey& key);
CompressedPayload encode(const CompressorSpec& spec, std::span<const float> gradient,
                         const StreamKey& key = {});

std::vector<float> decode(const CompressorSpec& spec, const CompressedPayload& payload);
// Adds decode(payload) into 'out' (length original_len) in double precision.
void decode_accumulate(const CompressorSpec& spec, const CompressedPayload& payload,
                       std::span<double> out);

// Elementwise mean of the decoded payloads, summed in worker order.
std::vector<float> aggregate(const CompressorSpec& spec,
                             std::span<const CompressedPayload> payloads);

// max over samples of E||decode(encode(x)) - x||^2 / ||x||^2, the expectation
// taken over 'trials' seeds for stochastic algorithms. Error feedback is
// disabled for the measurement.
double empirical_error_bound(const CompressorSpec& spec,
                             std::span<const std::vector<float>> samples,
                             std::size_t trials, std::uint64_t seed = 0);

// Serialized size for a group of 'group_size' elements. Exact for
// deterministic layouts; threshold assumes the kept fraction is 1 - sparsity.
std::size_t payload_bytes(const CompressorSpec& spec, std::uint64_t group_size);

// Bits per element of the packed code section (0 for sparsifiers/identity).
std::uint32_t code_bits(const CompressorSpec& spec);

}  // namespace mergesched
