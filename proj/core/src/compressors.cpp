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

#include "mergesched/compressors.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <numeric>

#include "half.hpp"
#include "mergesched/error.hpp"

namespace mergesched {

namespace {

constexpr std::array<std::string_view, kNumAlgorithms> kNames = {
    "identity", "fp16",      "topk",   "randk",  "dgc_lite", "threshold", "qsgd",
    "signsgd",  "efsignsgd", "onebit", "signum", "terngrad", "int8"};

constexpr std::array<Algorithm, kNumAlgorithms> kAll = {
    Algorithm::kIdentity, Algorithm::kFp16,      Algorithm::kTopK,    Algorithm::kRandK,
    Algorithm::kDgcLite,  Algorithm::kThreshold, Algorithm::kQsgd,    Algorithm::kSignSgd,
    Algorithm::kEfSignSgd, Algorithm::kOneBit,   Algorithm::kSignum,  Algorithm::kTernGrad,
    Algorithm::kInt8};

std::size_t num_buckets(std::size_t len, std::uint32_t bucket) {
  return (len + bucket - 1) / bucket;
}

// Smallest float >= v (v >= 0), so |x| <= scaler holds after rounding.
float round_up_float(double v) {
  float f = static_cast<float>(v);
  if (static_cast<double>(f) < v) f = std::nextafter(f, INFINITY);
  return f;
}

class BitWriter {
 public:
  explicit BitWriter(std::vector<std::uint8_t>& out, std::size_t total_bits) : out_(out) {
    out_.assign((total_bits + 7) / 8, 0);
  }
  void put(std::size_t pos, std::uint32_t code, std::uint32_t width) {
    for (std::uint32_t b = 0; b < width; ++b, ++pos) {
      if ((code >> b) & 1u) out_[pos >> 3] |= static_cast<std::uint8_t>(1u << (pos & 7));
    }
  }

 private:
  std::vector<std::uint8_t>& out_;
};

std::uint32_t get_bits(std::span<const std::uint8_t> in, std::size_t pos, std::uint32_t width) {
  std::uint32_t code = 0;
  for (std::uint32_t b = 0; b < width; ++b, ++pos) {
    code |= static_cast<std::uint32_t>((in[pos >> 3] >> (pos & 7)) & 1u) << b;
  }
  return code;
}

[[noreturn]] void corrupt(const std::string& why) {
  throw ValidationError("corrupt payload: " + why);
}

// Indices of the k largest |v|, ties broken towards the smaller index,
// returned in increasing order.
std::vector<std::uint32_t> top_k_indices(std::span<const double> v, std::size_t k) {
  std::vector<std::uint32_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0u);
  auto before = [&](std::uint32_t a, std::uint32_t b) {
    const double ma = std::fabs(v[a]);
    const double mb = std::fabs(v[b]);
    return ma != mb ? ma > mb : a < b;
  };
  if (k < idx.size()) {
    std::nth_element(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(),
                     before);
    idx.resize(k);
  }
  std::sort(idx.begin(), idx.end());
  return idx;
}

void sparse_payload(CompressedPayload& p, std::span<const double> v,
                    std::vector<std::uint32_t> idx, double scale = 1.0) {
  p.values.reserve(idx.size());
  for (std::uint32_t i : idx) p.values.push_back(static_cast<float>(v[i] * scale));
  p.indices = std::move(idx);
}

// Encodes an already error-corrected buffer.
CompressedPayload encode_corrected(const CompressorSpec& spec, std::span<const double> c,
                                   const StreamKey& key) {
  CompressedPayload p;
  p.algorithm = spec.algorithm;
  p.original_len = c.size();
  const std::size_t n = c.size();
  const std::uint32_t bucket = spec.bucket_size;
  const CounterRng rng(key.hash());

  switch (spec.algorithm) {
    case Algorithm::kIdentity:
      p.values.assign(c.begin(), c.end());
      break;

    case Algorithm::kFp16: {
      p.bits.resize(2 * n);
      for (std::size_t i = 0; i < n; ++i) {
        const std::uint16_t h = detail::float_to_half(static_cast<float>(c[i]));
        p.bits[2 * i] = static_cast<std::uint8_t>(h & 0xFF);
        p.bits[2 * i + 1] = static_cast<std::uint8_t>(h >> 8);
      }
      break;
    }

    case Algorithm::kTopK:
    case Algorithm::kDgcLite:
      sparse_payload(p, c, top_k_indices(c, kept_count(spec.sparsity, n)));
      break;

    case Algorithm::kRandK: {
      const std::size_t k = kept_count(spec.sparsity, n);
      std::vector<std::uint32_t> perm(n);
      std::iota(perm.begin(), perm.end(), 0u);
      for (std::size_t i = 0; i < k; ++i) {
        const std::size_t j = i + rng.below(i, n - i);
        std::swap(perm[i], perm[j]);
      }
      perm.resize(k);
      std::sort(perm.begin(), perm.end());
      const double scale =
          spec.unbiased_scaling ? static_cast<double>(n) / static_cast<double>(k) : 1.0;
      if (spec.unbiased_scaling) p.flags |= CompressedPayload::kFlagScaled;
      sparse_payload(p, c, std::move(perm), scale);
      break;
    }

    case Algorithm::kThreshold: {
      std::vector<std::uint32_t> idx;
      for (std::size_t i = 0; i < n; ++i) {
        if (std::fabs(c[i]) >= spec.threshold) idx.push_back(static_cast<std::uint32_t>(i));
      }
      if (idx.empty()) idx = top_k_indices(c, 1);
      sparse_payload(p, c, std::move(idx));
      break;
    }

    case Algorithm::kQsgd: {
      const std::uint32_t width = code_bits(spec);
      const double s = spec.levels - 1;
      BitWriter w(p.bits, n * width);
      for (std::size_t b = 0; b * bucket < n; ++b) {
        const std::size_t lo = b * bucket;
        const std::size_t hi = std::min(n, lo + bucket);
        double sq = 0.0;
        for (std::size_t i = lo; i < hi; ++i) sq += c[i] * c[i];
        const float norm = round_up_float(std::sqrt(sq));
        p.values.push_back(norm);
        for (std::size_t i = lo; i < hi; ++i) {
          std::uint32_t level = 0;
          if (norm > 0.0f) {
            const double r = std::fabs(c[i]) / norm * s;
            const double fl = std::floor(r);
            level = static_cast<std::uint32_t>(fl) + (rng.uniform(i) < r - fl ? 1u : 0u);
            level = std::min<std::uint32_t>(level, spec.levels - 1);
          }
          const std::uint32_t sign = c[i] < 0.0 ? 1u : 0u;
          w.put(i * width, sign | (level << 1), width);
        }
      }
      break;
    }

    case Algorithm::kSignSgd:
    case Algorithm::kEfSignSgd:
    case Algorithm::kOneBit:
    case Algorithm::kSignum: {
      BitWriter w(p.bits, n);
      for (std::size_t i = 0; i < n; ++i) w.put(i, c[i] < 0.0 ? 1u : 0u, 1);
      if (spec.algorithm == Algorithm::kSignSgd) {
        double l1 = 0.0;
        for (double v : c) l1 += std::fabs(v);
        p.values.push_back(static_cast<float>(l1 / static_cast<double>(n)));
      } else if (spec.algorithm != Algorithm::kSignum) {
        for (std::size_t lo = 0; lo < n; lo += bucket) {
          const std::size_t hi = std::min(n, lo + bucket);
          if (spec.algorithm == Algorithm::kEfSignSgd) {
            double l1 = 0.0;
            for (std::size_t i = lo; i < hi; ++i) l1 += std::fabs(c[i]);
            p.values.push_back(static_cast<float>(l1 / static_cast<double>(hi - lo)));
          } else {
            double pos = 0.0, neg = 0.0;
            std::size_t npos = 0, nneg = 0;
            for (std::size_t i = lo; i < hi; ++i) {
              if (c[i] < 0.0) {
                neg += c[i];
                ++nneg;
              } else {
                pos += c[i];
                ++npos;
              }
            }
            p.values.push_back(npos ? static_cast<float>(pos / npos) : 0.0f);
            p.values.push_back(nneg ? static_cast<float>(neg / nneg) : 0.0f);
          }
        }
      }
      break;
    }

    case Algorithm::kTernGrad: {
      BitWriter w(p.bits, 2 * n);
      for (std::size_t lo = 0; lo < n; lo += bucket) {
        const std::size_t hi = std::min(n, lo + bucket);
        double mx = 0.0;
        for (std::size_t i = lo; i < hi; ++i) mx = std::max(mx, std::fabs(c[i]));
        const float scale = round_up_float(mx);
        p.values.push_back(scale);
        for (std::size_t i = lo; i < hi; ++i) {
          std::uint32_t code = 0;
          if (scale > 0.0f && rng.uniform(i) < std::fabs(c[i]) / scale) {
            code = c[i] < 0.0 ? 2u : 1u;
          }
          w.put(2 * i, code, 2);
        }
      }
      break;
    }

    case Algorithm::kInt8: {
      p.bits.resize(n);
      for (std::size_t lo = 0; lo < n; lo += bucket) {
        const std::size_t hi = std::min(n, lo + bucket);
        double mx = 0.0;
        for (std::size_t i = lo; i < hi; ++i) mx = std::max(mx, std::fabs(c[i]));
        const float scale = round_up_float(mx);
        p.values.push_back(scale);
        for (std::size_t i = lo; i < hi; ++i) {
          const double q = scale > 0.0f ? std::round(c[i] / scale * 127.0) : 0.0;
          const auto code = static_cast<std::int8_t>(std::clamp(q, -127.0, 127.0));
          p.bits[i] = static_cast<std::uint8_t>(code);
        }
      }
      break;
    }
  }
  return p;
}

void expect_values(const CompressedPayload& p, std::size_t count) {
  if (p.values.size() != count) corrupt("expected " + std::to_string(count) + " values");
}

void expect_bits(const CompressedPayload& p, std::size_t total_bits) {
  if (p.bits.size() != (total_bits + 7) / 8) corrupt("bit section length mismatch");
}

}  // namespace

std::string_view algorithm_name(Algorithm a) {
  const auto i = static_cast<std::size_t>(a);
  if (i >= kNumAlgorithms) return "unknown";
  return kNames[i];
}

Algorithm parse_algorithm(std::string_view name) {
  if (name == "fp32" || name == "dense") return Algorithm::kIdentity;
  if (name == "dgc") return Algorithm::kDgcLite;
  for (std::size_t i = 0; i < kNumAlgorithms; ++i) {
    if (kNames[i] == name) return kAll[i];
  }
  throw ValidationError("unknown compression algorithm '" + std::string(name) + "'");
}

std::span<const Algorithm> all_algorithms() { return kAll; }

bool is_sparsifier(Algorithm a) {
  return a == Algorithm::kTopK || a == Algorithm::kRandK || a == Algorithm::kDgcLite ||
         a == Algorithm::kThreshold;
}

bool is_stochastic(Algorithm a) {
  return a == Algorithm::kRandK || a == Algorithm::kQsgd || a == Algorithm::kTernGrad;
}

bool default_error_feedback(Algorithm a) {
  return a == Algorithm::kTopK || a == Algorithm::kDgcLite || a == Algorithm::kEfSignSgd ||
         a == Algorithm::kOneBit;
}

CompressorSpec CompressorSpec::make(Algorithm a) {
  CompressorSpec s;
  s.algorithm = a;
  s.error_feedback = default_error_feedback(a);
  return s;
}

void CompressorSpec::validate() const {
  if (static_cast<std::size_t>(algorithm) >= kNumAlgorithms) {
    throw ValidationError("compressor: unknown algorithm id");
  }
  if (!(sparsity >= 0.0 && sparsity < 1.0)) {
    throw ValidationError("compressor: sparsity must be in [0, 1)");
  }
  if (levels < 2) throw ValidationError("compressor: levels must be >= 2");
  if (levels > (1u << 30)) throw ValidationError("compressor: levels too large");
  if (bucket_size < 1) throw ValidationError("compressor: bucket_size must be >= 1");
  if (!(threshold >= 0.0) || !std::isfinite(threshold)) {
    throw ValidationError("compressor: threshold must be finite and >= 0");
  }
  if (!(momentum >= 0.0 && momentum < 1.0)) {
    throw ValidationError("compressor: momentum must be in [0, 1)");
  }
}

std::size_t kept_count(double sparsity, std::size_t len) {
  // The small slack absorbs representation error such as (1 - 0.99) * 1e4
  // evaluating to 100.00000000000009.
  const double raw = (1.0 - sparsity) * static_cast<double>(len);
  const auto k = static_cast<std::size_t>(std::ceil(raw - 1e-9 * std::max(1.0, raw)));
  return std::clamp<std::size_t>(k, 1, std::max<std::size_t>(len, 1));
}

std::uint32_t code_bits(const CompressorSpec& spec) {
  switch (spec.algorithm) {
    case Algorithm::kFp16:
      return 16;
    case Algorithm::kQsgd:
      return static_cast<std::uint32_t>(std::bit_width(spec.levels - 1)) + 1;
    case Algorithm::kSignSgd:
    case Algorithm::kEfSignSgd:
    case Algorithm::kOneBit:
    case Algorithm::kSignum:
      return 1;
    case Algorithm::kTernGrad:
      return 2;
    case Algorithm::kInt8:
      return 8;
    default:
      return 0;
  }
}

CompressedPayload encode(const CompressorSpec& spec, std::span<const float> gradient,
                         std::optional<ResidualView> state, const StreamKey& key) {
  spec.validate();
  const std::size_t n = gradient.size();
  if (n == 0) throw ValidationError("encode: empty gradient");
  if (n > std::numeric_limits<std::uint32_t>::max()) {
    throw ValidationError("encode: gradient longer than 2^32 - 1 elements");
  }
  for (float g : gradient) {
    if (!std::isfinite(g)) throw ValidationError("encode: non-finite gradient element");
  }
  const bool needs_momentum =
      spec.algorithm == Algorithm::kSignum ||
      (spec.algorithm == Algorithm::kDgcLite && spec.momentum_correction);
  if (state) {
    if (spec.error_feedback && state->residual.size() != n) {
      throw ValidationError("encode: residual length " + std::to_string(state->residual.size()) +
                            " does not match gradient length " + std::to_string(n));
    }
    if (needs_momentum && state->momentum.size() != n) {
      throw ValidationError("encode: momentum length does not match gradient length");
    }
  } else if (spec.error_feedback) {
    throw ValidationError("encode: error feedback requires a residual state");
  }

  std::vector<double> corrected(gradient.begin(), gradient.end());
  std::vector<double> scratch_momentum;
  std::span<double> momentum;
  if (needs_momentum) {
    if (state) {
      momentum = state->momentum;
    } else {
      scratch_momentum.assign(n, 0.0);
      momentum = scratch_momentum;
    }
    // Momentum is stored at fp32 precision.
    const double beta = spec.momentum;
    for (std::size_t i = 0; i < n; ++i) {
      const double m = spec.algorithm == Algorithm::kSignum
                           ? beta * momentum[i] + (1.0 - beta) * corrected[i]
                           : beta * momentum[i] + corrected[i];
      momentum[i] = static_cast<float>(m);
      corrected[i] = momentum[i];
    }
  }
  if (spec.error_feedback) {
    for (std::size_t i = 0; i < n; ++i) corrected[i] += state->residual[i];
  }

  CompressedPayload payload = encode_corrected(spec, corrected, key);
  if (spec.error_feedback) {
    payload.flags |= CompressedPayload::kFlagErrorFeedback;
    const std::vector<float> sent = decode(spec, payload);
    for (std::size_t i = 0; i < n; ++i) {
      state->residual[i] = corrected[i] - static_cast<double>(sent[i]);
    }
  }
  if (spec.algorithm == Algorithm::kDgcLite && spec.momentum_correction && state) {
    // Momentum factor masking: transmitted coordinates restart their momentum.
    for (std::uint32_t i : payload.indices) momentum[i] = 0.0;
  }
  return payload;
}

CompressedPayload encode(const CompressorSpec& spec, std::span<const float> gradient,
                         const StreamKey& key) {
  if (spec.error_feedback) {
    ResidualState scratch(gradient.size());
    return encode(spec, gradient, ResidualView(scratch), key);
  }
  return encode(spec, gradient, std::nullopt, key);
}

std::vector<float> decode(const CompressorSpec& spec, const CompressedPayload& p) {
  if (p.algorithm != spec.algorithm) corrupt("algorithm does not match the compressor spec");
  const std::size_t n = p.original_len;
  const std::uint32_t bucket = spec.bucket_size;
  const std::size_t nb = num_buckets(n, bucket);
  std::vector<float> out(n, 0.0f);

  switch (p.algorithm) {
    case Algorithm::kIdentity:
      expect_values(p, n);
      std::copy(p.values.begin(), p.values.end(), out.begin());
      break;

    case Algorithm::kFp16:
      expect_bits(p, 16 * n);
      for (std::size_t i = 0; i < n; ++i) {
        const auto h = static_cast<std::uint16_t>(p.bits[2 * i] | (p.bits[2 * i + 1] << 8));
        out[i] = detail::half_to_float(h);
      }
      break;

    case Algorithm::kTopK:
    case Algorithm::kRandK:
    case Algorithm::kDgcLite:
    case Algorithm::kThreshold: {
      if (p.indices.size() != p.values.size()) corrupt("index/value count mismatch");
      std::int64_t prev = -1;
      for (std::size_t j = 0; j < p.indices.size(); ++j) {
        const std::uint32_t i = p.indices[j];
        if (static_cast<std::int64_t>(i) <= prev || i >= n) {
          corrupt("indices must be strictly increasing and below original_len");
        }
        prev = i;
        out[i] = p.values[j];
      }
      break;
    }

    case Algorithm::kQsgd: {
      const std::uint32_t width = code_bits(spec);
      expect_bits(p, n * width);
      expect_values(p, nb);
      const double s = spec.levels - 1;
      for (std::size_t i = 0; i < n; ++i) {
        const std::uint32_t code = get_bits(p.bits, i * width, width);
        const std::uint32_t level = code >> 1;
        if (level > spec.levels - 1) corrupt("qsgd level out of range");
        const double mag = static_cast<double>(p.values[i / bucket]) * level / s;
        out[i] = static_cast<float>((code & 1u) ? -mag : mag);
      }
      break;
    }

    case Algorithm::kSignSgd:
      expect_bits(p, n);
      expect_values(p, 1);
      for (std::size_t i = 0; i < n; ++i) {
        out[i] = get_bits(p.bits, i, 1) ? -p.values[0] : p.values[0];
      }
      break;

    case Algorithm::kEfSignSgd:
      expect_bits(p, n);
      expect_values(p, nb);
      for (std::size_t i = 0; i < n; ++i) {
        const float s = p.values[i / bucket];
        out[i] = get_bits(p.bits, i, 1) ? -s : s;
      }
      break;

    case Algorithm::kOneBit:
      expect_bits(p, n);
      expect_values(p, 2 * nb);
      for (std::size_t i = 0; i < n; ++i) {
        out[i] = p.values[2 * (i / bucket) + get_bits(p.bits, i, 1)];
      }
      break;

    case Algorithm::kSignum:
      expect_bits(p, n);
      expect_values(p, 0);
      for (std::size_t i = 0; i < n; ++i) out[i] = get_bits(p.bits, i, 1) ? -1.0f : 1.0f;
      break;

    case Algorithm::kTernGrad:
      expect_bits(p, 2 * n);
      expect_values(p, nb);
      for (std::size_t i = 0; i < n; ++i) {
        const std::uint32_t code = get_bits(p.bits, 2 * i, 2);
        if (code == 3) corrupt("terngrad code 3 is unused");
        const float s = p.values[i / bucket];
        out[i] = code == 0 ? 0.0f : (code == 1 ? s : -s);
      }
      break;

    case Algorithm::kInt8:
      expect_bits(p, 8 * n);
      expect_values(p, nb);
      for (std::size_t i = 0; i < n; ++i) {
        const auto q = static_cast<std::int8_t>(p.bits[i]);
        if (q == -128) corrupt("int8 code -128 is unused");
        out[i] = static_cast<float>(static_cast<double>(p.values[i / bucket]) * q / 127.0);
      }
      break;
  }
  return out;
}

void decode_accumulate(const CompressorSpec& spec, const CompressedPayload& payload,
                       std::span<double> out) {
  if (out.size() != payload.original_len) {
    throw ValidationError("decode_accumulate: output length mismatch");
  }
  const std::vector<float> d = decode(spec, payload);
  for (std::size_t i = 0; i < d.size(); ++i) out[i] += d[i];
}

std::vector<float> aggregate(const CompressorSpec& spec,
                             std::span<const CompressedPayload> payloads) {
  if (payloads.empty()) throw ValidationError("aggregate: no payloads");
  const std::uint64_t len = payloads.front().original_len;
  for (const auto& p : payloads) {
    if (p.algorithm != payloads.front().algorithm || p.original_len != len) {
      throw ValidationError("aggregate: payloads mix algorithms or lengths");
    }
  }
  std::vector<double> sum(len, 0.0);
  for (const auto& p : payloads) decode_accumulate(spec, p, sum);
  std::vector<float> mean(len);
  const double n = static_cast<double>(payloads.size());
  for (std::size_t i = 0; i < len; ++i) mean[i] = static_cast<float>(sum[i] / n);
  return mean;
}

double empirical_error_bound(const CompressorSpec& spec,
                             std::span<const std::vector<float>> samples,
                             std::size_t trials, std::uint64_t seed) {
  CompressorSpec plain = spec;
  plain.error_feedback = false;
  const std::size_t runs = is_stochastic(spec.algorithm) ? std::max<std::size_t>(trials, 1) : 1;
  double worst = 0.0;
  for (std::size_t s = 0; s < samples.size(); ++s) {
    const auto& x = samples[s];
    double norm2 = 0.0;
    for (float v : x) norm2 += static_cast<double>(v) * v;
    if (norm2 == 0.0) throw ValidationError("empirical_error_bound: zero-norm sample");
    double acc = 0.0;
    for (std::size_t t = 0; t < runs; ++t) {
      const StreamKey key{seed, 0, t, s};
      const std::vector<float> d = decode(plain, encode(plain, x, key));
      double err = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) {
        const double e = static_cast<double>(d[i]) - x[i];
        err += e * e;
      }
      acc += err / norm2;
    }
    worst = std::max(worst, acc / static_cast<double>(runs));
  }
  return worst;
}

std::size_t payload_bytes(const CompressorSpec& spec, std::uint64_t group_size) {
  const std::uint64_t n = group_size;
  const std::uint64_t nb = num_buckets(n, spec.bucket_size);
  const std::size_t h = CompressedPayload::kHeaderBytes;
  switch (spec.algorithm) {
    case Algorithm::kIdentity:
      return h + 4 * n;
    case Algorithm::kFp16:
      return h + 2 * n;
    case Algorithm::kTopK:
    case Algorithm::kRandK:
    case Algorithm::kDgcLite:
    case Algorithm::kThreshold:
      return h + 8 * kept_count(spec.sparsity, n);
    case Algorithm::kQsgd:
      return h + 4 * nb + (n * code_bits(spec) + 7) / 8;
    case Algorithm::kSignSgd:
      return h + 4 + (n + 7) / 8;
    case Algorithm::kEfSignSgd:
      return h + 4 * nb + (n + 7) / 8;
    case Algorithm::kOneBit:
      return h + 8 * nb + (n + 7) / 8;
    case Algorithm::kSignum:
      return h + (n + 7) / 8;
    case Algorithm::kTernGrad:
      return h + 4 * nb + (2 * n + 7) / 8;
    case Algorithm::kInt8:
      return h + 4 * nb + n;
  }
  return h;
}

namespace {

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T v) {
  for (std::size_t b = 0; b < sizeof(T); ++b) {
    out.push_back(static_cast<std::uint8_t>((static_cast<std::uint64_t>(v) >> (8 * b)) & 0xFF));
  }
}

template <typename T>
T get_le(std::span<const std::uint8_t> in, std::size_t& pos) {
  std::uint64_t v = 0;
  for (std::size_t b = 0; b < sizeof(T); ++b) v |= static_cast<std::uint64_t>(in[pos + b]) << (8 * b);
  pos += sizeof(T);
  return static_cast<T>(v);
}

}  // namespace

std::vector<std::uint8_t> serialize(const CompressedPayload& p) {
  std::vector<std::uint8_t> out;
  out.reserve(p.byte_size());
  put_le<std::uint8_t>(out, static_cast<std::uint8_t>(p.algorithm));
  put_le<std::uint8_t>(out, p.flags);
  put_le<std::uint64_t>(out, p.original_len);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(p.indices.size()));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(p.values.size()));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(p.bits.size()));
  for (std::uint32_t i : p.indices) put_le<std::uint32_t>(out, i);
  for (float v : p.values) put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(v));
  out.insert(out.end(), p.bits.begin(), p.bits.end());
  return out;
}

CompressedPayload deserialize(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < CompressedPayload::kHeaderBytes) corrupt("truncated header");
  std::size_t pos = 0;
  CompressedPayload p;
  const auto algo = get_le<std::uint8_t>(bytes, pos);
  if (algo >= kNumAlgorithms) corrupt("unknown algorithm id " + std::to_string(algo));
  p.algorithm = static_cast<Algorithm>(algo);
  p.flags = get_le<std::uint8_t>(bytes, pos);
  p.original_len = get_le<std::uint64_t>(bytes, pos);
  const auto n_idx = get_le<std::uint32_t>(bytes, pos);
  const auto n_val = get_le<std::uint32_t>(bytes, pos);
  const auto n_bits = get_le<std::uint32_t>(bytes, pos);
  const std::uint64_t expected = CompressedPayload::kHeaderBytes + 4ull * n_idx +
                                 4ull * n_val + static_cast<std::uint64_t>(n_bits);
  if (bytes.size() != expected) corrupt("length does not match section sizes");
  p.indices.resize(n_idx);
  for (auto& i : p.indices) {
    i = get_le<std::uint32_t>(bytes, pos);
    if (i >= p.original_len) corrupt("index out of range");
  }
  p.values.resize(n_val);
  for (auto& v : p.values) v = std::bit_cast<float>(get_le<std::uint32_t>(bytes, pos));
  p.bits.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos), bytes.end());
  return p;
}

}  // namespace mergesched
