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

#include "mergesched/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mergesched/error.hpp"
#include "mergesched/rng.hpp"

namespace mergesched {

std::size_t Task::num_params() const {
  const auto sizes = tensor_sizes();
  return std::accumulate(sizes.begin(), sizes.end(), std::size_t{0});
}

double Task::loss(std::span<const double> params, std::span<const std::uint32_t> batch) const {
  std::vector<double> scratch(params.size());
  return loss_and_grad(params, batch, scratch);
}

std::unique_ptr<Task> make_task(const TaskSpec& spec) {
  return std::visit(
      [](const auto& s) -> std::unique_ptr<Task> {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, QuadraticSpec>) {
          return std::make_unique<QuadraticTask>(s);
        } else {
          return std::make_unique<BlobsMlpTask>(s);
        }
      },
      spec);
}

QuadraticTask::QuadraticTask(const QuadraticSpec& spec) {
  if (spec.dimension < 1 || spec.tensors < 1 || spec.tensors > spec.dimension) {
    throw ValidationError("quadratic: need 1 <= tensors <= dimension");
  }
  if (!(spec.curvature_min > 0.0) || !(spec.curvature_max >= spec.curvature_min) ||
      !std::isfinite(spec.curvature_max)) {
    throw ValidationError("quadratic: need 0 < curvature_min <= curvature_max");
  }
  for (std::size_t t = 0; t < spec.tensors; ++t) {
    sizes_.push_back(spec.dimension / spec.tensors + (t < spec.dimension % spec.tensors ? 1 : 0));
  }
  SplitMix rng(mix_key(spec.seed, 0x9a));
  curvature_.resize(spec.dimension);
  target_.resize(spec.dimension);
  for (std::size_t j = 0; j < spec.dimension; ++j) {
    curvature_[j] = rng.uniform(spec.curvature_min, spec.curvature_max);
    target_[j] = rng.normal();
  }
}

std::vector<double> QuadraticTask::initial_params() const {
  return std::vector<double>(target_.size(), 0.0);
}

double QuadraticTask::loss_and_grad(std::span<const double> params,
                                    std::span<const std::uint32_t> /*batch*/,
                                    std::span<double> grad) const {
  if (params.size() != target_.size() || grad.size() != target_.size()) {
    throw ValidationError("quadratic: parameter length mismatch");
  }
  double f = 0.0;
  for (std::size_t j = 0; j < params.size(); ++j) {
    const double d = params[j] - target_[j];
    grad[j] = curvature_[j] * d;
    f += 0.5 * curvature_[j] * d * d;
  }
  return f;
}

double QuadraticTask::metric(std::span<const double> params) const {
  double s = 0.0;
  for (std::size_t j = 0; j < params.size(); ++j) {
    const double d = params[j] - target_[j];
    s += d * d;
  }
  return std::sqrt(s);
}

struct BlobsMlpTask::View {
  std::span<const double> b2, w2, b1, w1;
};

BlobsMlpTask::BlobsMlpTask(const BlobsMlpSpec& spec) : spec_(spec) {
  if (spec.features < 1 || spec.classes < 2 || spec.hidden < 1 || spec.samples < spec.classes) {
    throw ValidationError("blobs_mlp: invalid dimensions");
  }
  if (!(spec.separation > 0.0)) throw ValidationError("blobs_mlp: separation must be positive");
  SplitMix rng(mix_key(spec.seed, 0xb1));
  std::vector<double> centers(spec.classes * spec.features);
  for (auto& c : centers) c = spec.separation * rng.normal();
  x_.resize(spec.samples * spec.features);
  y_.resize(spec.samples);
  for (std::size_t i = 0; i < spec.samples; ++i) {
    const auto label = static_cast<std::uint32_t>(i % spec.classes);
    y_[i] = label;
    for (std::size_t f = 0; f < spec.features; ++f) {
      x_[i * spec.features + f] = centers[label * spec.features + f] + rng.normal();
    }
  }
}

std::vector<std::size_t> BlobsMlpTask::tensor_sizes() const {
  return {spec_.classes, spec_.classes * spec_.hidden, spec_.hidden,
          spec_.hidden * spec_.features};
}

std::vector<double> BlobsMlpTask::initial_params() const {
  SplitMix rng(mix_key(spec_.seed, 0x1417));
  std::vector<double> p(num_params(), 0.0);
  const std::size_t c = spec_.classes, h = spec_.hidden, f = spec_.features;
  const double s2 = 1.0 / std::sqrt(static_cast<double>(h));
  const double s1 = 1.0 / std::sqrt(static_cast<double>(f));
  for (std::size_t i = c; i < c + c * h; ++i) p[i] = s2 * rng.normal();
  for (std::size_t i = c + c * h + h; i < p.size(); ++i) p[i] = s1 * rng.normal();
  return p;
}

BlobsMlpTask::View BlobsMlpTask::view(std::span<const double> params) const {
  const std::size_t c = spec_.classes, h = spec_.hidden, f = spec_.features;
  if (params.size() != c + c * h + h + h * f) {
    throw ValidationError("blobs_mlp: parameter length mismatch");
  }
  View v;
  v.b2 = params.subspan(0, c);
  v.w2 = params.subspan(c, c * h);
  v.b1 = params.subspan(c + c * h, h);
  v.w1 = params.subspan(c + c * h + h, h * f);
  return v;
}

void BlobsMlpTask::forward(const View& v, std::size_t sample, std::span<double> hidden,
                           std::span<double> logits) const {
  const std::size_t c = spec_.classes, h = spec_.hidden, f = spec_.features;
  const double* x = &x_[sample * f];
  for (std::size_t j = 0; j < h; ++j) {
    double a = v.b1[j];
    for (std::size_t k = 0; k < f; ++k) a += v.w1[j * f + k] * x[k];
    hidden[j] = std::tanh(a);
  }
  for (std::size_t o = 0; o < c; ++o) {
    double z = v.b2[o];
    for (std::size_t j = 0; j < h; ++j) z += v.w2[o * h + j] * hidden[j];
    logits[o] = z;
  }
}

double BlobsMlpTask::loss_and_grad(std::span<const double> params,
                                   std::span<const std::uint32_t> batch,
                                   std::span<double> grad) const {
  const View v = view(params);
  if (grad.size() != params.size()) throw ValidationError("blobs_mlp: gradient length mismatch");
  const std::size_t c = spec_.classes, h = spec_.hidden, f = spec_.features;
  std::fill(grad.begin(), grad.end(), 0.0);
  auto gb2 = grad.subspan(0, c);
  auto gw2 = grad.subspan(c, c * h);
  auto gb1 = grad.subspan(c + c * h, h);
  auto gw1 = grad.subspan(c + c * h + h, h * f);

  std::vector<double> hidden(h), logits(c), dz(c), dh(h);
  const std::size_t count = batch.empty() ? spec_.samples : batch.size();
  const double inv = 1.0 / static_cast<double>(count);
  double total = 0.0;
  for (std::size_t b = 0; b < count; ++b) {
    const std::size_t i = batch.empty() ? b : batch[b];
    if (i >= spec_.samples) throw ValidationError("blobs_mlp: sample index out of range");
    forward(v, i, hidden, logits);
    const double mx = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    for (std::size_t o = 0; o < c; ++o) z += std::exp(logits[o] - mx);
    const double log_z = mx + std::log(z);
    total += log_z - logits[y_[i]];
    for (std::size_t o = 0; o < c; ++o) {
      dz[o] = (std::exp(logits[o] - log_z) - (o == y_[i] ? 1.0 : 0.0)) * inv;
    }
    std::fill(dh.begin(), dh.end(), 0.0);
    for (std::size_t o = 0; o < c; ++o) {
      gb2[o] += dz[o];
      for (std::size_t j = 0; j < h; ++j) {
        gw2[o * h + j] += dz[o] * hidden[j];
        dh[j] += dz[o] * v.w2[o * h + j];
      }
    }
    const double* x = &x_[i * f];
    for (std::size_t j = 0; j < h; ++j) {
      const double da = dh[j] * (1.0 - hidden[j] * hidden[j]);
      gb1[j] += da;
      for (std::size_t k = 0; k < f; ++k) gw1[j * f + k] += da * x[k];
    }
  }
  return total * inv;
}

double BlobsMlpTask::metric(std::span<const double> params) const {
  const View v = view(params);
  std::vector<double> hidden(spec_.hidden), logits(spec_.classes);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < spec_.samples; ++i) {
    forward(v, i, hidden, logits);
    const auto pred = static_cast<std::uint32_t>(
        std::max_element(logits.begin(), logits.end()) - logits.begin());
    if (pred == y_[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(spec_.samples);
}

}  // namespace mergesched
