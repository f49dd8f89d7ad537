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
#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace mergesched {

// Parameters live in one flat vector laid out tensor by tensor in backprop
// order, so every contiguous group of tensors is a contiguous slice.
class Task {
 public:
  virtual ~Task() = default;

  virtual std::string name() const = 0;
  virtual std::vector<std::size_t> tensor_sizes() const = 0;
  std::size_t num_params() const;

  virtual std::vector<double> initial_params() const = 0;
  // Number of training samples; 0 means the objective is deterministic and
  // batches are ignored.
  virtual std::size_t num_samples() const = 0;
  // Mean loss over 'batch' (all samples when empty); writes the gradient.
  virtual double loss_and_grad(std::span<const double> params,
                               std::span<const std::uint32_t> batch,
                               std::span<double> grad) const = 0;
  double loss(std::span<const double> params, std::span<const std::uint32_t> batch = {}) const;
  // Training accuracy for classifiers, distance to the optimum otherwise.
  virtual double metric(std::span<const double> params) const = 0;
  virtual bool metric_is_accuracy() const = 0;
};

// f(x) = 1/2 sum_j c_j (x_j - t_j)^2 with curvatures c_j drawn uniformly from
// [curvature_min, curvature_max] and target t ~ N(0, 1), split into 'tensors'
// near-equal tensors. Error feedback with 1% top-k needs lr * c_max well
// below 0.05 to stay stable.
struct QuadraticSpec {
  std::size_t dimension = 1000;
  std::size_t tensors = 10;
  double curvature_min = 0.1;
  double curvature_max = 0.3;
  std::uint64_t seed = 0;

  bool operator==(const QuadraticSpec&) const = default;
};

// Gaussian blobs (unit-variance clusters around N(0, separation^2) centers)
// classified by a tanh MLP with one hidden layer and softmax cross-entropy.
struct BlobsMlpSpec {
  std::size_t features = 16;
  std::size_t classes = 4;
  std::size_t hidden = 32;
  std::size_t samples = 2048;
  double separation = 0.5;
  std::uint64_t seed = 0;

  bool operator==(const BlobsMlpSpec&) const = default;
};

using TaskSpec = std::variant<QuadraticSpec, BlobsMlpSpec>;

std::unique_ptr<Task> make_task(const TaskSpec& spec);

class QuadraticTask final : public Task {
 public:
  explicit QuadraticTask(const QuadraticSpec& spec);

  std::string name() const override { return "quadratic"; }
  std::vector<std::size_t> tensor_sizes() const override { return sizes_; }
  std::vector<double> initial_params() const override;
  std::size_t num_samples() const override { return 0; }
  double loss_and_grad(std::span<const double> params, std::span<const std::uint32_t> batch,
                       std::span<double> grad) const override;
  double metric(std::span<const double> params) const override;
  bool metric_is_accuracy() const override { return false; }

  std::span<const double> target() const { return target_; }

 private:
  std::vector<std::size_t> sizes_;
  std::vector<double> curvature_;
  std::vector<double> target_;
};

class BlobsMlpTask final : public Task {
 public:
  explicit BlobsMlpTask(const BlobsMlpSpec& spec);

  std::string name() const override { return "blobs_mlp"; }
  // Backprop order: b2, W2, b1, W1.
  std::vector<std::size_t> tensor_sizes() const override;
  std::vector<double> initial_params() const override;
  std::size_t num_samples() const override { return spec_.samples; }
  double loss_and_grad(std::span<const double> params, std::span<const std::uint32_t> batch,
                       std::span<double> grad) const override;
  double metric(std::span<const double> params) const override;
  bool metric_is_accuracy() const override { return true; }

  std::span<const double> features() const { return x_; }
  std::span<const std::uint32_t> labels() const { return y_; }

 private:
  struct View;
  View view(std::span<const double> params) const;
  void forward(const View& v, std::size_t sample, std::span<double> hidden,
               std::span<double> logits) const;

  BlobsMlpSpec spec_;
  std::vector<double> x_;         // samples x features, row-major
  std::vector<std::uint32_t> y_;
};

}  // namespace mergesched
