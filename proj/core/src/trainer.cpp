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

#include "mergesched/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <limits>
#include <thread>

#include "mergesched/error.hpp"
#include "mergesched/rng.hpp"

namespace mergesched {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

template <typename T>
bool all_finite(std::span<const T> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

const char* scheme_name(PartitionScheme s) {
  switch (s) {
    case PartitionScheme::kExplicit: return "explicit";
    case PartitionScheme::kLayerWise: return "layer_wise";
    case PartitionScheme::kMergedAll: return "merged_all";
  }
  return "?";
}

void TrainConfig::validate() const {
  if (n_workers < 1) throw ValidationError("train: n_workers must be >= 1");
  if (!(lr > 0.0) || !std::isfinite(lr)) throw ValidationError("train: lr must be positive");
  if (iterations < 1) throw ValidationError("train: iterations must be >= 1");
  if (batch_size < 1 || batch_size % n_workers != 0) {
    throw ValidationError("train: batch_size must be a positive multiple of n_workers");
  }
  if (threads < 1) throw ValidationError("train: threads must be >= 1");
  spec.validate();
}

void TrainReport::write_csv(std::ostream& out) const {
  out << "iteration,loss,time_ms\n";
  out.precision(17);
  for (std::size_t i = 0; i < loss_curve.size(); ++i) {
    out << i << ',' << loss_curve[i] << ','
        << (i < iteration_times_ms.size() ? iteration_times_ms[i] : 0.0) << '\n';
  }
}

struct Trainer::Worker {
  std::vector<double> params;
  std::vector<double> grad;
  std::vector<float> grad_f;
  std::vector<double> residual;
  std::vector<double> momentum;
  std::vector<std::uint32_t> batch;
  std::vector<double> decoded;  // only when recording
  double loss = 0.0;
};

Trainer::Trainer(TrainConfig config) : config_(std::move(config)) {
  config_.validate();
  task_ = make_task(config_.task);
  const auto sizes = task_->tensor_sizes();
  tensor_offsets_.assign(sizes.size() + 1, 0);
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    tensor_offsets_[i + 1] = tensor_offsets_[i] + sizes[i];
  }
  const std::size_t dim = tensor_offsets_.back();
  const auto init = task_->initial_params();
  for (std::size_t w = 0; w < config_.n_workers; ++w) {
    auto wk = std::make_unique<Worker>();
    wk->params = init;
    wk->grad.assign(dim, 0.0);
    wk->grad_f.assign(dim, 0.0f);
    if (config_.spec.error_feedback) wk->residual.assign(dim, 0.0);
    wk->momentum.assign(dim, 0.0);
    workers_.push_back(std::move(wk));
  }
  switch (config_.scheme) {
    case PartitionScheme::kExplicit: set_partition(config_.partition); break;
    case PartitionScheme::kLayerWise: set_partition(Partition::layer_wise(sizes.size())); break;
    case PartitionScheme::kMergedAll: set_partition(Partition::single(sizes.size())); break;
  }
}

Trainer::~Trainer() = default;

std::size_t Trainer::num_tensors() const { return tensor_offsets_.size() - 1; }

void Trainer::set_partition(const Partition& p) {
  if (p.num_tensors() != num_tensors()) {
    throw ValidationError("train: partition covers " + std::to_string(p.num_tensors()) +
                          " tensors, task has " + std::to_string(num_tensors()));
  }
  partition_ = p;
  payloads_.assign(p.num_groups(), std::vector<CompressedPayload>(config_.n_workers));
}

void Trainer::pin(const Partition& p) { set_partition(p); }

void Trainer::set_fake_clock(std::function<double(const Partition&)> clock) {
  fake_clock_ = std::move(clock);
}

void Trainer::compute_worker(std::size_t w) {
  Worker& wk = *workers_[w];
  const std::size_t samples = task_->num_samples();
  wk.batch.clear();
  if (samples > 0) {
    const std::size_t per = config_.batch_size / config_.n_workers;
    if (config_.shared_data) {
      const CounterRng rng(mix_key(mix_key(config_.seed, 0xda7a), t_));
      for (std::size_t j = 0; j < per; ++j) {
        wk.batch.push_back(static_cast<std::uint32_t>(rng.below(j, samples)));
      }
    } else {
      const std::size_t lo = w * samples / config_.n_workers;
      const std::size_t hi = (w + 1) * samples / config_.n_workers;
      const CounterRng rng(StreamKey{config_.seed ^ 0xda7a, w, t_, 0}.hash());
      for (std::size_t j = 0; j < per; ++j) {
        wk.batch.push_back(static_cast<std::uint32_t>(lo + rng.below(j, hi - lo)));
      }
    }
  }
  wk.loss = task_->loss_and_grad(wk.params, wk.batch, wk.grad);
  for (std::size_t i = 0; i < wk.grad.size(); ++i) wk.grad_f[i] = static_cast<float>(wk.grad[i]);
  if (!std::isfinite(wk.loss) || !all_finite<float>(wk.grad_f)) return;

  const std::span<const float> gf(wk.grad_f);
  for (std::size_t g = 0; g < partition_.num_groups(); ++g) {
    const auto [first, last] = partition_.group_range(g);
    const std::size_t lo = tensor_offsets_[first];
    const std::size_t len = tensor_offsets_[last] - lo;
    std::optional<ResidualView> state;
    ResidualView view;
    view.momentum = std::span<double>(wk.momentum).subspan(lo, len);
    if (config_.spec.error_feedback) {
      view.residual = std::span<double>(wk.residual).subspan(lo, len);
    }
    state = view;
    payloads_[g][w] = encode(config_.spec, gf.subspan(lo, len), state,
                             StreamKey{config_.seed, w, t_, g});
  }
}

double Trainer::step() {
  const std::size_t n = config_.n_workers;
  if (config_.threads > 1 && n > 1) {
    const std::size_t k = std::min(config_.threads, n);
    std::vector<std::jthread> pool;
    pool.reserve(k);
    for (std::size_t c = 0; c < k; ++c) {
      pool.emplace_back([this, c, k, n] {
        for (std::size_t w = c; w < n; w += k) compute_worker(w);
      });
    }
  } else {
    for (std::size_t w = 0; w < n; ++w) compute_worker(w);
  }

  double loss = 0.0;
  for (std::size_t w = 0; w < n; ++w) {
    const Worker& wk = *workers_[w];
    if (!std::isfinite(wk.loss) || !all_finite<float>(wk.grad_f)) {
      throw RuntimeFailure("train: non-finite loss or gradient at iteration " +
                           std::to_string(t_) + " on worker " + std::to_string(w));
    }
    loss += wk.loss;
  }
  loss /= static_cast<double>(n);

  if (record_) {
    for (std::size_t w = 0; w < n; ++w) {
      auto& dec = workers_[w]->decoded;
      dec.assign(tensor_offsets_.back(), 0.0);
      for (std::size_t g = 0; g < partition_.num_groups(); ++g) {
        const std::size_t lo = tensor_offsets_[partition_.group_range(g).first];
        const auto& p = payloads_[g][w];
        decode_accumulate(config_.spec, p, std::span<double>(dec).subspan(lo, p.original_len));
      }
    }
  }

  // Exchange: every worker receives the same payload list in worker order,
  // so a single aggregate per group is the value each worker would compute.
  for (std::size_t g = 0; g < partition_.num_groups(); ++g) {
    const std::size_t lo = tensor_offsets_[partition_.group_range(g).first];
    const std::vector<float> mean = aggregate(config_.spec, payloads_[g]);
    for (std::size_t w = 0; w < n; ++w) {
      double* x = workers_[w]->params.data() + lo;
      for (std::size_t i = 0; i < mean.size(); ++i) {
        x[i] -= config_.lr * static_cast<double>(mean[i]);
      }
    }
  }
  if (!all_finite<double>(workers_[0]->params)) {
    throw RuntimeFailure("train: parameters diverged at iteration " + std::to_string(t_));
  }
  ++t_;
  return loss;
}

TrainReport Trainer::run() {
  TrainReport report;
  report.metric_is_accuracy = task_->metric_is_accuracy();
  report.partition = partition_;
  const auto start = Clock::now();
  try {
    while (t_ < config_.iterations) {
      const auto t0 = Clock::now();
      report.loss_curve.push_back(step());
      report.iteration_times_ms.push_back(ms_since(t0));
    }
  } catch (const RuntimeFailure& e) {
    report.diverged = true;
    report.message = e.what();
  }
  report.wall_ms = ms_since(start);
  report.final_loss = task_->loss(workers_[0]->params);
  report.final_metric = task_->metric(workers_[0]->params);
  return report;
}

double Trainer::timed_iteration(const Partition& p) {
  set_partition(p);
  const auto t0 = Clock::now();
  step();
  const double ms = ms_since(t0);
  return fake_clock_ ? fake_clock_(p) : ms;
}

std::span<const double> Trainer::params(std::size_t w) const { return workers_.at(w)->params; }

std::span<const double> Trainer::residual(std::size_t w) const {
  return workers_.at(w)->residual;
}

std::span<const float> Trainer::last_gradient(std::size_t w) const {
  return workers_.at(w)->grad_f;
}

std::span<const double> Trainer::last_decoded(std::size_t w) const {
  return workers_.at(w)->decoded;
}

double Trainer::max_worker_divergence() const {
  double worst = 0.0;
  const auto& ref = workers_[0]->params;
  for (std::size_t w = 1; w < workers_.size(); ++w) {
    const auto& p = workers_[w]->params;
    if (std::memcmp(p.data(), ref.data(), p.size() * sizeof(double)) == 0) continue;
    double d = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) d += std::abs(p[i] - ref[i]);
    // Bitwise-different but numerically equal (e.g. -0.0) still counts.
    worst = std::max(worst, d > 0.0 ? d : std::numeric_limits<double>::min());
  }
  return worst;
}

TrainReport train(const TrainConfig& config) {
  Trainer trainer(config);
  return trainer.run();
}

Comparison compare(const std::vector<TrainConfig>& configs, std::optional<double> loss_threshold) {
  if (configs.empty()) throw ValidationError("compare: no configs");
  for (const auto& c : configs) {
    if (!(c.task == configs[0].task) || c.seed != configs[0].seed) {
      throw ValidationError("compare: configs must share task and seed");
    }
  }
  Comparison out;
  for (const auto& c : configs) out.reports.push_back(train(c));
  out.loss_threshold = loss_threshold.value_or(1.1 * out.reports[0].final_loss);
  for (std::size_t i = 0; i < configs.size(); ++i) {
    const auto& c = configs[i];
    const auto& r = out.reports[i];
    ComparisonRow row;
    row.label = c.label.empty() ? std::string(algorithm_name(c.spec.algorithm)) + "/" +
                                      scheme_name(c.scheme)
                                : c.label;
    row.algorithm = std::string(algorithm_name(c.spec.algorithm));
    row.scheme = scheme_name(c.scheme);
    row.groups = r.partition.num_groups();
    row.baseline = i == 0;
    row.iterations = r.loss_curve.size();
    row.final_loss = r.final_loss;
    row.final_metric = r.final_metric;
    row.wall_ms = r.wall_ms;
    row.diverged = r.diverged;
    for (std::size_t t = 0; t < r.loss_curve.size(); ++t) {
      if (r.loss_curve[t] <= out.loss_threshold) {
        row.iterations_to_threshold = t + 1;
        break;
      }
    }
    out.rows.push_back(row);
  }
  return out;
}

}  // namespace mergesched
