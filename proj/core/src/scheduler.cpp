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

#include "mergesched/scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>

#include "mergesched/error.hpp"
#include "mergesched/simulator.hpp"

namespace mergesched {

double Evaluator::operator()(const Partition& p) {
  if (p.num_tensors() != n_) throw ValidationError("evaluator: partition size mismatch");
  if (auto it = cache_.find(p); it != cache_.end()) return it->second;
  const double f = fn_(p);
  cache_.emplace(p, f);
  log_.push_back({p, f});
  return f;
}

Evaluator analytic_evaluator(const ModelProfile& profile, const CompressorSpec& spec,
                             const CostParams& costs, bool g_on_payload) {
  spec.validate();
  costs.validate();
  return Evaluator(profile.num_tensors(), [profile, spec, costs, g_on_payload](const Partition& p) {
    return simulate_iteration(profile, p, spec, costs, g_on_payload).iteration_ms;
  });
}

std::string_view termination_name(Termination t) {
  switch (t) {
    case Termination::kWorseThanPrev:
      return "worse_than_prev";
    case Termination::kMarginalBenefit:
      return "marginal_benefit";
    case Termination::kReachedY:
      return "reached_Y";
    case Termination::kExhaustive:
      return "exhaustive";
  }
  return "unknown";
}

void SearchConfig::validate(std::size_t n_tensors) const {
  if (max_groups < 2 || max_groups > n_tensors) {
    throw ValidationError("search: Y must satisfy 2 <= Y <= N (N = " +
                          std::to_string(n_tensors) + ")");
  }
  if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("search: alpha must be in (0, 1)");
  if (repetitions < 1) throw ValidationError("search: repetitions must be >= 1");
}

namespace {

std::vector<EvaluationRecord> log_since(const Evaluator& eval, std::size_t start) {
  const auto& log = eval.log();
  return {log.begin() + static_cast<std::ptrdiff_t>(start), log.end()};
}

// Unimodal argmin of f over [lo, hi] (inclusive).
template <typename F>
std::pair<std::size_t, double> unimodal_argmin(std::size_t lo, std::size_t hi, std::size_t guard,
                                               F&& f) {
  std::map<std::size_t, double> seen;
  auto at = [&](std::size_t j) {
    if (auto it = seen.find(j); it != seen.end()) return it->second;
    const double v = f(j);
    seen.emplace(j, v);
    return v;
  };
  std::size_t a = lo, b = hi;
  while (a < b) {
    const std::size_t m = a + (b - a) / 2;
    if (at(m) <= at(m + 1)) {
      b = m;
    } else {
      a = m + 1;
    }
  }
  const std::size_t from = a > lo + guard ? a - guard : lo;
  const std::size_t to = std::min(hi, a + guard);
  for (std::size_t j = from; j <= to; ++j) at(j);
  // std::map iterates in index order, so the first strict minimum wins ties.
  auto best = seen.begin();
  for (auto it = seen.begin(); it != seen.end(); ++it) {
    if (it->second < best->second) best = it;
  }
  return {best->first, best->second};
}

}  // namespace

SearchResult exhaustive_search(Evaluator& eval, std::size_t y_max,
                               std::optional<std::size_t> guard) {
  const std::size_t start = eval.evaluations();
  PartitionEnumerator it(eval.num_tensors(), y_max, guard);
  SearchResult out;
  out.termination = Termination::kExhaustive;
  out.f_ms = std::numeric_limits<double>::infinity();
  std::map<std::size_t, double> best_per_y;
  while (auto p = it.next()) {
    const double f = eval(*p);
    const std::size_t y = p->num_groups();
    auto [pos, inserted] = best_per_y.emplace(y, f);
    if (!inserted) pos->second = std::min(pos->second, f);
    // Enumeration order is (y, lexicographic), so strict improvement keeps
    // the tie-break.
    if (f < out.f_ms) {
      out.f_ms = f;
      out.partition = *p;
    }
  }
  out.per_y.assign(best_per_y.begin(), best_per_y.end());
  out.evaluations = eval.evaluations() - start;
  out.log = log_since(eval, start);
  return out;
}

SplitResult optimal_split_y2(Evaluator& eval, std::size_t guard) {
  const std::size_t n = eval.num_tensors();
  if (n < 2) throw ValidationError("optimal_split_y2: need at least two tensors");
  auto [split, f] = unimodal_argmin(1, n - 1, guard, [&](std::size_t j) {
    return eval(Partition(n, {j}));
  });
  return {split, f};
}

std::pair<Partition, double> optimal_partition_y(Evaluator& eval, std::size_t y,
                                                 std::size_t guard) {
  const std::size_t n = eval.num_tensors();
  if (y < 2 || y > n) throw ValidationError("optimal_partition_y: need 2 <= y <= N");
  if (y == 2) {
    const auto r = optimal_split_y2(eval, guard);
    return {Partition(n, {r.split}), r.f_ms};
  }
  // Prefixes are the (y-2)-combinations of [1, N-2] in lexicographic order.
  const std::size_t k = y - 2;
  std::vector<std::size_t> prefix(k);
  for (std::size_t i = 0; i < k; ++i) prefix[i] = i + 1;
  std::optional<Partition> best;
  double best_f = std::numeric_limits<double>::infinity();
  while (true) {
    auto [last, f] = unimodal_argmin(prefix.back() + 1, n - 1, guard, [&](std::size_t j) {
      std::vector<std::size_t> cuts = prefix;
      cuts.push_back(j);
      return eval(Partition(n, std::move(cuts)));
    });
    if (f < best_f) {
      std::vector<std::size_t> cuts = prefix;
      cuts.push_back(last);
      best.emplace(n, std::move(cuts));
      best_f = f;
    }
    std::size_t i = k;
    while (i > 0 && prefix[i - 1] == n - 2 - (k - i)) --i;
    if (i == 0) break;
    ++prefix[i - 1];
    for (std::size_t j = i; j < k; ++j) prefix[j] = prefix[j - 1] + 1;
  }
  return {*best, best_f};
}

SearchResult heuristic_search(Evaluator& eval, const SearchConfig& config) {
  const std::size_t n = eval.num_tensors();
  config.validate(n);
  const std::size_t start = eval.evaluations();
  SearchResult out;

  Partition prev = Partition::single(n);
  double prev_f = eval(prev);
  out.per_y.emplace_back(1, prev_f);
  out.termination = Termination::kReachedY;
  for (std::size_t y = 2; y <= config.max_groups; ++y) {
    auto [cur, cur_f] = optimal_partition_y(eval, y, config.unimodal_guard);
    out.per_y.emplace_back(y, cur_f);
    if (prev_f < cur_f) {
      out.termination = Termination::kWorseThanPrev;
      break;
    }
    prev = std::move(cur);
    const double gain = prev_f - cur_f;
    const double threshold = config.alpha * prev_f;
    prev_f = cur_f;
    if (gain < threshold) {
      out.termination = Termination::kMarginalBenefit;
      break;
    }
  }
  out.partition = std::move(prev);
  out.f_ms = prev_f;
  out.evaluations = eval.evaluations() - start;
  out.log = log_since(eval, start);
  return out;
}

Partition naive_partition(std::size_t n_tensors, std::size_t y) {
  if (y < 1 || y > n_tensors) throw ValidationError("naive_partition: need 1 <= y <= N");
  std::vector<std::size_t> counts(y, n_tensors / y);
  for (std::size_t i = 0; i < n_tensors % y; ++i) ++counts[i];
  return Partition::from_counts(counts);
}

std::optional<UnimodalityViolation> audit_unimodality(Evaluator& eval,
                                                      std::vector<std::size_t> prefix) {
  const std::size_t n = eval.num_tensors();
  const std::size_t lo = prefix.empty() ? 1 : prefix.back() + 1;
  if (lo > n - 1 || n < 2) return std::nullopt;
  UnimodalityViolation v;
  v.prefix_last = prefix.empty() ? 0 : prefix.back();
  for (std::size_t j = lo; j <= n - 1; ++j) {
    std::vector<std::size_t> cuts = prefix;
    cuts.push_back(j);
    v.values.push_back(eval(Partition(n, std::move(cuts))));
  }
  // Non-increasing then non-decreasing: once F rises it must never fall.
  bool rising = false;
  std::size_t rise_at = 0;
  for (std::size_t i = 1; i < v.values.size(); ++i) {
    if (v.values[i] > v.values[i - 1] && !rising) {
      rising = true;
      rise_at = lo + i - 1;
    } else if (rising && v.values[i] < v.values[i - 1]) {
      v.at = rise_at;
      return v;
    }
  }
  return std::nullopt;
}

SearchResult online_search(const SearchConfig& config, IterationTimer& trainer) {
  const std::size_t reps = config.repetitions;
  Evaluator eval(trainer.num_tensors(), [&trainer, reps](const Partition& p) {
    std::vector<double> times;
    times.reserve(reps);
    for (std::size_t r = 0; r < reps; ++r) times.push_back(trainer.timed_iteration(p));
    return median(std::move(times));
  });
  SearchResult result = heuristic_search(eval, config);
  trainer.pin(result.partition);
  return result;
}

}  // namespace mergesched
