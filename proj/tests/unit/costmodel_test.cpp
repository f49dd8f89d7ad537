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

#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "mergesched/calibration.hpp"
#include "mergesched/costmodel.hpp"
#include "mergesched/error.hpp"
#include "mergesched/simulator.hpp"
#include "oracles.hpp"

namespace mergesched {
namespace {

const std::string kData = MERGESCHED_DATA_DIR;
constexpr double kEps = std::numeric_limits<double>::epsilon();

std::vector<TimingSample> line_samples(double b, double gamma, std::size_t count,
                                       SampleKind kind = SampleKind::kCompression) {
  std::vector<TimingSample> s;
  for (std::size_t i = 0; i < count; ++i) {
    const std::uint64_t x = 1 + 37 * i * i;
    s.push_back({x, b + gamma * static_cast<double>(x), kind});
  }
  return s;
}

TEST(Costs, HAndG) {
  const CostParams flat{0.1, 0.0, 0.5, 0.0, 0.0};
  EXPECT_DOUBLE_EQ(h_cost(flat, 1e6), 0.1);
  EXPECT_DOUBLE_EQ(g_cost(flat, 12345), 0.5);
  const CostParams slope{0.0, 0.001, 0.0, 0.001, 0.0};
  EXPECT_DOUBLE_EQ(h_cost(slope, 1000), 1.0);
  const CostParams p{0.25, 0.5, 0.75, 0.125, 0.0};
  EXPECT_EQ(h_cost(p, 0), 0.25);
  EXPECT_EQ(g_cost(p, 0), 0.75);
  // Affine on dyadic inputs, exactly.
  EXPECT_EQ(h_cost(p, 8) + h_cost(p, 24), 2 * p.b_h + p.gamma_h * 32);
  EXPECT_EQ(g_cost(p, 8) + g_cost(p, 24), 2 * p.b_g + p.gamma_g * 32);
  EXPECT_THROW((CostParams{-1, 0, 0, 0, 0}.validate()), ValidationError);
  EXPECT_THROW((CostParams{0, 0, std::nan(""), 0, 0}.validate()), ValidationError);
}

TEST(Fit, NoiselessRecoveryToMachinePrecision) {
  const auto samples = line_samples(0.2, 0.003, 50);
  const auto f = fit(samples);
  // The samples themselves carry rounding of order eps * max(y), which
  // bounds how well the intercept can be pinned down.
  EXPECT_NEAR(f.intercept, 0.2, 64 * kEps * samples.back().time_ms);
  EXPECT_NEAR(f.slope, 0.003, 64 * kEps * 0.003);
  EXPECT_FALSE(f.intercept_clamped);
  EXPECT_LT(f.residual_norm, 1e-9);
}

TEST(Fit, TwoPointLine) {
  const std::vector<TimingSample> s{{100, 1.0, SampleKind::kCompression},
                                    {200, 1.5, SampleKind::kCompression}};
  const auto f = fit(s);
  EXPECT_NEAR(f.intercept, 0.5, 1e-15);
  EXPECT_NEAR(f.slope, 0.005, 1e-17);
}

TEST(Fit, MatchesIndependentOls) {
  SplitMix rng(3);
  std::vector<TimingSample> s;
  std::vector<double> x, y;
  for (int i = 0; i < 40; ++i) {
    const auto size = 1 + rng.below(100000);
    const double t = 0.3 + 2e-5 * static_cast<double>(size) + rng.uniform(-0.05, 0.05);
    s.push_back({size, t, SampleKind::kCompression});
    x.push_back(static_cast<double>(size));
    y.push_back(t);
  }
  const auto f = fit(s);
  const auto [b, g] = oracle::ols(x, y);
  EXPECT_NEAR(f.intercept, b, 1e-12);
  EXPECT_NEAR(f.slope, g, 1e-16);
}

TEST(Fit, TwoPercentNoiseWithinOnePercent) {
  SplitMix rng(20240607);
  std::vector<TimingSample> s;
  for (int i = 0; i < 50; ++i) {
    const double x = i < 25 ? 1.0 + 7.0 * i / 24.0 : 900.0 + 200.0 * (i - 25) / 24.0;
    const auto size = static_cast<std::uint64_t>(std::llround(x));
    const double t = (0.2 + 0.003 * static_cast<double>(size)) * (1.0 + rng.uniform(-0.02, 0.02));
    s.push_back({size, t, SampleKind::kCompression});
  }
  const auto f = fit(s);
  EXPECT_LE(std::fabs(f.intercept - 0.2) / 0.2, 0.01);
  EXPECT_LE(std::fabs(f.slope - 0.003) / 0.003, 0.01);
}

TEST(Fit, ScaleEquivariant) {
  SplitMix rng(5);
  std::vector<TimingSample> s, s4, s3;
  for (int i = 0; i < 30; ++i) {
    const auto size = 1 + rng.below(5000);
    const double t = 1.0 + 0.01 * static_cast<double>(size) + rng.uniform(-1.0, 1.0);
    s.push_back({size, t, SampleKind::kCompression});
    s4.push_back({size, 4 * t, SampleKind::kCompression});
    s3.push_back({size, 3 * t, SampleKind::kCompression});
  }
  const auto f = fit(s), f4 = fit(s4), f3 = fit(s3);
  EXPECT_EQ(f4.intercept, 4 * f.intercept);
  EXPECT_EQ(f4.slope, 4 * f.slope);
  EXPECT_NEAR(f3.intercept, 3 * f.intercept, 1e-12);
  EXPECT_NEAR(f3.slope, 3 * f.slope, 1e-15);
}

TEST(Fit, NegativeInterceptClamped) {
  const std::vector<TimingSample> s{{10, 0.5, SampleKind::kCompression},
                                    {20, 1.5, SampleKind::kCompression},
                                    {30, 2.5, SampleKind::kCompression}};
  const auto f = fit(s);
  EXPECT_TRUE(f.intercept_clamped);
  EXPECT_EQ(f.intercept, 0.0);
  EXPECT_NEAR(f.slope, (10 * 0.5 + 20 * 1.5 + 30 * 2.5) / (100.0 + 400 + 900), 1e-15);
}

TEST(Fit, Errors) {
  EXPECT_THROW(fit(line_samples(1, 1, 1)), ValidationError);
  const std::vector<TimingSample> same{{5, 1.0, SampleKind::kCompression},
                                       {5, 2.0, SampleKind::kCompression}};
  EXPECT_THROW(fit(same), ValidationError);
  const std::vector<TimingSample> neg{{5, -1.0, SampleKind::kCompression},
                                      {6, 2.0, SampleKind::kCompression}};
  EXPECT_THROW(fit(neg), ValidationError);
}

TEST(FitCostParams, SplitsKinds) {
  auto s = line_samples(0.2, 0.003, 10, SampleKind::kCompression);
  for (const auto& t : line_samples(0.5, 0.01, 10, SampleKind::kCommunication)) s.push_back(t);
  const auto f = fit_cost_params(s, 64.0);
  ASSERT_TRUE(f.has_compression && f.has_communication);
  EXPECT_NEAR(f.params.b_h, 0.2, 1e-13);
  EXPECT_NEAR(f.params.gamma_h, 0.003, 1e-16);
  EXPECT_NEAR(f.params.b_g, 0.5, 1e-13);
  EXPECT_NEAR(f.params.gamma_g, 0.01, 1e-16);
  EXPECT_EQ(f.params.compute_ms, 64.0);
  EXPECT_THROW(fit_cost_params({}), ValidationError);
}

TEST(Median, OddAndEven) {
  EXPECT_EQ(median({3, 1, 2}), 2);
  EXPECT_EQ(median({4, 1, 3, 2}), 2.5);
  EXPECT_THROW(median({}), ValidationError);
}

TEST(Microbench, ContractOnly) {
  const auto spec = CompressorSpec::make(Algorithm::kIdentity);
  const std::vector<std::uint64_t> sizes{64, 4096, 256, 1 << 14};
  EXPECT_THROW(microbench(spec, sizes, 2), ValidationError);
  const auto out = microbench(spec, sizes, 3);
  ASSERT_EQ(out.size(), sizes.size());
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    EXPECT_EQ(out[i].size, sizes[i]);
    EXPECT_GE(out[i].time_ms, 0.0);
    EXPECT_EQ(out[i].kind, SampleKind::kCompression);
  }
  const auto fitted = fit(out);
  EXPECT_GE(fitted.intercept, 0.0);
}

TEST(Calibration, DenseCommunicationTotalsSixtySixMs) {
  const auto cal = load_calibration_file(kData + "/paper_calibration.json");
  const auto prof = calibrated_profile(cal, load_profile_file(kData + "/" + cal.profile));
  EXPECT_EQ(prof.num_tensors(), 161u);
  EXPECT_NEAR(prof.total_compute(), 64.0, 1e-9);
  const auto dense = CompressorSpec::make(Algorithm::kIdentity);
  const auto c = calibrated_costs(cal, prof, dense, 2);
  double total = 0.0;
  for (const auto& l : prof.layers()) total += g_cost(c, static_cast<double>(l.size));
  EXPECT_NEAR(total, 66.0, 1e-9);
  EXPECT_EQ(c.b_h, 0.0);
  EXPECT_EQ(c.gamma_h, 0.0);
}

TEST(Calibration, PerTensorFloors) {
  const auto cal = load_calibration_file(kData + "/paper_calibration.json");
  const auto prof = calibrated_profile(cal, load_profile_file(kData + "/" + cal.profile));
  for (Algorithm a : all_algorithms()) {
    if (a == Algorithm::kIdentity) continue;
    const auto o = compression_overheads(cal, prof, CompressorSpec::make(a));
    EXPECT_GE(o.encode_ms, 0.1 - 1e-12) << algorithm_name(a);
    EXPECT_GE(o.decode_ms, 0.03 - 1e-12) << algorithm_name(a);
    const auto c = calibrated_costs(cal, prof, CompressorSpec::make(a), 2);
    EXPECT_GT(c.b_h, 0.1) << algorithm_name(a);
  }
  // The dgc layer-wise total fixes the per-iteration compression sum.
  const auto dgc = CompressorSpec::make(Algorithm::kDgcLite);
  const auto c = calibrated_costs(cal, prof, dgc, 2);
  double total = 0.0;
  for (const auto& l : prof.layers()) total += h_cost(c, static_cast<double>(l.size));
  EXPECT_NEAR(total, 120.0, 1e-9);
}

TEST(Calibration, SingleWorkerHasNoOverheads) {
  const auto cal = load_calibration_file(kData + "/paper_calibration.json");
  const auto prof = calibrated_profile(cal, load_profile_file(kData + "/" + cal.profile));
  const auto c = calibrated_costs(cal, prof, CompressorSpec::make(Algorithm::kTopK), 1);
  EXPECT_EQ(c, (CostParams{0, 0, 0, 0, 64.0}));
}

TEST(Calibration, RejectsMalformed) {
  EXPECT_THROW(load_calibration("{}"), ValidationError);
  EXPECT_THROW(load_calibration("[1"), ValidationError);
}

}  // namespace
}  // namespace mergesched
