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

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "mergesched/error.hpp"
#include "mergesched/serialize.hpp"
#include "mergesched/version.hpp"

namespace mergesched {
namespace {

TEST(Serialize, CompressorSpecRoundtrip) {
  for (auto a : all_algorithms()) {
    CompressorSpec s = CompressorSpec::make(a);
    s.sparsity = 0.95;
    s.bucket_size = 128;
    EXPECT_EQ(spec_from_json(to_json(s)), s) << algorithm_name(a);
  }
  EXPECT_EQ(spec_from_json(Json("dgc_lite")), CompressorSpec::make(Algorithm::kDgcLite));
  const Json partial{{"algorithm", "topk"}, {"sparsity", 0.5}};
  const auto s = spec_from_json(partial);
  EXPECT_EQ(s.sparsity, 0.5);
  EXPECT_TRUE(s.error_feedback);
}

TEST(Serialize, CompressorSpecRejectsBadInput) {
  EXPECT_THROW(spec_from_json(Json{{"algorithm", "topk"}, {"sparsty", 0.5}}), ValidationError);
  EXPECT_THROW(spec_from_json(Json{{"sparsity", 0.5}}), ValidationError);
  EXPECT_THROW(spec_from_json(Json{{"algorithm", "topk"}, {"sparsity", "high"}}), ValidationError);
  EXPECT_THROW(spec_from_json(Json{{"algorithm", "topk"}, {"sparsity", 1.5}}), ValidationError);
  EXPECT_THROW(spec_from_json(Json("zip")), ValidationError);
}

TEST(Serialize, CostParamsAndSamples) {
  const CostParams p{0.5, 1e-6, 0.25, 2e-5, 64};
  const auto back = costs_from_json(to_json(p));
  EXPECT_EQ(back.b_h, p.b_h);
  EXPECT_EQ(back.gamma_h, p.gamma_h);
  EXPECT_EQ(back.b_g, p.b_g);
  EXPECT_EQ(back.gamma_g, p.gamma_g);
  EXPECT_EQ(back.compute_ms, p.compute_ms);
  EXPECT_THROW(costs_from_json(Json{{"b_h", -1.0}}), ValidationError);

  const std::vector<TimingSample> samples{{64, 0.1, SampleKind::kCompression},
                                          {1024, 0.5, SampleKind::kCommunication}};
  const auto sb = samples_from_json(to_json(samples));
  ASSERT_EQ(sb.size(), 2u);
  EXPECT_EQ(sb[1].size, 1024u);
  EXPECT_EQ(sb[1].kind, SampleKind::kCommunication);
  EXPECT_THROW(samples_from_json(Json::array({Json{{"size", 3}}})), ValidationError);
  EXPECT_THROW(samples_from_json(Json{{"size", 3}}), ValidationError);
}

TEST(Serialize, Partitions) {
  const Partition p(7, {2, 3});
  EXPECT_EQ(partition_json(p), Json::array({2, 1, 4}));
  EXPECT_EQ(partition_from_json(7, partition_json(p)), p);
  EXPECT_THROW(partition_from_json(8, partition_json(p)), ValidationError);
  EXPECT_THROW(partition_from_json(7, Json("2,1,4")), ValidationError);
  EXPECT_THROW(partition_from_json(3, Json::array({3, 0})), ValidationError);
}

TEST(Serialize, SearchConfigRoundtrip) {
  SearchConfig c;
  c.max_groups = 3;
  c.alpha = 0.05;
  const auto b = search_config_from_json(to_json(c));
  EXPECT_EQ(b.max_groups, 3u);
  EXPECT_EQ(b.alpha, 0.05);
  EXPECT_EQ(b.repetitions, c.repetitions);
  EXPECT_THROW(search_config_from_json(Json{{"Y", 2}}), ValidationError);
}

TEST(Serialize, TrainConfigRoundtrip) {
  TrainConfig c;
  c.task = BlobsMlpSpec{8, 3, 10, 300, 0.7, 4};
  c.n_workers = 2;
  c.batch_size = 32;
  c.lr = 0.05;
  c.iterations = 17;
  c.spec = CompressorSpec::make(Algorithm::kEfSignSgd);
  c.scheme = PartitionScheme::kExplicit;
  c.partition = Partition(4, {1});
  c.seed = 99;
  c.shared_data = false;
  c.threads = 2;
  c.label = "x";
  const auto b = train_config_from_json(to_json(c));
  EXPECT_TRUE(b.task == c.task);
  EXPECT_EQ(b.n_workers, c.n_workers);
  EXPECT_EQ(b.batch_size, c.batch_size);
  EXPECT_EQ(b.lr, c.lr);
  EXPECT_EQ(b.iterations, c.iterations);
  EXPECT_EQ(b.spec, c.spec);
  EXPECT_EQ(b.scheme, c.scheme);
  EXPECT_EQ(b.partition, c.partition);
  EXPECT_EQ(b.seed, c.seed);
  EXPECT_EQ(b.shared_data, c.shared_data);
  EXPECT_EQ(b.threads, c.threads);
  EXPECT_EQ(b.label, c.label);
  EXPECT_EQ(to_json(b), to_json(c));

  TrainConfig q;
  q.task = QuadraticSpec{};
  EXPECT_TRUE(train_config_from_json(to_json(q)).task == q.task);
}

TEST(Serialize, TrainConfigRejectsBadInput) {
  EXPECT_THROW(train_config_from_json(Json{{"scheme", "explicit"}}), ValidationError);
  EXPECT_THROW(train_config_from_json(Json{{"scheme", "random"}}), ValidationError);
  EXPECT_THROW(train_config_from_json(Json{{"workers", 2}}), ValidationError);
  EXPECT_THROW(train_config_from_json(Json{{"task", {{"kind", "mnist"}}}}), ValidationError);
  EXPECT_THROW(train_config_from_json(Json{{"batch_size", 10}, {"n_workers", 4}}), ValidationError);
  EXPECT_THROW(train_config_from_json(Json{{"lr", "fast"}}), ValidationError);
}

TEST(Serialize, ReportsCarryFields) {
  SearchResult r;
  r.partition = Partition(4, {1});
  r.f_ms = 8.3;
  r.evaluations = 3;
  r.per_y = {{1, 9.4}, {2, 8.3}};
  r.log = {{Partition::single(4), 9.4}};
  const auto j = to_json(r);
  EXPECT_EQ(j.at("partition"), Json::array({1, 3}));
  EXPECT_EQ(j.at("partition_string"), "[1|3]");
  EXPECT_EQ(j.at("termination"), "reached_Y");
  EXPECT_EQ(j.at("per_y").size(), 2u);
  EXPECT_EQ(j.at("log").at(0).at("partition"), "[4]");

  SimReport s;
  s.iteration_ms = 8.4;
  s.per_group.resize(2);
  const auto sj = to_json(s);
  EXPECT_EQ(sj.at("T_ms"), 8.4);
  EXPECT_EQ(sj.at("groups").size(), 2u);
}

TEST(Serialize, DocumentsEmbedVersionAndConfig) {
  const auto doc = make_document("search", Json{{"a", 1}}, Json{{"b", 2}});
  EXPECT_EQ(doc.at("artifact"), "mergesched");
  EXPECT_EQ(doc.at("version"), std::string(kVersion));
  EXPECT_EQ(doc.at("config").at("a"), 1);
  EXPECT_EQ(doc.at("result").at("b"), 2);

  const auto dir = std::filesystem::temp_directory_path() / "mergesched_serialize_test";
  std::filesystem::create_directories(dir);
  const auto path = dir / "doc.json";
  write_json_file(path, doc);
  EXPECT_EQ(read_document(path, "search"), doc);
  EXPECT_THROW(read_document(path, "train"), ValidationError);
  {
    std::ofstream(dir / "bad.json") << "{ not json";
  }
  EXPECT_THROW(read_json_file(dir / "bad.json"), ValidationError);
  {
    std::ofstream(dir / "plain.json") << "[1, 2]";
  }
  EXPECT_THROW(read_document(dir / "plain.json", "search"), ValidationError);
  EXPECT_THROW(read_json_file(dir / "missing.json"), RuntimeFailure);
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace mergesched
