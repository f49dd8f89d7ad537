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

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mergesched/compressors.hpp"
#include "mergesched/costmodel.hpp"
#include "mergesched/scheduler.hpp"
#include "mergesched/simulator.hpp"
#include "mergesched/trainer.hpp"

namespace mergesched {

using Json = nlohmann::ordered_json;

// Missing fields keep the algorithm's defaults; unknown fields are rejected.
Json to_json(const CompressorSpec& spec);
CompressorSpec spec_from_json(const Json& j);

Json to_json(const CostParams& p);
CostParams costs_from_json(const Json& j);

Json to_json(const std::vector<TimingSample>& samples);
std::vector<TimingSample> samples_from_json(const Json& j);

Json to_json(const LineFit& f);
Json to_json(const SearchConfig& c);
SearchConfig search_config_from_json(const Json& j);
Json to_json(const SearchResult& r);
Json to_json(const SimReport& r);

Json to_json(const TaskSpec& t);
TaskSpec task_from_json(const Json& j);
Json to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const Json& j);
Json summary_json(const TrainReport& r);
Json to_json(const Comparison& c);

Json partition_json(const Partition& p);  // tensor counts per group
Partition partition_from_json(std::size_t n_tensors, const Json& j);

// {"artifact", "version", "kind", "config", "result"}.
Json make_document(std::string_view kind, Json config, Json result);
// Parses a document of the given kind and returns it; throws
// ValidationError for another kind or a malformed file.
Json read_document(const std::filesystem::path& path, std::string_view kind);
Json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const Json& j);

}  // namespace mergesched
