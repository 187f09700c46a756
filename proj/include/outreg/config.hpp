// Copyright (c) 2026 The outreg Authors. All Rights Reserved.
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

// Experiment configuration files: JSON with a schema_version field. Unknown
// keys anywhere are errors.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "outreg/dataio.hpp"
#include "outreg/mlp.hpp"
#include "outreg/trainer.hpp"

namespace outreg {

inline constexpr int kConfigSchemaVersion = 1;
inline constexpr const char* kDataRootEnv = "OUTREG_DATA_ROOT";

struct MnistSource {
  std::optional<std::string> root;  // falls back to $OUTREG_DATA_ROOT
};

struct SyntheticSource {
  std::vector<std::size_t> per_class;       // training examples per class
  std::vector<std::size_t> test_per_class;  // may be empty
  std::size_t dim = 2;
  double separation = 10.0;
  std::uint64_t seed = 1;
};

struct DatasetSpec {
  std::optional<MnistSource> mnist;
  std::optional<SyntheticSource> synthetic;
  std::size_t val_size = 0;
};

struct ExperimentConfig {
  DatasetSpec dataset;
  std::vector<std::size_t> hidden;
  TrainConfig train;
  std::vector<GridPoint> grid;  // empty for single runs
  std::string output_dir = "runs";
  std::vector<std::uint64_t> seeds = {1};
  int threads = 1;

  // Every nested invariant that can be checked without loading data.
  void validate() const;
  std::size_t classes() const;
  std::size_t input_dim() const;
  Architecture architecture() const;
};

ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);
nlohmann::json to_json(const ExperimentConfig& config);

nlohmann::json regularizer_to_json(const RegularizerSpec& spec);
RegularizerSpec regularizer_from_json(const nlohmann::json& j);
nlohmann::json train_to_json(const TrainConfig& config);

// Loads (or generates) the dataset and applies the validation split.
LabeledDataset load_dataset(const DatasetSpec& spec);

}  // namespace outreg
