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

// Diagnostics over trained models and run outputs. File schemas:
//   metrics.csv    epoch,train_loss,grad_norm,val_error_pct
//   histogram.csv  bin_lo,bin_hi,count
//   summary.json   test_error_pct,best_epoch,seed,regularizer,hyperparams
// Column order is part of the contract.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "outreg/dataio.hpp"
#include "outreg/mlp.hpp"
#include "outreg/trainer.hpp"

namespace outreg {

inline constexpr std::size_t kDefaultHistogramBins = 50;

struct ConfidenceHistogram {
  std::vector<double> edges;  // bins + 1, strictly increasing over [0,1]
  std::vector<std::size_t> counts;
  std::string dataset_tag;
  std::string model_tag;

  std::size_t total() const;
  std::size_t bins() const { return counts.size(); }
  // Fraction of examples in the last bin.
  double top_bin_fraction() const;
};

struct EntropyStats {
  double mean = 0.0;
  double median = 0.0;
  double min = 0.0;
  double max = 0.0;
  std::size_t count = 0;
};

// Eval-mode max_i p_i and H(p) for every row of a split.
std::vector<double> max_probabilities(const MLPParameters& params, const LabeledDataset& data,
                                      Split split);
std::vector<double> output_entropies(const MLPParameters& params, const LabeledDataset& data,
                                     Split split);

ConfidenceHistogram histogram_of(std::span<const double> max_probs, std::size_t bins);
ConfidenceHistogram max_prob_histogram(const MLPParameters& params, const LabeledDataset& data,
                                       Split split, std::size_t bins = kDefaultHistogramBins);

EntropyStats summarize_entropies(std::vector<double> entropies);
EntropyStats entropy_stats(const MLPParameters& params, const LabeledDataset& data, Split split);

// Shortest decimal form that parses back to the same double.
std::string format_number(double v);

void write_metrics_csv(const std::filesystem::path& path, const RunMetrics& run);
std::vector<EpochRecord> read_metrics_csv(const std::filesystem::path& path);

void write_histogram_csv(const std::filesystem::path& path, const ConfidenceHistogram& hist);
ConfidenceHistogram read_histogram_csv(const std::filesystem::path& path);

nlohmann::ordered_json run_summary(const RunMetrics& run, const TrainConfig& config);
nlohmann::ordered_json entropy_stats_json(const EntropyStats& stats);
void write_json(const std::filesystem::path& path, const nlohmann::ordered_json& j);

// metrics.csv and summary.json, plus histogram.csv when a nonempty
// histogram is given.
void write_metrics(const std::filesystem::path& dir, const RunMetrics& run,
                   const TrainConfig& config,
                   const std::optional<ConfidenceHistogram>& histogram = std::nullopt);

}  // namespace outreg
