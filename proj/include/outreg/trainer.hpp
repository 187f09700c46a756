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

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "outreg/dataio.hpp"
#include "outreg/mlp.hpp"
#include "outreg/regularizers.hpp"

namespace outreg {

struct TrainConfig {
  double learning_rate = 0.05;
  int max_epochs = 100;
  int batch_size = 64;
  int early_stop_patience = 10;
  std::optional<double> clip_norm;
  std::optional<double> dropout_keep_prob;
  double init_stddev = kDefaultInitStddev;
  // After early stopping, retrain from scratch on train+validation for the
  // best epoch count and report test error of that model.
  bool retrain_on_full = false;
  RegularizerSpec regularizer;
  std::uint64_t seed = 1;

  void validate(std::size_t classes) const;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;   // mean over training examples
  double grad_norm = 0.0;    // mean global gradient norm over the epoch's steps
  double val_error_pct = 0.0;
};

struct RunMetrics {
  std::vector<EpochRecord> epochs;
  double test_error_pct = 0.0;
  double best_val_error_pct = 0.0;
  int best_epoch = 0;
  int epochs_run = 0;
  double wall_time_s = 0.0;  // informational; never written to metric files
};

struct TrainResult {
  MLPParameters params;
  RunMetrics metrics;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

// w <- w - lr * g. Throws diverged on non-finite gradients.
void sgd_step(MLPParameters& params, const MLPGradients& grads, double learning_rate);

// L2 norm of all gradient entries taken together.
double global_grad_norm(const MLPGradients& grads);

// Rescales so the global norm is at most clip_norm. Returns the norm before
// clipping.
double clip_by_global_norm(MLPGradients& grads, double clip_norm);

// Classification error (%) on rows [begin, end). Masked classes never win.
double error_pct(const MLPParameters& params, const LabeledDataset& data, Split split,
                 const ClassMask& mask = {});

// SGD with per-epoch shuffling and early stopping on validation error.
// Returns the best-validation parameters. Needs a nonempty validation split.
TrainResult train_run(const TrainConfig& config, const LabeledDataset& dataset,
                      const Architecture& arch, const EpochCallback& on_epoch = {});

struct GridPoint {
  RegularizerSpec regularizer;
  std::optional<double> learning_rate;
  std::optional<double> dropout_keep_prob;
};

struct GridResult {
  std::size_t index = 0;
  TrainConfig config;
  std::optional<RunMetrics> metrics;
  std::string error;  // set when the run failed
};

TrainConfig apply_grid_point(const TrainConfig& base, const GridPoint& point);

// One train_run per grid point, sorted by best validation error (ties and
// failures by grid order, failures last). Failures do not stop the grid.
std::vector<GridResult> grid_search(const TrainConfig& base, const std::vector<GridPoint>& grid,
                                    const LabeledDataset& dataset, const Architecture& arch,
                                    int threads = 1);
std::vector<GridResult> grid_search(const TrainConfig& base,
                                    const std::vector<RegularizerSpec>& grid,
                                    const LabeledDataset& dataset, const Architecture& arch,
                                    int threads = 1);

}  // namespace outreg
