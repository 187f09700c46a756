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

// End-to-end experiment commands. Each writes only under its output
// directory, loads and checks all inputs before creating any output, and
// throws outreg::Error on failure.
//
// Per-run directory layout (train: <out>/seed_<s>/, gridsearch:
// <out>/point_<iii>/seed_<s>/):
//   checkpoint.bin  histogram.csv  entropy_stats.json  metrics.csv  summary.json
// summary.json is written last and marks the run complete.

#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "outreg/config.hpp"
#include "outreg/dataio.hpp"
#include "outreg/gradcheck.hpp"

namespace outreg {

using LogFn = std::function<void(std::string_view)>;

// Resolved settings as pretty-printed JSON.
std::string describe(const ExperimentConfig& config);

void cmd_train(const ExperimentConfig& config, const LogFn& log = {});
void cmd_gridsearch(const ExperimentConfig& config, const LogFn& log = {});

// Logs one line per check. Throws check_failed if any check exceeds the
// threshold.
std::vector<GradCheckResult> cmd_gradcheck(const GradCheckOptions& options, const LogFn& log = {});

void cmd_histogram(const std::filesystem::path& checkpoint, const ExperimentConfig& config,
                   Split split, std::size_t bins, const std::filesystem::path& out_dir,
                   const LogFn& log = {});

}  // namespace outreg
