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

// Central finite-difference checks of every analytic gradient in the
// library. Backs the `gradcheck` command.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace outreg {

inline constexpr double kFiniteDifferenceStep = 1e-5;

struct GradCheckOptions {
  std::size_t classes = 10;
  std::size_t instances = 50;
  std::uint64_t seed = 12345;
  double threshold = 1e-4;
  // Scales every analytic gradient by (1 + 1e-2) to prove the checks bite.
  bool perturb_analytic = false;
};

struct GradCheckResult {
  std::string name;
  double max_rel_error = 0.0;
  std::size_t instances = 0;
  bool passed = false;
};

// ||a - n|| / max(||a|| + ||n||, 1e-12), the usual symmetric relative error.
double relative_error(const std::vector<double>& analytic, const std::vector<double>& numeric);

// Central differences of f around x.
std::vector<double> numeric_gradient(const std::function<double(const std::vector<double>&)>& f,
                                     std::vector<double> x, double step = kFiniteDifferenceStep);

std::vector<GradCheckResult> run_gradient_checks(const GradCheckOptions& options);

}  // namespace outreg
