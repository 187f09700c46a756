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

#include "outreg/error.hpp"

namespace outreg {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_input: return "invalid_input";
    case ErrorKind::invalid_label: return "invalid_label";
    case ErrorKind::invalid_config: return "invalid_config";
    case ErrorKind::invalid_mask: return "invalid_mask";
    case ErrorKind::invalid_architecture: return "invalid_architecture";
    case ErrorKind::invalid_state: return "invalid_state";
    case ErrorKind::format: return "format";
    case ErrorKind::io: return "io";
    case ErrorKind::diverged: return "diverged";
    case ErrorKind::check_failed: return "check_failed";
  }
  return "unknown";
}

DivergedError::DivergedError(int epoch, long long step, const std::string& what)
    : Error(ErrorKind::diverged, "training diverged at epoch " + std::to_string(epoch) +
                                     ", step " + std::to_string(step) + ": " + what),
      epoch_(epoch),
      step_(step) {}

void fail(ErrorKind kind, const std::string& message) { throw Error(kind, message); }

}  // namespace outreg
