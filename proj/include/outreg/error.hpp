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

#include <stdexcept>
#include <string>
#include <string_view>

namespace outreg {

enum class ErrorKind {
  invalid_input,
  invalid_label,
  invalid_config,
  invalid_mask,
  invalid_architecture,
  invalid_state,
  format,
  io,
  diverged,
  check_failed,
};

std::string_view to_string(ErrorKind kind);

// Base exception for everything the library throws on purpose. The kind is
// what the C API and CLI map to status/exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Non-finite loss or gradient during training.
class DivergedError : public Error {
 public:
  DivergedError(int epoch, long long step, const std::string& what);

  int epoch() const noexcept { return epoch_; }
  long long step() const noexcept { return step_; }

 private:
  int epoch_;
  long long step_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& message);

inline void require(bool condition, ErrorKind kind, const char* message) {
  if (!condition) fail(kind, message);
}

}  // namespace outreg
