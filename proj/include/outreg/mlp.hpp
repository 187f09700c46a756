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

// Fully-connected ReLU classifier: affine+ReLU hidden layers followed by an
// affine output layer. Forward and backward passes are written out by hand.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <vector>

#include "outreg/math_core.hpp"

namespace outreg {

struct Architecture {
  std::size_t input_dim = 0;
  std::vector<std::size_t> hidden;  // empty means a linear softmax model
  std::size_t classes = 0;

  // Throws invalid_architecture on zero-sized layers or fewer than 2 classes.
  void validate() const;
  std::size_t num_layers() const { return hidden.size() + 1; }
  std::size_t fan_in(std::size_t layer) const;
  std::size_t fan_out(std::size_t layer) const;

  friend bool operator==(const Architecture&, const Architecture&) = default;
};

struct DenseLayer {
  Matrix weights;  // fan_in x fan_out
  RowVector bias;  // 1 x fan_out
};

struct MLPParameters {
  Architecture arch;
  std::vector<DenseLayer> layers;

  // Zero-valued parameters with the shapes of `arch`.
  static MLPParameters zeros(const Architecture& arch);

  std::size_t parameter_count() const;
  bool all_finite() const;
};

// Gradients share the parameter layout.
using MLPGradients = MLPParameters;

inline constexpr double kDefaultInitStddev = 0.01;

// Weights ~ N(0, stddev^2), biases 0. Deterministic for a given seed.
MLPParameters init_params(const Architecture& arch, std::uint64_t seed,
                          double stddev = kDefaultInitStddev);

struct DropoutConfig {
  double keep_prob = 1.0;  // applied to hidden activations only
  std::uint64_t seed = 0;
};

// Mask stream for training-mode forward passes.
class DropoutState {
 public:
  explicit DropoutState(const DropoutConfig& config);

  double keep_prob() const noexcept { return keep_prob_; }
  // Inverted-dropout mask: entries are 0 or 1/keep_prob.
  Matrix sample_mask(Eigen::Index rows, Eigen::Index cols);

 private:
  double keep_prob_;
  std::mt19937_64 rng_;
};

struct ForwardTrace {
  Architecture arch;
  std::vector<Matrix> inputs;       // input to each layer
  std::vector<Matrix> pre_activations;  // hidden layers only
  std::vector<Matrix> dropout_masks;    // hidden layers; empty when not applied
};

struct ForwardResult {
  Matrix logits;
  std::optional<ForwardTrace> trace;  // present only in training mode
};

enum class Mode { eval, train };

// In train mode the trace is kept and, if `dropout` is given, each hidden
// activation is multiplied by a fresh inverted-dropout mask.
ForwardResult forward(const MLPParameters& params, const Matrix& x, Mode mode,
                      DropoutState* dropout = nullptr);

// Eval-mode logits.
Matrix logits(const MLPParameters& params, const Matrix& x);

// Parameter gradients of a scalar loss whose logit gradient is `grad_logits`.
MLPGradients backward(const ForwardTrace& trace, const MLPParameters& params,
                      const Matrix& grad_logits);

// Argmax of eval-mode logits, ties to the lowest index.
std::vector<int> predict(const MLPParameters& params, const Matrix& x);
int argmax_row(std::span<const double> row);

// Binary checkpoint: "ORCKPT01", little-endian u64 dims, raw IEEE-754 doubles.
void save_checkpoint(const MLPParameters& params, const std::filesystem::path& path);
MLPParameters load_checkpoint(const std::filesystem::path& path);

}  // namespace outreg
