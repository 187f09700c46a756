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

// Softmax-family primitives and entropy/KL quantities. All logs are natural
// (nats). Every function here is pure.

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace outreg {

// Batches of logits/gradients are row-major, one example per row.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::Matrix<double, 1, Eigen::Dynamic>;

// One byte per class; nonzero means the class is active. An empty mask means
// every class is active.
using ClassMask = std::vector<std::uint8_t>;

inline constexpr double kSimplexTolerance = 1e-9;

// Pre-softmax class scores. Finite, at least two classes.
class LogitVector {
 public:
  explicit LogitVector(std::vector<double> values);

  std::span<const double> values() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }

 private:
  std::vector<double> values_;
};

// A point on the probability simplex, validated to kSimplexTolerance.
class ProbVector {
 public:
  explicit ProbVector(std::vector<double> values);

  // Divides a nonnegative, finite, positive-sum vector by its sum. The only
  // place inputs are rescaled onto the simplex.
  static ProbVector renormalized(std::vector<double> weights);
  static ProbVector uniform(std::size_t classes);

  std::span<const double> values() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }

 private:
  std::vector<double> values_;
};

std::vector<double> log_softmax(const LogitVector& z);
ProbVector softmax(const LogitVector& z);

// H(p) = -sum p_i log p_i with 0 log 0 = 0. Range [0, ln K].
double entropy(const ProbVector& p);

// dH/dz_i = p_i (-log p_i - H), p = softmax(z).
std::vector<double> entropy_grad_logits(const LogitVector& z);

// D_KL(p || u) = sum p_i log(K p_i).
double kl_to_uniform(const ProbVector& p);

// Gradient of D_KL(softmax(z) || u) with respect to z: p_i (log p_i + H).
std::vector<double> kl_to_uniform_grad_logits(const LogitVector& z);

// D_KL(u || p) = sum (1/K) log((1/K) / p_i). +infinity if any p_i is 0.
double kl_from_uniform(const ProbVector& p);

// Unchecked row kernels shared by the loss and model code. `mask` may be
// empty; masked classes get log-probability -inf and contribute nothing.
namespace kernels {

void log_softmax(std::span<const double> z, std::span<double> out,
                 std::span<const std::uint8_t> mask = {});

// exp(z - max) / sum over active entries; masked entries get 0.
void softmax(std::span<const double> z, std::span<double> out,
             std::span<const std::uint8_t> mask = {});

// Entropy of exp(log_probs), skipping -inf entries.
double entropy_from_log_probs(std::span<const double> log_probs);

// Writes p_i(-log p_i - H) given log-probabilities and their entropy.
void entropy_grad_from_log_probs(std::span<const double> log_probs, double entropy,
                                 std::span<double> out);

}  // namespace kernels

}  // namespace outreg
