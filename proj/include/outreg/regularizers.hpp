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

// Training objectives over a batch of logits. Every loss is the batch mean of
// a per-example term and comes with its exact gradient with respect to the
// logits.

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "outreg/math_core.hpp"

namespace outreg {

enum class RegularizerKind {
  none,
  confidence_penalty,
  hinge_confidence_penalty,
  uniform_label_smoothing,
  unigram_label_smoothing,
  label_noise,
};

std::string_view to_string(RegularizerKind kind);
std::optional<RegularizerKind> parse_regularizer_kind(std::string_view name);

enum class AnnealMode { constant, linear_ramp };

std::string_view to_string(AnnealMode mode);
std::optional<AnnealMode> parse_anneal_mode(std::string_view name);

struct AnnealSchedule {
  AnnealMode mode = AnnealMode::constant;
  std::int64_t ramp_steps = 0;
};

struct RegularizerSpec {
  RegularizerKind kind = RegularizerKind::none;
  double beta = 0.0;     // penalty weight
  double gamma = 0.0;    // entropy threshold (nats), hinge only
  double epsilon = 0.0;  // smoothing or noise mass
  std::optional<std::vector<double>> prior;  // unigram smoothing only
  AnnealSchedule anneal;
  bool exclude_true_label = false;  // label noise never redraws the clean label
  bool mask_unseen_labels = false;  // mask classes absent from the training labels

  // Throws invalid_config if any field is out of range for `classes`.
  void validate(std::size_t classes) const;
};

struct LossResult {
  double loss = 0.0;
  Matrix grad_logits;
};

// Mean negative log-likelihood. grad row = (softmax(z) - onehot(y)) / B.
LossResult nll_loss(const Matrix& logits, std::span<const int> labels);

// nll - beta * mean H(softmax(z)).
LossResult confidence_penalty_loss(const Matrix& logits, std::span<const int> labels, double beta);

// nll + beta * mean max(0, gamma - H). The hinge is inactive at H == gamma.
LossResult hinge_confidence_penalty_loss(const Matrix& logits, std::span<const int> labels,
                                         double beta, double gamma);

// (1 - epsilon) onehot(y) + epsilon prior.
ProbVector smooth_targets(int label, double epsilon, const ProbVector& prior);

// Cross-entropy against smoothed targets. grad row = (softmax(z) - t) / B.
LossResult smoothed_ce_loss(const Matrix& logits, std::span<const int> labels, double epsilon,
                            const ProbVector& prior);

struct UnigramPrior {
  ProbVector prior;
  ClassMask mask;  // 1 where the class occurs at least once
};

UnigramPrior unigram_prior(std::span<const int> labels, std::size_t classes);

// With probability epsilon, replaces `label` by a uniform draw over all classes
// (or over the other classes when exclude_true_label is set).
int apply_label_noise(int label, std::size_t classes, double epsilon, std::mt19937_64& rng,
                      bool exclude_true_label = false);

// beta for constant schedules; beta * min(1, step / ramp_steps) for ramps.
double effective_beta(const RegularizerSpec& spec, std::int64_t step);

// Evaluates the loss selected by `spec` at training step `step`. Label noise
// is applied to the labels beforehand by the caller, so it evaluates as nll.
LossResult evaluate_loss(const RegularizerSpec& spec, const Matrix& logits,
                         std::span<const int> labels, std::int64_t step = 0);

// As evaluate_loss, but masked classes are removed from the softmax. Their
// probabilities and gradients are exactly 0.
LossResult masked_loss(const RegularizerSpec& spec, const Matrix& logits,
                       std::span<const int> labels, const ClassMask& mask,
                       std::int64_t step = 0);

}  // namespace outreg
