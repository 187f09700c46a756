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

#include "outreg/regularizers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "outreg/error.hpp"

namespace outreg {

namespace {

// What a single row contributes. Smoothing uses `targets`; otherwise the
// target is onehot(label). The entropy penalty is -beta*H, or the hinge
// beta*max(0, gamma - H) when `hinge` is set.
struct Objective {
  const ProbVector* targets_prior = nullptr;
  double epsilon = 0.0;
  double beta = 0.0;
  bool entropy_term = false;
  bool hinge = false;
  double gamma = 0.0;
};

void check_batch(const Matrix& logits, std::span<const int> labels) {
  require(logits.rows() > 0, ErrorKind::invalid_input, "empty batch");
  require(logits.cols() >= 2, ErrorKind::invalid_input, "logits need at least 2 classes");
  require(static_cast<std::size_t>(logits.rows()) == labels.size(), ErrorKind::invalid_input,
          "label count does not match batch size");
  for (int y : labels) {
    if (y < 0 || y >= logits.cols()) {
      fail(ErrorKind::invalid_label, "label " + std::to_string(y) + " outside [0, " +
                                         std::to_string(logits.cols()) + ")");
    }
  }
  if (!logits.allFinite()) fail(ErrorKind::invalid_input, "logits contain non-finite values");
}

LossResult run_objective(const Matrix& logits, std::span<const int> labels, const Objective& obj,
                         std::span<const std::uint8_t> mask) {
  check_batch(logits, labels);
  const auto batch = logits.rows();
  const auto classes = static_cast<std::size_t>(logits.cols());
  const double batch_size = static_cast<double>(batch);

  LossResult result;
  result.grad_logits.resize(batch, logits.cols());
  std::vector<double> log_probs(classes);
  std::vector<double> probs(classes);
  std::vector<double> targets(classes);
  std::vector<double> entropy_grad(classes);
  double total = 0.0;

  for (Eigen::Index b = 0; b < batch; ++b) {
    const int y = labels[static_cast<std::size_t>(b)];
    if (!mask.empty() && mask[static_cast<std::size_t>(y)] == 0) {
      fail(ErrorKind::invalid_mask, "true label " + std::to_string(y) + " is masked");
    }
    std::span<const double> z(logits.row(b).data(), classes);
    std::span<double> grad(result.grad_logits.row(b).data(), classes);
    kernels::log_softmax(z, log_probs, mask);
    kernels::softmax(z, probs, mask);

    if (obj.targets_prior != nullptr) {
      const ProbVector t = smooth_targets(y, obj.epsilon, *obj.targets_prior);
      std::copy(t.values().begin(), t.values().end(), targets.begin());
    } else {
      std::fill(targets.begin(), targets.end(), 0.0);
      targets[static_cast<std::size_t>(y)] = 1.0;
    }

    double row_loss = 0.0;
    for (std::size_t i = 0; i < classes; ++i) {
      if (targets[i] == 0.0) continue;
      if (!mask.empty() && mask[i] == 0) {
        fail(ErrorKind::invalid_mask, "smoothing target puts mass on masked class " +
                                          std::to_string(i));
      }
      row_loss -= targets[i] * log_probs[i];
    }
    for (std::size_t i = 0; i < classes; ++i) {
      grad[i] = probs[i] - targets[i];
    }

    if (obj.entropy_term) {
      const double h = kernels::entropy_from_log_probs(log_probs);
      const bool active = !obj.hinge || h < obj.gamma;
      if (active) {
        kernels::entropy_grad_from_log_probs(log_probs, h, entropy_grad);
        row_loss = obj.hinge ? row_loss + obj.beta * (obj.gamma - h) : row_loss - obj.beta * h;
        for (std::size_t i = 0; i < classes; ++i) grad[i] -= obj.beta * entropy_grad[i];
      }
    }

    for (std::size_t i = 0; i < classes; ++i) grad[i] /= batch_size;
    total += row_loss;
  }
  result.loss = total / batch_size;
  return result;
}

void check_beta(double beta) {
  if (!(beta >= 0.0) || !std::isfinite(beta)) {
    fail(ErrorKind::invalid_config, "beta must be finite and >= 0, got " + std::to_string(beta));
  }
}

void check_epsilon(double epsilon) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) {
    fail(ErrorKind::invalid_config, "epsilon must lie in [0,1], got " + std::to_string(epsilon));
  }
}

void check_gamma(double gamma, std::size_t classes) {
  const double log_k = std::log(static_cast<double>(classes));
  if (!(gamma >= 0.0 && gamma <= log_k)) {
    fail(ErrorKind::invalid_config, "gamma must lie in [0, ln K = " + std::to_string(log_k) +
                                        "], got " + std::to_string(gamma));
  }
}

Objective objective_for(const RegularizerSpec& spec, std::size_t classes, std::int64_t step,
                        const ProbVector* prior) {
  Objective obj;
  switch (spec.kind) {
    case RegularizerKind::none:
    case RegularizerKind::label_noise:
      break;
    case RegularizerKind::confidence_penalty:
      obj.entropy_term = true;
      obj.beta = effective_beta(spec, step);
      break;
    case RegularizerKind::hinge_confidence_penalty:
      check_gamma(spec.gamma, classes);
      obj.entropy_term = true;
      obj.hinge = true;
      obj.beta = effective_beta(spec, step);
      obj.gamma = spec.gamma;
      break;
    case RegularizerKind::uniform_label_smoothing:
    case RegularizerKind::unigram_label_smoothing:
      obj.targets_prior = prior;
      obj.epsilon = spec.epsilon;
      break;
  }
  return obj;
}

}  // namespace

std::string_view to_string(RegularizerKind kind) {
  switch (kind) {
    case RegularizerKind::none: return "none";
    case RegularizerKind::confidence_penalty: return "confidence_penalty";
    case RegularizerKind::hinge_confidence_penalty: return "hinge_confidence_penalty";
    case RegularizerKind::uniform_label_smoothing: return "uniform_label_smoothing";
    case RegularizerKind::unigram_label_smoothing: return "unigram_label_smoothing";
    case RegularizerKind::label_noise: return "label_noise";
  }
  return "none";
}

std::optional<RegularizerKind> parse_regularizer_kind(std::string_view name) {
  for (auto kind : {RegularizerKind::none, RegularizerKind::confidence_penalty,
                    RegularizerKind::hinge_confidence_penalty,
                    RegularizerKind::uniform_label_smoothing,
                    RegularizerKind::unigram_label_smoothing, RegularizerKind::label_noise}) {
    if (to_string(kind) == name) return kind;
  }
  return std::nullopt;
}

std::string_view to_string(AnnealMode mode) {
  return mode == AnnealMode::constant ? "constant" : "linear_ramp";
}

std::optional<AnnealMode> parse_anneal_mode(std::string_view name) {
  if (name == "constant") return AnnealMode::constant;
  if (name == "linear_ramp") return AnnealMode::linear_ramp;
  return std::nullopt;
}

void RegularizerSpec::validate(std::size_t classes) const {
  require(classes >= 2, ErrorKind::invalid_config, "regularizer needs at least 2 classes");
  check_beta(beta);
  check_epsilon(epsilon);
  if (!(gamma >= 0.0)) fail(ErrorKind::invalid_config, "gamma must be >= 0");
  if (kind == RegularizerKind::hinge_confidence_penalty) check_gamma(gamma, classes);
  if (anneal.ramp_steps < 0) fail(ErrorKind::invalid_config, "ramp_steps must be >= 0");
  if (anneal.mode == AnnealMode::linear_ramp && anneal.ramp_steps == 0) {
    fail(ErrorKind::invalid_config, "linear_ramp annealing needs ramp_steps > 0");
  }
  const bool wants_prior = kind == RegularizerKind::unigram_label_smoothing;
  if (wants_prior != prior.has_value()) {
    fail(ErrorKind::invalid_config,
         wants_prior ? "unigram_label_smoothing needs a prior"
                     : "a prior is only meaningful for unigram_label_smoothing");
  }
  if (prior) {
    require(prior->size() == classes, ErrorKind::invalid_config,
            "prior length does not match the class count");
    try {
      ProbVector check(*prior);
    } catch (const Error& e) {
      fail(ErrorKind::invalid_config, std::string("prior is not a distribution: ") + e.what());
    }
  }
}

LossResult nll_loss(const Matrix& logits, std::span<const int> labels) {
  return run_objective(logits, labels, Objective{}, {});
}

LossResult confidence_penalty_loss(const Matrix& logits, std::span<const int> labels, double beta) {
  check_beta(beta);
  Objective obj;
  obj.entropy_term = true;
  obj.beta = beta;
  return run_objective(logits, labels, obj, {});
}

LossResult hinge_confidence_penalty_loss(const Matrix& logits, std::span<const int> labels,
                                         double beta, double gamma) {
  check_beta(beta);
  check_gamma(gamma, static_cast<std::size_t>(logits.cols()));
  Objective obj;
  obj.entropy_term = true;
  obj.hinge = true;
  obj.beta = beta;
  obj.gamma = gamma;
  return run_objective(logits, labels, obj, {});
}

ProbVector smooth_targets(int label, double epsilon, const ProbVector& prior) {
  check_epsilon(epsilon);
  const auto classes = prior.size();
  if (label < 0 || static_cast<std::size_t>(label) >= classes) {
    fail(ErrorKind::invalid_label, "label " + std::to_string(label) + " outside [0, " +
                                       std::to_string(classes) + ")");
  }
  std::vector<double> t(classes);
  for (std::size_t i = 0; i < classes; ++i) {
    const double onehot = static_cast<std::size_t>(label) == i ? 1.0 : 0.0;
    t[i] = (1.0 - epsilon) * onehot + epsilon * prior[i];
  }
  return ProbVector(std::move(t));
}

LossResult smoothed_ce_loss(const Matrix& logits, std::span<const int> labels, double epsilon,
                            const ProbVector& prior) {
  check_epsilon(epsilon);
  require(prior.size() == static_cast<std::size_t>(logits.cols()), ErrorKind::invalid_input,
          "prior length does not match the class count");
  Objective obj;
  obj.targets_prior = &prior;
  obj.epsilon = epsilon;
  return run_objective(logits, labels, obj, {});
}

UnigramPrior unigram_prior(std::span<const int> labels, std::size_t classes) {
  require(!labels.empty(), ErrorKind::invalid_input, "unigram prior needs at least one label");
  require(classes >= 2, ErrorKind::invalid_input, "unigram prior needs at least 2 classes");
  std::vector<double> counts(classes, 0.0);
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= classes) {
      fail(ErrorKind::invalid_label, "label " + std::to_string(y) + " outside [0, " +
                                         std::to_string(classes) + ")");
    }
    counts[static_cast<std::size_t>(y)] += 1.0;
  }
  ClassMask mask(classes);
  for (std::size_t i = 0; i < classes; ++i) mask[i] = counts[i] > 0.0 ? 1 : 0;
  return {ProbVector::renormalized(std::move(counts)), std::move(mask)};
}

int apply_label_noise(int label, std::size_t classes, double epsilon, std::mt19937_64& rng,
                      bool exclude_true_label) {
  check_epsilon(epsilon);
  require(classes >= 2, ErrorKind::invalid_input, "label noise needs at least 2 classes");
  if (label < 0 || static_cast<std::size_t>(label) >= classes) {
    fail(ErrorKind::invalid_label, "label " + std::to_string(label) + " outside class range");
  }
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  if (!(coin(rng) < epsilon)) return label;
  const int k = static_cast<int>(classes);
  if (!exclude_true_label) return std::uniform_int_distribution<int>(0, k - 1)(rng);
  const int draw = std::uniform_int_distribution<int>(0, k - 2)(rng);
  return draw >= label ? draw + 1 : draw;
}

double effective_beta(const RegularizerSpec& spec, std::int64_t step) {
  if (spec.anneal.mode == AnnealMode::constant || spec.anneal.ramp_steps <= 0) return spec.beta;
  const double frac = std::min(1.0, static_cast<double>(std::max<std::int64_t>(step, 0)) /
                                        static_cast<double>(spec.anneal.ramp_steps));
  return spec.beta * frac;
}

LossResult evaluate_loss(const RegularizerSpec& spec, const Matrix& logits,
                         std::span<const int> labels, std::int64_t step) {
  const auto classes = static_cast<std::size_t>(logits.cols());
  std::optional<ProbVector> prior;
  if (spec.kind == RegularizerKind::uniform_label_smoothing) {
    prior = ProbVector::uniform(classes);
  } else if (spec.kind == RegularizerKind::unigram_label_smoothing) {
    require(spec.prior.has_value(), ErrorKind::invalid_config,
            "unigram_label_smoothing needs a prior");
    require(spec.prior->size() == classes, ErrorKind::invalid_config,
            "prior length does not match the class count");
    prior = ProbVector(*spec.prior);
  }
  const Objective obj = objective_for(spec, classes, step, prior ? &*prior : nullptr);
  return run_objective(logits, labels, obj, {});
}

LossResult masked_loss(const RegularizerSpec& spec, const Matrix& logits,
                       std::span<const int> labels, const ClassMask& mask, std::int64_t step) {
  const auto classes = static_cast<std::size_t>(logits.cols());
  require(mask.size() == classes, ErrorKind::invalid_mask, "mask length does not match classes");
  const auto active = static_cast<std::size_t>(std::count_if(
      mask.begin(), mask.end(), [](std::uint8_t m) { return m != 0; }));
  require(active > 0, ErrorKind::invalid_mask, "every class is masked");

  std::optional<ProbVector> prior;
  if (spec.kind == RegularizerKind::uniform_label_smoothing) {
    // Uniform over the classes that remain.
    std::vector<double> w(classes);
    for (std::size_t i = 0; i < classes; ++i) w[i] = mask[i] != 0 ? 1.0 : 0.0;
    prior = ProbVector::renormalized(std::move(w));
  } else if (spec.kind == RegularizerKind::unigram_label_smoothing) {
    require(spec.prior.has_value(), ErrorKind::invalid_config,
            "unigram_label_smoothing needs a prior");
    require(spec.prior->size() == classes, ErrorKind::invalid_config,
            "prior length does not match the class count");
    prior = ProbVector(*spec.prior);
  }
  const Objective obj = objective_for(spec, classes, step, prior ? &*prior : nullptr);
  return run_objective(logits, labels, obj, mask);
}

}  // namespace outreg
