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

#include "outreg/math_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "outreg/error.hpp"

namespace outreg {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

bool active(std::span<const std::uint8_t> mask, std::size_t i) {
  return mask.empty() || mask[i] != 0;
}

}  // namespace

LogitVector::LogitVector(std::vector<double> values) : values_(std::move(values)) {
  require(values_.size() >= 2, ErrorKind::invalid_input, "logit vector needs at least 2 classes");
  for (double v : values_) {
    require(std::isfinite(v), ErrorKind::invalid_input, "logit vector has a non-finite entry");
  }
}

ProbVector::ProbVector(std::vector<double> values) : values_(std::move(values)) {
  require(values_.size() >= 2, ErrorKind::invalid_input, "probability vector needs at least 2 classes");
  double sum = 0.0;
  for (double v : values_) {
    if (!(v >= 0.0 && v <= 1.0)) {
      fail(ErrorKind::invalid_input, "probability entry outside [0,1]: " + std::to_string(v));
    }
    sum += v;
  }
  if (std::abs(sum - 1.0) > kSimplexTolerance) {
    fail(ErrorKind::invalid_input, "probabilities sum to " + std::to_string(sum) + ", not 1");
  }
}

ProbVector ProbVector::renormalized(std::vector<double> weights) {
  double sum = 0.0;
  for (double w : weights) {
    require(std::isfinite(w) && w >= 0.0, ErrorKind::invalid_input,
            "renormalize needs finite nonnegative weights");
    sum += w;
  }
  require(sum > 0.0, ErrorKind::invalid_input, "renormalize needs a positive total");
  for (double& w : weights) w /= sum;
  return ProbVector(std::move(weights));
}

ProbVector ProbVector::uniform(std::size_t classes) {
  require(classes >= 2, ErrorKind::invalid_input, "uniform distribution needs at least 2 classes");
  return ProbVector(std::vector<double>(classes, 1.0 / static_cast<double>(classes)));
}

namespace kernels {

void log_softmax(std::span<const double> z, std::span<double> out,
                 std::span<const std::uint8_t> mask) {
  double max_z = kNegInf;
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (active(mask, i)) max_z = std::max(max_z, z[i]);
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (active(mask, i)) sum += std::exp(z[i] - max_z);
  }
  const double log_norm = max_z + std::log(sum);
  for (std::size_t i = 0; i < z.size(); ++i) {
    out[i] = active(mask, i) ? z[i] - log_norm : kNegInf;
  }
}

void softmax(std::span<const double> z, std::span<double> out, std::span<const std::uint8_t> mask) {
  double max_z = kNegInf;
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (active(mask, i)) max_z = std::max(max_z, z[i]);
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    out[i] = active(mask, i) ? std::exp(z[i] - max_z) : 0.0;
    sum += out[i];
  }
  for (double& v : out) v /= sum;
}

// H = -m - sum p_i (lp_i - m) with m = max lp, which equals -sum p_i lp_i but
// is exact (ln K) for a uniform row.
double entropy_from_log_probs(std::span<const double> log_probs) {
  double m = kNegInf;
  for (double lp : log_probs) m = std::max(m, lp);
  double h = -m;
  for (double lp : log_probs) {
    if (lp == kNegInf) continue;
    h -= std::exp(lp) * (lp - m);
  }
  return h;
}

void entropy_grad_from_log_probs(std::span<const double> log_probs, double entropy,
                                 std::span<double> out) {
  for (std::size_t i = 0; i < log_probs.size(); ++i) {
    const double lp = log_probs[i];
    out[i] = lp == kNegInf ? 0.0 : std::exp(lp) * (-lp - entropy);
  }
}

}  // namespace kernels

std::vector<double> log_softmax(const LogitVector& z) {
  std::vector<double> out(z.size());
  kernels::log_softmax(z.values(), out);
  return out;
}

ProbVector softmax(const LogitVector& z) {
  std::vector<double> p(z.size());
  kernels::softmax(z.values(), p);
  return ProbVector(std::move(p));
}

double entropy(const ProbVector& p) {
  double h = 0.0;
  for (double v : p.values()) {
    if (v > 0.0) h -= v * std::log(v);
  }
  return h;
}

std::vector<double> entropy_grad_logits(const LogitVector& z) {
  std::vector<double> lp = log_softmax(z);
  std::vector<double> grad(z.size());
  kernels::entropy_grad_from_log_probs(lp, kernels::entropy_from_log_probs(lp), grad);
  return grad;
}

double kl_to_uniform(const ProbVector& p) {
  const double log_k = std::log(static_cast<double>(p.size()));
  double kl = 0.0;
  for (double v : p.values()) {
    if (v > 0.0) kl += v * (std::log(v) + log_k);
  }
  return std::max(kl, 0.0);
}

std::vector<double> kl_to_uniform_grad_logits(const LogitVector& z) {
  std::vector<double> lp = log_softmax(z);
  const double h = kernels::entropy_from_log_probs(lp);
  std::vector<double> grad(z.size());
  for (std::size_t i = 0; i < lp.size(); ++i) grad[i] = std::exp(lp[i]) * (lp[i] + h);
  return grad;
}

double kl_from_uniform(const ProbVector& p) {
  const double k = static_cast<double>(p.size());
  const double log_u = -std::log(k);
  double kl = 0.0;
  for (double v : p.values()) {
    if (v == 0.0) return std::numeric_limits<double>::infinity();
    kl += (log_u - std::log(v)) / k;
  }
  return std::max(kl, 0.0);
}

}  // namespace outreg
