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

#include "outreg/mlp.hpp"

#include <cmath>
#include <string>

#include "outreg/error.hpp"

namespace outreg {

void Architecture::validate() const {
  require(input_dim > 0, ErrorKind::invalid_architecture, "input dimension must be positive");
  require(classes >= 2, ErrorKind::invalid_architecture, "need at least 2 classes");
  for (std::size_t h : hidden) {
    require(h > 0, ErrorKind::invalid_architecture, "hidden layer of size 0");
  }
}

std::size_t Architecture::fan_in(std::size_t layer) const {
  return layer == 0 ? input_dim : hidden[layer - 1];
}

std::size_t Architecture::fan_out(std::size_t layer) const {
  return layer < hidden.size() ? hidden[layer] : classes;
}

MLPParameters MLPParameters::zeros(const Architecture& arch) {
  arch.validate();
  MLPParameters p;
  p.arch = arch;
  for (std::size_t l = 0; l < arch.num_layers(); ++l) {
    const auto in = static_cast<Eigen::Index>(arch.fan_in(l));
    const auto out = static_cast<Eigen::Index>(arch.fan_out(l));
    p.layers.push_back({Matrix::Zero(in, out), RowVector::Zero(out)});
  }
  return p;
}

std::size_t MLPParameters::parameter_count() const {
  std::size_t n = 0;
  for (const auto& layer : layers) n += layer.weights.size() + layer.bias.size();
  return n;
}

bool MLPParameters::all_finite() const {
  for (const auto& layer : layers) {
    if (!layer.weights.allFinite() || !layer.bias.allFinite()) return false;
  }
  return true;
}

MLPParameters init_params(const Architecture& arch, std::uint64_t seed, double stddev) {
  require(stddev >= 0.0 && std::isfinite(stddev), ErrorKind::invalid_config,
          "init stddev must be finite and >= 0");
  MLPParameters p = MLPParameters::zeros(arch);
  if (stddev == 0.0) return p;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, stddev);
  for (auto& layer : p.layers) {
    // Row-major storage order, so the draw sequence is fixed by the shape.
    for (Eigen::Index i = 0; i < layer.weights.size(); ++i) layer.weights.data()[i] = normal(rng);
  }
  return p;
}

DropoutState::DropoutState(const DropoutConfig& config)
    : keep_prob_(config.keep_prob), rng_(config.seed) {
  if (!(keep_prob_ > 0.0 && keep_prob_ <= 1.0)) {
    fail(ErrorKind::invalid_config, "dropout keep_prob must lie in (0,1], got " +
                                        std::to_string(keep_prob_));
  }
}

Matrix DropoutState::sample_mask(Eigen::Index rows, Eigen::Index cols) {
  Matrix mask(rows, cols);
  if (keep_prob_ == 1.0) {
    mask.setOnes();
    return mask;
  }
  std::bernoulli_distribution keep(keep_prob_);
  const double scale = 1.0 / keep_prob_;
  for (Eigen::Index i = 0; i < mask.size(); ++i) mask.data()[i] = keep(rng_) ? scale : 0.0;
  return mask;
}

namespace {

void check_input(const MLPParameters& params, const Matrix& x) {
  require(params.layers.size() == params.arch.num_layers(), ErrorKind::invalid_state,
          "parameter layers do not match the architecture");
  if (static_cast<std::size_t>(x.cols()) != params.arch.input_dim) {
    fail(ErrorKind::invalid_input, "input has " + std::to_string(x.cols()) +
                                       " features, model expects " +
                                       std::to_string(params.arch.input_dim));
  }
}

}  // namespace

ForwardResult forward(const MLPParameters& params, const Matrix& x, Mode mode,
                      DropoutState* dropout) {
  check_input(params, x);
  const bool training = mode == Mode::train;
  ForwardResult result;
  ForwardTrace trace;
  if (training) trace.arch = params.arch;

  Matrix h = x;
  const std::size_t n_hidden = params.arch.hidden.size();
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const auto& layer = params.layers[l];
    Matrix pre = h * layer.weights;
    pre.rowwise() += layer.bias;
    if (training) trace.inputs.push_back(std::move(h));
    if (l == n_hidden) {
      result.logits = std::move(pre);
      break;
    }
    h = pre.cwiseMax(0.0);
    if (training && dropout != nullptr) {
      Matrix mask = dropout->sample_mask(h.rows(), h.cols());
      h.array() *= mask.array();
      trace.dropout_masks.push_back(std::move(mask));
    }
    if (training) trace.pre_activations.push_back(std::move(pre));
  }
  if (training) result.trace = std::move(trace);
  return result;
}

Matrix logits(const MLPParameters& params, const Matrix& x) {
  return forward(params, x, Mode::eval).logits;
}

MLPGradients backward(const ForwardTrace& trace, const MLPParameters& params,
                      const Matrix& grad_logits) {
  require(trace.arch == params.arch, ErrorKind::invalid_state,
          "trace was produced by a different architecture");
  const std::size_t n_layers = params.layers.size();
  const std::size_t n_hidden = params.arch.hidden.size();
  require(trace.inputs.size() == n_layers && trace.pre_activations.size() == n_hidden,
          ErrorKind::invalid_state, "trace is incomplete");
  require(trace.dropout_masks.empty() || trace.dropout_masks.size() == n_hidden,
          ErrorKind::invalid_state, "trace dropout masks are incomplete");
  const Eigen::Index batch = trace.inputs.front().rows();
  require(grad_logits.rows() == batch &&
              static_cast<std::size_t>(grad_logits.cols()) == params.arch.classes,
          ErrorKind::invalid_state, "logit gradient shape does not match the trace");

  MLPGradients grads = MLPParameters::zeros(params.arch);
  Matrix delta = grad_logits;  // dL/d(pre-activation) of the current layer
  for (std::size_t l = n_layers; l-- > 0;) {
    grads.layers[l].weights.noalias() = trace.inputs[l].transpose() * delta;
    grads.layers[l].bias = delta.colwise().sum();
    if (l == 0) break;
    Matrix upstream = delta * params.layers[l].weights.transpose();
    if (!trace.dropout_masks.empty()) upstream.array() *= trace.dropout_masks[l - 1].array();
    const Matrix& pre = trace.pre_activations[l - 1];
    delta = (pre.array() > 0.0).select(upstream.array(), 0.0).matrix();
  }
  return grads;
}

int argmax_row(std::span<const double> row) {
  int best = 0;
  for (std::size_t i = 1; i < row.size(); ++i) {
    if (row[i] > row[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
  }
  return best;
}

std::vector<int> predict(const MLPParameters& params, const Matrix& x) {
  const Matrix z = logits(params, x);
  std::vector<int> out(static_cast<std::size_t>(z.rows()));
  for (Eigen::Index b = 0; b < z.rows(); ++b) {
    out[static_cast<std::size_t>(b)] =
        argmax_row({z.row(b).data(), static_cast<std::size_t>(z.cols())});
  }
  return out;
}

}  // namespace outreg
