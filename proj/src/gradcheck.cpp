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

#include "outreg/gradcheck.hpp"

#include <cmath>
#include <random>

#include "outreg/error.hpp"
#include "outreg/math_core.hpp"
#include "outreg/mlp.hpp"
#include "outreg/regularizers.hpp"

namespace outreg {

namespace {

constexpr double kPerturbation = 1e-2;
constexpr std::size_t kBatch = 4;
constexpr double kKinkMargin = 1e-3;

struct NamedSpec {
  std::string name;
  RegularizerSpec spec;
  bool masked = false;
};

std::vector<double> flatten(const Matrix& m) { return {m.data(), m.data() + m.size()}; }

Matrix unflatten(const std::vector<double>& v, Eigen::Index rows, Eigen::Index cols) {
  return Eigen::Map<const Matrix>(v.data(), rows, cols);
}

std::vector<double> flatten(const MLPParameters& p) {
  std::vector<double> out;
  for (const auto& l : p.layers) {
    out.insert(out.end(), l.weights.data(), l.weights.data() + l.weights.size());
    out.insert(out.end(), l.bias.data(), l.bias.data() + l.bias.size());
  }
  return out;
}

MLPParameters unflatten(const std::vector<double>& v, const Architecture& arch) {
  MLPParameters p = MLPParameters::zeros(arch);
  std::size_t pos = 0;
  for (auto& l : p.layers) {
    for (Eigen::Index i = 0; i < l.weights.size(); ++i) l.weights.data()[i] = v[pos++];
    for (Eigen::Index i = 0; i < l.bias.size(); ++i) l.bias.data()[i] = v[pos++];
  }
  return p;
}

std::vector<NamedSpec> loss_zoo(std::size_t classes, std::mt19937_64& rng) {
  std::vector<NamedSpec> zoo;
  RegularizerSpec s;
  zoo.push_back({"loss/nll", s});
  s.kind = RegularizerKind::confidence_penalty;
  s.beta = 1.0;
  zoo.push_back({"loss/confidence_penalty", s});
  s.anneal = {AnnealMode::linear_ramp, 100};
  zoo.push_back({"loss/confidence_penalty_annealed", s});
  s = {};
  s.kind = RegularizerKind::hinge_confidence_penalty;
  s.beta = 2.0;
  s.gamma = std::log(static_cast<double>(classes));
  zoo.push_back({"loss/hinge_confidence_penalty", s});
  s = {};
  s.kind = RegularizerKind::uniform_label_smoothing;
  s.epsilon = 0.1;
  zoo.push_back({"loss/uniform_label_smoothing", s});
  s = {};
  s.kind = RegularizerKind::unigram_label_smoothing;
  s.epsilon = 0.3;
  std::vector<double> w(classes);
  std::uniform_real_distribution<double> u(0.1, 1.0);
  for (double& x : w) x = u(rng);
  const ProbVector prior = ProbVector::renormalized(w);
  s.prior = std::vector<double>(prior.values().begin(), prior.values().end());
  zoo.push_back({"loss/unigram_label_smoothing", s});
  s = {};
  s.kind = RegularizerKind::confidence_penalty;
  s.beta = 0.5;
  zoo.push_back({"loss/masked_confidence_penalty", s, true});
  return zoo;
}

GradCheckResult make_result(std::string name) {
  GradCheckResult r;
  r.name = std::move(name);
  return r;
}

void record(GradCheckResult& r, std::vector<double> analytic, const std::vector<double>& numeric,
            const GradCheckOptions& opt) {
  if (opt.perturb_analytic) {
    for (double& a : analytic) a *= 1.0 + kPerturbation;
  }
  r.max_rel_error = std::max(r.max_rel_error, relative_error(analytic, numeric));
  ++r.instances;
}

Matrix random_logits(Eigen::Index rows, std::size_t classes, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 2.0);
  Matrix z(rows, static_cast<Eigen::Index>(classes));
  for (Eigen::Index i = 0; i < z.size(); ++i) z.data()[i] = n(rng);
  return z;
}

std::vector<int> random_labels(std::size_t n, std::size_t classes, std::mt19937_64& rng,
                               const ClassMask& mask = {}) {
  std::uniform_int_distribution<int> d(0, static_cast<int>(classes) - 1);
  std::vector<int> y(n);
  for (int& v : y) {
    do {
      v = d(rng);
    } while (!mask.empty() && mask[static_cast<std::size_t>(v)] == 0);
  }
  return y;
}

// True when some row's entropy sits close enough to the hinge threshold that
// a finite-difference stencil could straddle it. Same idea for ReLU inputs.
bool near_hinge(const RegularizerSpec& spec, const Matrix& z) {
  if (spec.kind != RegularizerKind::hinge_confidence_penalty) return false;
  std::vector<double> lp(static_cast<std::size_t>(z.cols()));
  for (Eigen::Index r = 0; r < z.rows(); ++r) {
    kernels::log_softmax({z.row(r).data(), lp.size()}, lp);
    if (std::abs(kernels::entropy_from_log_probs(lp) - spec.gamma) < kKinkMargin) return true;
  }
  return false;
}

bool near_relu_kink(const ForwardTrace& trace) {
  for (const auto& a : trace.pre_activations) {
    if (a.cwiseAbs().minCoeff() < kKinkMargin) return true;
  }
  return false;
}

LossResult eval_spec(const NamedSpec& ns, const Matrix& z, const std::vector<int>& y,
                     const ClassMask& mask, std::int64_t step) {
  return ns.masked ? masked_loss(ns.spec, z, y, mask, step) : evaluate_loss(ns.spec, z, y, step);
}

GradCheckResult check_entropy(const GradCheckOptions& opt, std::mt19937_64& rng) {
  auto r = make_result("math/entropy_grad_logits");
  for (std::size_t t = 0; t < opt.instances; ++t) {
    const Matrix z = random_logits(1, opt.classes, rng);
    const std::vector<double> x = flatten(z);
    const auto analytic = entropy_grad_logits(LogitVector(x));
    const auto numeric = numeric_gradient(
        [](const std::vector<double>& v) { return entropy(softmax(LogitVector(v))); }, x);
    record(r, analytic, numeric, opt);
  }
  return r;
}

GradCheckResult check_loss(const NamedSpec& ns, const GradCheckOptions& opt, std::mt19937_64& rng) {
  auto r = make_result(ns.name);
  const auto rows = static_cast<Eigen::Index>(kBatch);
  const auto cols = static_cast<Eigen::Index>(opt.classes);
  ClassMask mask;
  if (ns.masked) {
    mask.assign(opt.classes, 1);
    mask[opt.classes - 1] = 0;
  }
  const std::int64_t step = 50;
  while (r.instances < opt.instances) {
    const Matrix z = random_logits(rows, opt.classes, rng);
    if (near_hinge(ns.spec, z)) continue;
    const auto y = random_labels(kBatch, opt.classes, rng, mask);
    const auto analytic = flatten(eval_spec(ns, z, y, mask, step).grad_logits);
    const auto numeric = numeric_gradient(
        [&](const std::vector<double>& v) {
          return eval_spec(ns, unflatten(v, rows, cols), y, mask, step).loss;
        },
        flatten(z));
    record(r, analytic, numeric, opt);
  }
  return r;
}

GradCheckResult check_network(const NamedSpec& ns, const GradCheckOptions& opt,
                              std::mt19937_64& rng, double keep_prob) {
  const Architecture arch{4, {8, 8}, 3};
  auto r = make_result("mlp/" + ns.name.substr(ns.name.find('/') + 1) +
                       (keep_prob < 1.0 ? "+dropout" : ""));
  NamedSpec local = ns;
  if (local.spec.prior) {
    local.spec.prior = std::vector<double>{0.5, 0.3, 0.2};
  }
  if (local.spec.kind == RegularizerKind::hinge_confidence_penalty) {
    local.spec.gamma = std::log(3.0);
  }
  ClassMask mask;
  if (local.masked) mask = {1, 1, 0};
  std::normal_distribution<double> n(0.0, 1.0);
  const std::size_t instances = opt.instances;
  while (r.instances < instances) {
    MLPParameters params = init_params(arch, rng(), 0.5);
    for (auto& l : params.layers) {
      for (Eigen::Index i = 0; i < l.bias.size(); ++i) l.bias.data()[i] = 0.1 * n(rng);
    }
    Matrix x(static_cast<Eigen::Index>(kBatch + 1), 4);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = n(rng);
    const auto y = random_labels(kBatch + 1, 3, rng, mask);
    const std::uint64_t dropout_seed = rng();

    const auto loss_of = [&](const MLPParameters& p, LossResult* full) {
      DropoutState dropout(DropoutConfig{keep_prob, dropout_seed});
      ForwardResult fwd = forward(p, x, Mode::train, keep_prob < 1.0 ? &dropout : nullptr);
      LossResult lr = eval_spec(local, fwd.logits, y, mask, 50);
      if (full != nullptr) {
        *full = lr;
        return backward(*fwd.trace, p, lr.grad_logits);
      }
      return MLPGradients{};
    };
    LossResult base;
    {
      DropoutState dropout(DropoutConfig{keep_prob, dropout_seed});
      ForwardResult fwd = forward(params, x, Mode::train, keep_prob < 1.0 ? &dropout : nullptr);
      if (near_hinge(local.spec, fwd.logits) || near_relu_kink(*fwd.trace)) continue;
    }
    const MLPGradients grads = loss_of(params, &base);
    const auto numeric = numeric_gradient(
        [&](const std::vector<double>& v) {
          LossResult lr;
          loss_of(unflatten(v, arch), &lr);
          return lr.loss;
        },
        flatten(params));
    record(r, flatten(grads), numeric, opt);
  }
  return r;
}

}  // namespace

double relative_error(const std::vector<double>& analytic, const std::vector<double>& numeric) {
  require(analytic.size() == numeric.size(), ErrorKind::invalid_input,
          "gradient vectors differ in length");
  double diff = 0.0, na = 0.0, nn = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    diff += (analytic[i] - numeric[i]) * (analytic[i] - numeric[i]);
    na += analytic[i] * analytic[i];
    nn += numeric[i] * numeric[i];
  }
  return std::sqrt(diff) / std::max(std::sqrt(na) + std::sqrt(nn), 1e-12);
}

std::vector<double> numeric_gradient(const std::function<double(const std::vector<double>&)>& f,
                                     std::vector<double> x, double step) {
  std::vector<double> grad(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = x[i];
    x[i] = orig + step;
    const double up = f(x);
    x[i] = orig - step;
    const double down = f(x);
    x[i] = orig;
    grad[i] = (up - down) / (2.0 * step);
  }
  return grad;
}

std::vector<GradCheckResult> run_gradient_checks(const GradCheckOptions& opt) {
  require(opt.classes >= 2, ErrorKind::invalid_config, "gradcheck needs at least 2 classes");
  require(opt.instances >= 1, ErrorKind::invalid_config, "gradcheck needs at least 1 instance");
  std::mt19937_64 rng(opt.seed);
  std::vector<GradCheckResult> results;
  results.push_back(check_entropy(opt, rng));
  const auto zoo = loss_zoo(opt.classes, rng);
  for (const auto& ns : zoo) results.push_back(check_loss(ns, opt, rng));
  for (const auto& ns : zoo) results.push_back(check_network(ns, opt, rng, 1.0));
  results.push_back(check_network(zoo[1], opt, rng, 0.7));
  for (auto& r : results) r.passed = r.max_rel_error < opt.threshold;
  return results;
}

}  // namespace outreg
