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

#include "outreg/outreg.h"

#include <cstdlib>
#include <cstring>
#include <limits>
#include <new>
#include <string>

#include "outreg/commands.hpp"
#include "outreg/config.hpp"
#include "outreg/error.hpp"
#include "outreg/math_core.hpp"
#include "outreg/mlp.hpp"
#include "outreg/regularizers.hpp"

struct outreg_experiment {
  outreg::ExperimentConfig config;
  outreg_log_fn log = nullptr;
  void* log_user = nullptr;
};

struct outreg_model {
  outreg::MLPParameters params;
};

namespace {

using namespace outreg;

thread_local std::string g_last_error;

outreg_status status_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_config: return OUTREG_ERROR_CONFIG;
    case ErrorKind::format: return OUTREG_ERROR_DATA;
    case ErrorKind::diverged: return OUTREG_ERROR_DIVERGED;
    case ErrorKind::check_failed: return OUTREG_ERROR_CHECK_FAILED;
    case ErrorKind::io: return OUTREG_ERROR_IO;
    case ErrorKind::invalid_input:
    case ErrorKind::invalid_label:
    case ErrorKind::invalid_mask:
    case ErrorKind::invalid_architecture:
    case ErrorKind::invalid_state: return OUTREG_ERROR_INVALID_ARGUMENT;
  }
  return OUTREG_ERROR_INTERNAL;
}

template <typename Fn>
outreg_status guarded(Fn&& fn) noexcept {
  try {
    g_last_error.clear();
    fn();
    return OUTREG_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return status_for(e.kind());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
  } catch (const std::exception& e) {
    g_last_error = e.what();
  } catch (...) {
    g_last_error = "unknown error";
  }
  return OUTREG_ERROR_INTERNAL;
}

void need(const void* p, const char* what) {
  if (p == nullptr) fail(ErrorKind::invalid_input, std::string(what) + " is NULL");
}

std::vector<double> copy(const double* p, std::size_t n) { return {p, p + n}; }

RegularizerSpec from_c(const outreg_regularizer& c) {
  RegularizerSpec s;
  switch (c.kind) {
    case OUTREG_REG_NONE: s.kind = RegularizerKind::none; break;
    case OUTREG_REG_CONFIDENCE_PENALTY: s.kind = RegularizerKind::confidence_penalty; break;
    case OUTREG_REG_HINGE_CONFIDENCE_PENALTY:
      s.kind = RegularizerKind::hinge_confidence_penalty;
      break;
    case OUTREG_REG_UNIFORM_LABEL_SMOOTHING:
      s.kind = RegularizerKind::uniform_label_smoothing;
      break;
    case OUTREG_REG_UNIGRAM_LABEL_SMOOTHING:
      s.kind = RegularizerKind::unigram_label_smoothing;
      break;
    case OUTREG_REG_LABEL_NOISE: s.kind = RegularizerKind::label_noise; break;
    default: fail(ErrorKind::invalid_config, "unknown regularizer kind");
  }
  s.beta = c.beta;
  s.gamma = c.gamma;
  s.epsilon = c.epsilon;
  if (c.prior != nullptr) s.prior = copy(c.prior, c.prior_len);
  switch (c.anneal_mode) {
    case OUTREG_ANNEAL_CONSTANT: s.anneal.mode = AnnealMode::constant; break;
    case OUTREG_ANNEAL_LINEAR_RAMP: s.anneal.mode = AnnealMode::linear_ramp; break;
    default: fail(ErrorKind::invalid_config, "unknown anneal mode");
  }
  s.anneal.ramp_steps = c.ramp_steps;
  s.exclude_true_label = c.exclude_true_label != 0;
  return s;
}

LogFn bridge(outreg_log_fn fn, void* user) {
  if (fn == nullptr) return {};
  return [fn, user](std::string_view line) { fn(user, std::string(line).c_str()); };
}

Split split_from_c(outreg_split s) {
  switch (s) {
    case OUTREG_SPLIT_TRAIN: return Split::train;
    case OUTREG_SPLIT_VALIDATION: return Split::validation;
    case OUTREG_SPLIT_TEST: return Split::test;
  }
  fail(ErrorKind::invalid_input, "unknown split");
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

Matrix batch_matrix(const double* data, std::size_t rows, std::size_t cols) {
  return Eigen::Map<const Matrix>(data, static_cast<Eigen::Index>(rows),
                                  static_cast<Eigen::Index>(cols));
}

}  // namespace

extern "C" {

const char* outreg_version(void) { return "1.0.0"; }

const char* outreg_status_name(outreg_status status) {
  switch (status) {
    case OUTREG_OK: return "ok";
    case OUTREG_ERROR_INTERNAL: return "internal_error";
    case OUTREG_ERROR_CONFIG: return "config_error";
    case OUTREG_ERROR_DATA: return "data_error";
    case OUTREG_ERROR_DIVERGED: return "divergence";
    case OUTREG_ERROR_CHECK_FAILED: return "check_failure";
    case OUTREG_ERROR_INVALID_ARGUMENT: return "invalid_argument";
    case OUTREG_ERROR_IO: return "io_error";
  }
  return "unknown";
}

const char* outreg_last_error(void) { return g_last_error.c_str(); }

void outreg_string_free(char* s) { std::free(s); }

outreg_status outreg_log_softmax(const double* logits, size_t classes, double* out) {
  return guarded([&] {
    need(logits, "logits");
    need(out, "out");
    const auto v = log_softmax(LogitVector(copy(logits, classes)));
    std::copy(v.begin(), v.end(), out);
  });
}

outreg_status outreg_softmax(const double* logits, size_t classes, double* out) {
  return guarded([&] {
    need(logits, "logits");
    need(out, "out");
    const auto p = softmax(LogitVector(copy(logits, classes)));
    std::copy(p.values().begin(), p.values().end(), out);
  });
}

outreg_status outreg_entropy(const double* probs, size_t classes, double* out) {
  return guarded([&] {
    need(probs, "probs");
    need(out, "out");
    *out = entropy(ProbVector(copy(probs, classes)));
  });
}

outreg_status outreg_entropy_grad_logits(const double* logits, size_t classes, double* out) {
  return guarded([&] {
    need(logits, "logits");
    need(out, "out");
    const auto g = entropy_grad_logits(LogitVector(copy(logits, classes)));
    std::copy(g.begin(), g.end(), out);
  });
}

outreg_status outreg_kl_to_uniform(const double* probs, size_t classes, double* out) {
  return guarded([&] {
    need(probs, "probs");
    need(out, "out");
    *out = kl_to_uniform(ProbVector(copy(probs, classes)));
  });
}

outreg_status outreg_kl_from_uniform(const double* probs, size_t classes, double* out) {
  return guarded([&] {
    need(probs, "probs");
    need(out, "out");
    *out = kl_from_uniform(ProbVector(copy(probs, classes)));
  });
}

void outreg_regularizer_init(outreg_regularizer* spec) {
  if (spec == nullptr) return;
  *spec = outreg_regularizer{};
  spec->kind = OUTREG_REG_NONE;
  spec->anneal_mode = OUTREG_ANNEAL_CONSTANT;
}

outreg_status outreg_loss(const outreg_regularizer* spec, const double* logits, size_t batch,
                          size_t classes, const int32_t* labels, const unsigned char* mask,
                          int64_t step, double* loss_out, double* grad_out) {
  return guarded([&] {
    need(spec, "spec");
    need(logits, "logits");
    need(labels, "labels");
    need(loss_out, "loss_out");
    const RegularizerSpec s = from_c(*spec);
    s.validate(classes);
    const Matrix z = batch_matrix(logits, batch, classes);
    const std::vector<int> y(labels, labels + batch);
    const LossResult r = mask == nullptr
                             ? evaluate_loss(s, z, y, step)
                             : masked_loss(s, z, y, ClassMask(mask, mask + classes), step);
    *loss_out = r.loss;
    if (grad_out != nullptr) std::copy(r.grad_logits.data(), r.grad_logits.data() + r.grad_logits.size(), grad_out);
  });
}

outreg_status outreg_effective_beta(const outreg_regularizer* spec, int64_t step, double* out) {
  return guarded([&] {
    need(spec, "spec");
    need(out, "out");
    require(step >= 0, ErrorKind::invalid_input, "step must be >= 0");
    *out = effective_beta(from_c(*spec), step);
  });
}

outreg_status outreg_experiment_load(const char* path, outreg_experiment** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = nullptr;
    auto exp = std::make_unique<outreg_experiment>();
    exp->config = load_config(path);
    *out = exp.release();
  });
}

outreg_status outreg_experiment_parse(const char* json_text, outreg_experiment** out) {
  return guarded([&] {
    need(json_text, "json_text");
    need(out, "out");
    *out = nullptr;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
      fail(ErrorKind::invalid_config, e.what());
    }
    auto exp = std::make_unique<outreg_experiment>();
    exp->config = parse_config(j);
    *out = exp.release();
  });
}

void outreg_experiment_free(outreg_experiment* exp) { delete exp; }

outreg_status outreg_experiment_set_output_dir(outreg_experiment* exp, const char* dir) {
  return guarded([&] {
    need(exp, "experiment");
    need(dir, "dir");
    require(dir[0] != '\0', ErrorKind::invalid_config, "output directory must not be empty");
    exp->config.output_dir = dir;
  });
}

outreg_status outreg_experiment_set_seeds(outreg_experiment* exp, const uint64_t* seeds,
                                          size_t count) {
  return guarded([&] {
    need(exp, "experiment");
    need(seeds, "seeds");
    require(count > 0, ErrorKind::invalid_config, "seeds must not be empty");
    exp->config.seeds.assign(seeds, seeds + count);
  });
}

outreg_status outreg_experiment_set_threads(outreg_experiment* exp, int threads) {
  return guarded([&] {
    need(exp, "experiment");
    require(threads >= 1, ErrorKind::invalid_config, "threads must be >= 1");
    exp->config.threads = threads;
  });
}

void outreg_experiment_set_log(outreg_experiment* exp, outreg_log_fn fn, void* user) {
  if (exp == nullptr) return;
  exp->log = fn;
  exp->log_user = user;
}

outreg_status outreg_experiment_describe(const outreg_experiment* exp, char** out) {
  return guarded([&] {
    need(exp, "experiment");
    need(out, "out");
    *out = dup_string(describe(exp->config));
  });
}

outreg_status outreg_experiment_train(outreg_experiment* exp) {
  return guarded([&] {
    need(exp, "experiment");
    cmd_train(exp->config, bridge(exp->log, exp->log_user));
  });
}

outreg_status outreg_experiment_gridsearch(outreg_experiment* exp) {
  return guarded([&] {
    need(exp, "experiment");
    cmd_gridsearch(exp->config, bridge(exp->log, exp->log_user));
  });
}

outreg_status outreg_experiment_histogram(const outreg_experiment* exp, const char* checkpoint,
                                          outreg_split split, size_t bins, const char* out_dir) {
  return guarded([&] {
    need(exp, "experiment");
    need(checkpoint, "checkpoint");
    need(out_dir, "out_dir");
    cmd_histogram(checkpoint, exp->config, split_from_c(split), bins, out_dir,
                  bridge(exp->log, exp->log_user));
  });
}

void outreg_gradcheck_options_init(outreg_gradcheck_options* options) {
  if (options == nullptr) return;
  const GradCheckOptions d;
  options->classes = d.classes;
  options->instances = d.instances;
  options->seed = d.seed;
  options->threshold = d.threshold;
  options->perturb_analytic = d.perturb_analytic ? 1 : 0;
}

outreg_status outreg_gradcheck(const outreg_gradcheck_options* options, outreg_log_fn fn,
                               void* user) {
  return guarded([&] {
    need(options, "options");
    GradCheckOptions o;
    o.classes = options->classes;
    o.instances = options->instances;
    o.seed = options->seed;
    o.threshold = options->threshold;
    o.perturb_analytic = options->perturb_analytic != 0;
    cmd_gradcheck(o, bridge(fn, user));
  });
}

outreg_status outreg_model_init(size_t input_dim, const size_t* hidden, size_t n_hidden,
                                size_t classes, uint64_t seed, double stddev,
                                outreg_model** out) {
  return guarded([&] {
    need(out, "out");
    *out = nullptr;
    if (n_hidden > 0) need(hidden, "hidden");
    Architecture arch{input_dim, std::vector<std::size_t>(hidden, hidden + n_hidden), classes};
    try {
      arch.validate();
    } catch (const Error& e) {
      fail(ErrorKind::invalid_config, e.what());
    }
    auto model = std::make_unique<outreg_model>();
    model->params = init_params(arch, seed, stddev);
    *out = model.release();
  });
}

outreg_status outreg_model_load(const char* path, outreg_model** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = nullptr;
    auto model = std::make_unique<outreg_model>();
    model->params = load_checkpoint(path);
    *out = model.release();
  });
}

outreg_status outreg_model_save(const outreg_model* model, const char* path) {
  return guarded([&] {
    need(model, "model");
    need(path, "path");
    save_checkpoint(model->params, path);
  });
}

void outreg_model_free(outreg_model* model) { delete model; }

outreg_status outreg_model_shape(const outreg_model* model, size_t* input_dim, size_t* classes,
                                 size_t* parameter_count) {
  return guarded([&] {
    need(model, "model");
    if (input_dim != nullptr) *input_dim = model->params.arch.input_dim;
    if (classes != nullptr) *classes = model->params.arch.classes;
    if (parameter_count != nullptr) *parameter_count = model->params.parameter_count();
  });
}

outreg_status outreg_model_logits(const outreg_model* model, const double* x, size_t batch,
                                  size_t input_dim, double* out) {
  return guarded([&] {
    need(model, "model");
    need(x, "x");
    need(out, "out");
    const Matrix z = logits(model->params, batch_matrix(x, batch, input_dim));
    std::copy(z.data(), z.data() + z.size(), out);
  });
}

outreg_status outreg_model_predict(const outreg_model* model, const double* x, size_t batch,
                                   size_t input_dim, int32_t* out) {
  return guarded([&] {
    need(model, "model");
    need(x, "x");
    need(out, "out");
    const auto y = predict(model->params, batch_matrix(x, batch, input_dim));
    std::copy(y.begin(), y.end(), out);
  });
}

}  // extern "C"
