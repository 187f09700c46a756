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

/*
 * outreg C API.
 *
 * Output-distribution regularizers (confidence penalty, label smoothing,
 * label noise) with a reference MLP trainer. All functions return an
 * outreg_status; on failure outreg_last_error() holds a message for the
 * calling thread. Handles are opaque and owned by the caller.
 */
#ifndef OUTREG_OUTREG_H
#define OUTREG_OUTREG_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#if defined(OUTREG_BUILDING_LIBRARY)
#define OUTREG_API __declspec(dllexport)
#else
#define OUTREG_API __declspec(dllimport)
#endif
#else
#define OUTREG_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Values double as CLI exit codes. */
typedef enum outreg_status {
  OUTREG_OK = 0,
  OUTREG_ERROR_INTERNAL = 1,
  OUTREG_ERROR_CONFIG = 2,
  OUTREG_ERROR_DATA = 3,
  OUTREG_ERROR_DIVERGED = 4,
  OUTREG_ERROR_CHECK_FAILED = 5,
  OUTREG_ERROR_INVALID_ARGUMENT = 6,
  OUTREG_ERROR_IO = 7
} outreg_status;

typedef enum outreg_regularizer_kind {
  OUTREG_REG_NONE = 0,
  OUTREG_REG_CONFIDENCE_PENALTY = 1,
  OUTREG_REG_HINGE_CONFIDENCE_PENALTY = 2,
  OUTREG_REG_UNIFORM_LABEL_SMOOTHING = 3,
  OUTREG_REG_UNIGRAM_LABEL_SMOOTHING = 4,
  OUTREG_REG_LABEL_NOISE = 5
} outreg_regularizer_kind;

typedef enum outreg_anneal_mode {
  OUTREG_ANNEAL_CONSTANT = 0,
  OUTREG_ANNEAL_LINEAR_RAMP = 1
} outreg_anneal_mode;

typedef enum outreg_split {
  OUTREG_SPLIT_TRAIN = 0,
  OUTREG_SPLIT_VALIDATION = 1,
  OUTREG_SPLIT_TEST = 2
} outreg_split;

typedef struct outreg_regularizer {
  outreg_regularizer_kind kind;
  double beta;
  double gamma;
  double epsilon;
  const double* prior; /* length == classes for unigram smoothing, else NULL */
  size_t prior_len;
  outreg_anneal_mode anneal_mode;
  int64_t ramp_steps;
  int exclude_true_label;
} outreg_regularizer;

typedef struct outreg_gradcheck_options {
  size_t classes;
  size_t instances;
  uint64_t seed;
  double threshold;
  int perturb_analytic;
} outreg_gradcheck_options;

typedef void (*outreg_log_fn)(void* user, const char* line);

typedef struct outreg_experiment outreg_experiment;
typedef struct outreg_model outreg_model;

OUTREG_API const char* outreg_version(void);
OUTREG_API const char* outreg_status_name(outreg_status status);
/* Message for the last failed call on this thread; "" if none. */
OUTREG_API const char* outreg_last_error(void);
OUTREG_API void outreg_string_free(char* s);

/* ---- math ------------------------------------------------------------ */

OUTREG_API outreg_status outreg_log_softmax(const double* logits, size_t classes, double* out);
OUTREG_API outreg_status outreg_softmax(const double* logits, size_t classes, double* out);
OUTREG_API outreg_status outreg_entropy(const double* probs, size_t classes, double* out);
OUTREG_API outreg_status outreg_entropy_grad_logits(const double* logits, size_t classes,
                                                    double* out);
OUTREG_API outreg_status outreg_kl_to_uniform(const double* probs, size_t classes, double* out);
/* +infinity when any probability is 0. */
OUTREG_API outreg_status outreg_kl_from_uniform(const double* probs, size_t classes, double* out);

/* ---- losses ---------------------------------------------------------- */

OUTREG_API void outreg_regularizer_init(outreg_regularizer* spec);

/* Mean loss over a row-major batch x classes logit block and its gradient
 * (same layout). `mask` may be NULL; otherwise one byte per class, 0 = masked. */
OUTREG_API outreg_status outreg_loss(const outreg_regularizer* spec, const double* logits,
                                     size_t batch, size_t classes, const int32_t* labels,
                                     const unsigned char* mask, int64_t step, double* loss_out,
                                     double* grad_out);

OUTREG_API outreg_status outreg_effective_beta(const outreg_regularizer* spec, int64_t step,
                                               double* out);

/* ---- experiments ----------------------------------------------------- */

OUTREG_API outreg_status outreg_experiment_load(const char* path, outreg_experiment** out);
OUTREG_API outreg_status outreg_experiment_parse(const char* json_text, outreg_experiment** out);
OUTREG_API void outreg_experiment_free(outreg_experiment* exp);
OUTREG_API outreg_status outreg_experiment_set_output_dir(outreg_experiment* exp,
                                                          const char* dir);
OUTREG_API outreg_status outreg_experiment_set_seeds(outreg_experiment* exp,
                                                     const uint64_t* seeds, size_t count);
OUTREG_API outreg_status outreg_experiment_set_threads(outreg_experiment* exp, int threads);
OUTREG_API void outreg_experiment_set_log(outreg_experiment* exp, outreg_log_fn fn, void* user);
/* Resolved settings as JSON; free with outreg_string_free. */
OUTREG_API outreg_status outreg_experiment_describe(const outreg_experiment* exp, char** out);
OUTREG_API outreg_status outreg_experiment_train(outreg_experiment* exp);
OUTREG_API outreg_status outreg_experiment_gridsearch(outreg_experiment* exp);
OUTREG_API outreg_status outreg_experiment_histogram(const outreg_experiment* exp,
                                                     const char* checkpoint, outreg_split split,
                                                     size_t bins, const char* out_dir);

/* ---- gradient checks ------------------------------------------------- */

OUTREG_API void outreg_gradcheck_options_init(outreg_gradcheck_options* options);
/* OUTREG_ERROR_CHECK_FAILED if any check exceeds options->threshold. */
OUTREG_API outreg_status outreg_gradcheck(const outreg_gradcheck_options* options,
                                          outreg_log_fn fn, void* user);

/* ---- models ---------------------------------------------------------- */

/* stddev 0 gives an all-zero model. */
OUTREG_API outreg_status outreg_model_init(size_t input_dim, const size_t* hidden,
                                           size_t n_hidden, size_t classes, uint64_t seed,
                                           double stddev, outreg_model** out);
OUTREG_API outreg_status outreg_model_load(const char* path, outreg_model** out);
OUTREG_API outreg_status outreg_model_save(const outreg_model* model, const char* path);
OUTREG_API void outreg_model_free(outreg_model* model);
OUTREG_API outreg_status outreg_model_shape(const outreg_model* model, size_t* input_dim,
                                            size_t* classes, size_t* parameter_count);
OUTREG_API outreg_status outreg_model_logits(const outreg_model* model, const double* x,
                                             size_t batch, size_t input_dim, double* out);
OUTREG_API outreg_status outreg_model_predict(const outreg_model* model, const double* x,
                                              size_t batch, size_t input_dim, int32_t* out);

#ifdef __cplusplus
}
#endif

#endif /* OUTREG_OUTREG_H */
