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

#include "outreg/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <thread>

#include "outreg/error.hpp"

namespace outreg {

namespace {

constexpr Eigen::Index kEvalChunk = 1000;

// Independent generator per purpose, all derived from the run seed.
std::mt19937_64 stream(std::uint64_t seed, std::uint32_t purpose) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    purpose};
  return std::mt19937_64(seq);
}

enum : std::uint32_t { kShuffleStream = 1, kNoiseStream = 2, kDropoutStream = 3 };

struct LoopOutcome {
  MLPParameters best;
  std::vector<EpochRecord> records;
  int best_epoch = 0;
  double best_val_error = std::numeric_limits<double>::infinity();
};

// Resolved per-run settings that depend on the training labels.
struct Prepared {
  RegularizerSpec spec;
  ClassMask mask;
};

Prepared prepare(const TrainConfig& config, std::span<const int> train_labels,
                 std::size_t classes) {
  Prepared p{config.regularizer, {}};
  const bool needs_counts = (p.spec.kind == RegularizerKind::unigram_label_smoothing &&
                             !p.spec.prior) ||
                            p.spec.mask_unseen_labels;
  if (needs_counts) {
    UnigramPrior up = unigram_prior(train_labels, classes);
    if (p.spec.kind == RegularizerKind::unigram_label_smoothing && !p.spec.prior) {
      p.spec.prior = std::vector<double>(up.prior.values().begin(), up.prior.values().end());
    }
    if (p.spec.mask_unseen_labels) p.mask = std::move(up.mask);
  }
  p.spec.validate(classes);
  return p;
}

LoopOutcome train_loop(const TrainConfig& config, const Prepared& prepared,
                       const LabeledDataset& data, std::size_t train_rows, bool monitor_val,
                       int epochs, const Architecture& arch, const EpochCallback& on_epoch) {
  MLPParameters params = init_params(arch, config.seed, config.init_stddev);
  auto shuffle_rng = stream(config.seed, kShuffleStream);
  auto noise_rng = stream(config.seed, kNoiseStream);
  std::optional<DropoutState> dropout;
  if (config.dropout_keep_prob && *config.dropout_keep_prob < 1.0) {
    dropout.emplace(DropoutConfig{*config.dropout_keep_prob, stream(config.seed, kDropoutStream)()});
  }

  const RegularizerSpec& spec = prepared.spec;
  const auto dim = static_cast<Eigen::Index>(data.dim());
  std::vector<std::size_t> order(train_rows);
  std::iota(order.begin(), order.end(), std::size_t{0});

  LoopOutcome out;
  out.best = params;
  int since_best = 0;
  std::int64_t step = 0;
  const auto batch_size = static_cast<std::size_t>(config.batch_size);

  for (int epoch = 1; epoch <= epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double loss_sum = 0.0;
    double norm_sum = 0.0;
    std::size_t steps_this_epoch = 0;

    for (std::size_t start = 0; start < train_rows; start += batch_size) {
      const std::size_t n = std::min(batch_size, train_rows - start);
      Matrix xb(static_cast<Eigen::Index>(n), dim);
      std::vector<int> yb(n);
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t row = order[start + i];
        xb.row(static_cast<Eigen::Index>(i)) = data.features.row(static_cast<Eigen::Index>(row));
        yb[i] = data.labels[row];
      }
      if (spec.kind == RegularizerKind::label_noise) {
        for (int& y : yb) {
          y = apply_label_noise(y, data.classes, spec.epsilon, noise_rng, spec.exclude_true_label);
        }
      }

      ForwardResult fwd = forward(params, xb, Mode::train, dropout ? &*dropout : nullptr);
      if (!fwd.logits.allFinite()) throw DivergedError(epoch, step, "non-finite logits");
      LossResult loss = prepared.mask.empty()
                            ? evaluate_loss(spec, fwd.logits, yb, step)
                            : masked_loss(spec, fwd.logits, yb, prepared.mask, step);
      if (!std::isfinite(loss.loss)) throw DivergedError(epoch, step, "non-finite loss");
      MLPGradients grads = backward(*fwd.trace, params, loss.grad_logits);
      double norm = global_grad_norm(grads);
      if (!std::isfinite(norm)) throw DivergedError(epoch, step, "non-finite gradient");
      if (config.clip_norm) clip_by_global_norm(grads, *config.clip_norm);
      sgd_step(params, grads, config.learning_rate);

      loss_sum += loss.loss * static_cast<double>(n);
      norm_sum += norm;
      ++steps_this_epoch;
      ++step;
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(train_rows);
    rec.grad_norm = norm_sum / static_cast<double>(steps_this_epoch);
    rec.val_error_pct = monitor_val ? error_pct(params, data, Split::validation, prepared.mask) : 0.0;
    out.records.push_back(rec);
    if (on_epoch) on_epoch(rec);

    if (!monitor_val) {
      out.best = params;
      out.best_epoch = epoch;
      continue;
    }
    if (rec.val_error_pct < out.best_val_error) {
      out.best_val_error = rec.val_error_pct;
      out.best_epoch = epoch;
      out.best = params;
      since_best = 0;
    } else if (++since_best >= config.early_stop_patience) {
      break;
    }
  }
  return out;
}

}  // namespace

void TrainConfig::validate(std::size_t classes) const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    fail(ErrorKind::invalid_config, "learning_rate must be > 0");
  }
  require(max_epochs >= 1, ErrorKind::invalid_config, "max_epochs must be >= 1");
  require(batch_size >= 1, ErrorKind::invalid_config, "batch_size must be >= 1");
  require(early_stop_patience >= 1, ErrorKind::invalid_config, "early_stop_patience must be >= 1");
  if (clip_norm && !(*clip_norm > 0.0)) fail(ErrorKind::invalid_config, "clip_norm must be > 0");
  if (dropout_keep_prob && !(*dropout_keep_prob > 0.0 && *dropout_keep_prob <= 1.0)) {
    fail(ErrorKind::invalid_config, "dropout_keep_prob must lie in (0,1]");
  }
  if (!(init_stddev >= 0.0) || !std::isfinite(init_stddev)) {
    fail(ErrorKind::invalid_config, "init_stddev must be >= 0");
  }
  // The unigram prior may still be pending (filled from training labels).
  RegularizerSpec spec = regularizer;
  if (spec.kind == RegularizerKind::unigram_label_smoothing && !spec.prior) {
    spec.prior = std::vector<double>(classes, 1.0 / static_cast<double>(classes));
  }
  spec.validate(classes);
}

void sgd_step(MLPParameters& params, const MLPGradients& grads, double learning_rate) {
  require(params.layers.size() == grads.layers.size(), ErrorKind::invalid_state,
          "gradient layout does not match parameters");
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const auto& g = grads.layers[l];
    auto& p = params.layers[l];
    require(p.weights.rows() == g.weights.rows() && p.weights.cols() == g.weights.cols() &&
                p.bias.size() == g.bias.size(),
            ErrorKind::invalid_state, "gradient shape does not match parameters");
    if (!g.weights.allFinite() || !g.bias.allFinite()) {
      throw DivergedError(0, 0, "non-finite gradient passed to sgd_step");
    }
    p.weights -= learning_rate * g.weights;
    p.bias -= learning_rate * g.bias;
  }
}

double global_grad_norm(const MLPGradients& grads) {
  double sq = 0.0;
  for (const auto& layer : grads.layers) {
    sq += layer.weights.squaredNorm();
    sq += layer.bias.squaredNorm();
  }
  return std::sqrt(sq);
}

double clip_by_global_norm(MLPGradients& grads, double clip_norm) {
  require(clip_norm > 0.0, ErrorKind::invalid_config, "clip_norm must be > 0");
  const double norm = global_grad_norm(grads);
  if (norm > clip_norm) {
    const double scale = clip_norm / norm;
    for (auto& layer : grads.layers) {
      layer.weights *= scale;
      layer.bias *= scale;
    }
  }
  return norm;
}

double error_pct(const MLPParameters& params, const LabeledDataset& data, Split split,
                 const ClassMask& mask) {
  const auto begin = static_cast<Eigen::Index>(data.split_begin(split));
  const auto n = static_cast<Eigen::Index>(data.split_size(split));
  require(n > 0, ErrorKind::invalid_input, "cannot compute error on an empty split");
  std::size_t wrong = 0;
  for (Eigen::Index start = 0; start < n; start += kEvalChunk) {
    const Eigen::Index rows = std::min(kEvalChunk, n - start);
    Matrix z = logits(params, data.features.middleRows(begin + start, rows));
    if (!mask.empty()) {
      for (Eigen::Index c = 0; c < z.cols(); ++c) {
        if (mask[static_cast<std::size_t>(c)] == 0) {
          z.col(c).setConstant(-std::numeric_limits<double>::infinity());
        }
      }
    }
    for (Eigen::Index r = 0; r < rows; ++r) {
      const int pred = argmax_row({z.row(r).data(), static_cast<std::size_t>(z.cols())});
      if (pred != data.labels[static_cast<std::size_t>(begin + start + r)]) ++wrong;
    }
  }
  return 100.0 * static_cast<double>(wrong) / static_cast<double>(n);
}

TrainResult train_run(const TrainConfig& config, const LabeledDataset& dataset,
                      const Architecture& arch, const EpochCallback& on_epoch) {
  const auto started = std::chrono::steady_clock::now();
  arch.validate();
  dataset.validate();
  config.validate(dataset.classes);
  require(arch.input_dim == dataset.dim() && arch.classes == dataset.classes,
          ErrorKind::invalid_config, "architecture does not match the dataset");
  require(dataset.split_size(Split::train) > 0, ErrorKind::invalid_input, "empty training split");
  require(dataset.split_size(Split::validation) > 0, ErrorKind::invalid_input,
          "early stopping needs a validation split");

  const Prepared prepared =
      prepare(config, dataset.split_label_view(Split::train), dataset.classes);
  LoopOutcome outcome = train_loop(config, prepared, dataset, dataset.split_size(Split::train),
                                   true, config.max_epochs, arch, on_epoch);

  TrainResult result;
  result.metrics.epochs = std::move(outcome.records);
  result.metrics.epochs_run = static_cast<int>(result.metrics.epochs.size());
  result.metrics.best_epoch = outcome.best_epoch;
  result.metrics.best_val_error_pct = outcome.best_val_error;

  if (config.retrain_on_full) {
    const LabeledDataset full = merge_train_val(dataset);
    const Prepared full_prepared =
        prepare(config, full.split_label_view(Split::train), full.classes);
    LoopOutcome refit = train_loop(config, full_prepared, full, full.split_size(Split::train),
                                   false, outcome.best_epoch, arch, {});
    result.params = std::move(refit.best);
  } else {
    result.params = std::move(outcome.best);
  }
  if (dataset.split_size(Split::test) > 0) {
    result.metrics.test_error_pct = error_pct(result.params, dataset, Split::test, prepared.mask);
  }
  result.metrics.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return result;
}

TrainConfig apply_grid_point(const TrainConfig& base, const GridPoint& point) {
  TrainConfig cfg = base;
  cfg.regularizer = point.regularizer;
  if (point.learning_rate) cfg.learning_rate = *point.learning_rate;
  if (point.dropout_keep_prob) cfg.dropout_keep_prob = *point.dropout_keep_prob;
  return cfg;
}

std::vector<GridResult> grid_search(const TrainConfig& base, const std::vector<GridPoint>& grid,
                                    const LabeledDataset& dataset, const Architecture& arch,
                                    int threads) {
  require(!grid.empty(), ErrorKind::invalid_config, "grid is empty");
  std::vector<GridResult> results(grid.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < grid.size(); i = next++) {
      GridResult& r = results[i];
      r.index = i;
      r.config = apply_grid_point(base, grid[i]);
      try {
        r.metrics = train_run(r.config, dataset, arch).metrics;
      } catch (const std::exception& e) {
        r.error = e.what();
      }
    }
  };
  const int n_threads = std::clamp(threads, 1, static_cast<int>(grid.size()));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }

  std::stable_sort(results.begin(), results.end(), [](const GridResult& a, const GridResult& b) {
    if (a.metrics.has_value() != b.metrics.has_value()) return a.metrics.has_value();
    if (!a.metrics) return false;
    return a.metrics->best_val_error_pct < b.metrics->best_val_error_pct;
  });
  return results;
}

std::vector<GridResult> grid_search(const TrainConfig& base,
                                    const std::vector<RegularizerSpec>& grid,
                                    const LabeledDataset& dataset, const Architecture& arch,
                                    int threads) {
  std::vector<GridPoint> points;
  for (const auto& spec : grid) points.push_back({spec, std::nullopt, std::nullopt});
  return grid_search(base, points, dataset, arch, threads);
}

}  // namespace outreg
