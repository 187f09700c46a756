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

#include "outreg/commands.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <thread>

#include "outreg/error.hpp"
#include "outreg/reporting.hpp"

namespace outreg {

namespace fs = std::filesystem;

namespace {

void emit(const LogFn& log, const std::string& line) {
  if (log) log(line);
}

std::string seed_dir_name(std::uint64_t seed) { return "seed_" + std::to_string(seed); }

std::string point_dir_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "point_%03zu", index);
  return buf;
}

void make_dirs(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorKind::io, "cannot create " + dir.string() + ": " + ec.message());
}

// Runs one seed and writes its directory; summary.json goes last.
// Epoch records are also streamed to `on_line` as one JSON object per line.
RunMetrics run_one(const TrainConfig& config, const LabeledDataset& data, const Architecture& arch,
                   const fs::path& dir, const std::string& label,
                   const std::function<void(const std::string&)>& on_line) {
  const auto on_epoch = [&](const EpochRecord& e) {
    nlohmann::ordered_json j;
    j["run"] = label;
    j["epoch"] = e.epoch;
    j["train_loss"] = e.train_loss;
    j["grad_norm"] = e.grad_norm;
    j["val_error_pct"] = e.val_error_pct;
    on_line(j.dump());
  };
  TrainResult result = train_run(config, data, arch, on_epoch);
  make_dirs(dir);
  save_checkpoint(result.params, dir / "checkpoint.bin");
  ConfidenceHistogram hist = max_prob_histogram(result.params, data, Split::validation);
  hist.model_tag = std::string(to_string(config.regularizer.kind));
  write_histogram_csv(dir / "histogram.csv", hist);
  write_json(dir / "entropy_stats.json",
             entropy_stats_json(entropy_stats(result.params, data, Split::validation)));
  write_metrics_csv(dir / "metrics.csv", result.metrics);
  write_json(dir / "summary.json", run_summary(result.metrics, config));
  return result.metrics;
}

struct Job {
  TrainConfig config;
  fs::path dir;
  std::string label;
};

struct JobOutcome {
  std::optional<RunMetrics> metrics;
  std::optional<Error> error;
  bool resumed = false;
};

std::optional<RunMetrics> read_completed(const fs::path& dir) {
  const fs::path summary = dir / "summary.json";
  if (!fs::exists(summary)) return std::nullopt;
  std::ifstream in(summary);
  const auto j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) return std::nullopt;
  RunMetrics m;
  m.test_error_pct = j.value("test_error_pct", 0.0);
  m.best_val_error_pct = j.value("best_val_error_pct", 0.0);
  m.best_epoch = j.value("best_epoch", 0);
  m.epochs_run = j.value("epochs_run", 0);
  if (fs::exists(dir / "metrics.csv")) m.epochs = read_metrics_csv(dir / "metrics.csv");
  return m;
}

std::vector<JobOutcome> run_jobs(const std::vector<Job>& jobs, const LabeledDataset& data,
                                 const Architecture& arch, int threads, bool resume,
                                 const LogFn& log) {
  std::vector<JobOutcome> outcomes(jobs.size());
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;
  const auto say = [&](const std::string& line) {
    std::lock_guard lock(log_mutex);
    emit(log, line);
  };
  const auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      const Job& job = jobs[i];
      if (resume) {
        if (auto done = read_completed(job.dir)) {
          outcomes[i].metrics = std::move(done);
          outcomes[i].resumed = true;
          say(job.label + ": already complete, skipped");
          continue;
        }
      }
      try {
        outcomes[i].metrics = run_one(job.config, data, arch, job.dir, job.label, say);
        say(job.label + ": test_error_pct=" + format_number(outcomes[i].metrics->test_error_pct) +
            " best_epoch=" + std::to_string(outcomes[i].metrics->best_epoch) +
            " val_error_pct=" + format_number(outcomes[i].metrics->best_val_error_pct));
      } catch (const Error& e) {
        outcomes[i].error = e;
        say(job.label + ": failed: " + e.what());
      }
    }
  };
  const int n = std::clamp(threads, 1, static_cast<int>(std::max<std::size_t>(jobs.size(), 1)));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < n; ++t) pool.emplace_back(worker);
  }
  return outcomes;
}

LabeledDataset load_checked(const ExperimentConfig& config) {
  config.validate();
  LabeledDataset data = load_dataset(config.dataset);
  data.validate();
  const Architecture arch = config.architecture();
  if (data.dim() != arch.input_dim || data.classes != arch.classes) {
    fail(ErrorKind::format, "dataset shape does not match the configured architecture");
  }
  return data;
}

std::string csv_field(const std::optional<double>& v) { return v ? format_number(*v) : ""; }

}  // namespace

std::string describe(const ExperimentConfig& config) {
  config.validate();
  nlohmann::json j = to_json(config);
  const Architecture arch = config.architecture();
  j["resolved"] = {{"input_dim", arch.input_dim},
                   {"classes", arch.classes},
                   {"grid_points", config.grid.size()}};
  if (config.dataset.mnist) {
    const char* env = std::getenv(kDataRootEnv);
    j["resolved"]["data_root"] = config.dataset.mnist->root ? *config.dataset.mnist->root
                                 : env != nullptr           ? std::string(env)
                                                            : std::string();
  }
  return j.dump(2);
}

void cmd_train(const ExperimentConfig& config, const LogFn& log) {
  require(config.grid.empty(), ErrorKind::invalid_config,
          "config defines a grid; use gridsearch or a single regularizer");
  const LabeledDataset data = load_checked(config);
  const Architecture arch = config.architecture();
  const fs::path out = config.output_dir;
  make_dirs(out);
  write_json(out / "resolved_config.json", nlohmann::ordered_json::parse(to_json(config).dump()));

  std::vector<Job> jobs;
  for (auto seed : config.seeds) {
    TrainConfig tc = config.train;
    tc.seed = seed;
    jobs.push_back({tc, out / seed_dir_name(seed), seed_dir_name(seed)});
  }
  const auto outcomes = run_jobs(jobs, data, arch, config.threads, false, log);
  for (const auto& o : outcomes) {
    if (o.error) throw *o.error;
  }
}

void cmd_gridsearch(const ExperimentConfig& config, const LogFn& log) {
  const LabeledDataset data = load_checked(config);
  const Architecture arch = config.architecture();
  std::vector<GridPoint> grid = config.grid;
  if (grid.empty()) grid.push_back({config.train.regularizer, std::nullopt, std::nullopt});

  const fs::path out = config.output_dir;
  make_dirs(out);
  write_json(out / "resolved_config.json", nlohmann::ordered_json::parse(to_json(config).dump()));

  std::vector<Job> jobs;
  for (std::size_t p = 0; p < grid.size(); ++p) {
    for (auto seed : config.seeds) {
      TrainConfig tc = apply_grid_point(config.train, grid[p]);
      tc.seed = seed;
      const auto dir = out / point_dir_name(p) / seed_dir_name(seed);
      jobs.push_back({tc, dir, point_dir_name(p) + "/" + seed_dir_name(seed)});
    }
  }
  const auto outcomes = run_jobs(jobs, data, arch, config.threads, true, log);

  const std::size_t n_seeds = config.seeds.size();
  struct Row {
    std::size_t point = 0;
    double mean_val = 0.0;
    double mean_test = 0.0;
    std::size_t ok = 0;
  };
  std::vector<Row> rows(grid.size());
  std::optional<Error> first_error;
  for (std::size_t p = 0; p < grid.size(); ++p) {
    rows[p].point = p;
    for (std::size_t s = 0; s < n_seeds; ++s) {
      const auto& o = outcomes[p * n_seeds + s];
      if (!o.metrics) {
        if (o.error && !first_error) first_error = o.error;
        continue;
      }
      rows[p].mean_val += o.metrics->best_val_error_pct;
      rows[p].mean_test += o.metrics->test_error_pct;
      ++rows[p].ok;
    }
    if (rows[p].ok > 0) {
      rows[p].mean_val /= static_cast<double>(rows[p].ok);
      rows[p].mean_test /= static_cast<double>(rows[p].ok);
    }
  }
  // Complete points first, then by mean validation error, then grid order.
  std::vector<Row> ranked = rows;
  std::stable_sort(ranked.begin(), ranked.end(), [&](const Row& a, const Row& b) {
    const bool ca = a.ok == n_seeds, cb = b.ok == n_seeds;
    if (ca != cb) return ca;
    if ((a.ok > 0) != (b.ok > 0)) return a.ok > 0;
    return a.mean_val < b.mean_val;
  });
  if (ranked.front().ok == 0) {
    throw first_error ? *first_error : Error(ErrorKind::diverged, "every grid run failed");
  }

  {
    std::ofstream csv(out / "grid_results.csv", std::ios::trunc);
    if (!csv) fail(ErrorKind::io, "cannot write grid_results.csv");
    csv << "rank,point,regularizer,beta,gamma,epsilon,learning_rate,dropout_keep_prob,"
           "mean_val_error_pct,mean_test_error_pct,completed_seeds\n";
    for (std::size_t r = 0; r < ranked.size(); ++r) {
      const auto& row = ranked[r];
      const TrainConfig tc = apply_grid_point(config.train, grid[row.point]);
      csv << r + 1 << ',' << row.point << ',' << to_string(tc.regularizer.kind) << ','
          << format_number(tc.regularizer.beta) << ',' << format_number(tc.regularizer.gamma)
          << ',' << format_number(tc.regularizer.epsilon) << ','
          << format_number(tc.learning_rate) << ',' << csv_field(tc.dropout_keep_prob) << ','
          << format_number(row.mean_val) << ',' << format_number(row.mean_test) << ',' << row.ok
          << '\n';
    }
  }
  {
    // Per-seed winners: lowest validation error, ties to the earlier point.
    std::ofstream csv(out / "grid_best_per_seed.csv", std::ios::trunc);
    if (!csv) fail(ErrorKind::io, "cannot write grid_best_per_seed.csv");
    csv << "seed,best_point,val_error_pct\n";
    for (std::size_t s = 0; s < n_seeds; ++s) {
      std::optional<std::size_t> best;
      for (std::size_t p = 0; p < grid.size(); ++p) {
        const auto& m = outcomes[p * n_seeds + s].metrics;
        if (!m) continue;
        if (!best || m->best_val_error_pct <
                         outcomes[*best * n_seeds + s].metrics->best_val_error_pct) {
          best = p;
        }
      }
      if (!best) continue;
      csv << config.seeds[s] << ',' << *best << ','
          << format_number(outcomes[*best * n_seeds + s].metrics->best_val_error_pct) << '\n';
    }
  }

  ExperimentConfig best = config;
  best.grid.clear();
  best.train = apply_grid_point(config.train, grid[ranked.front().point]);
  best.train.retrain_on_full = true;
  best.output_dir = (out / "best").string();
  write_json(out / "best_config.json", nlohmann::ordered_json::parse(to_json(best).dump()));

  emit(log, "rank point regularizer mean_val_error_pct mean_test_error_pct");
  for (std::size_t r = 0; r < ranked.size(); ++r) {
    const auto& row = ranked[r];
    emit(log, std::to_string(r + 1) + " " + std::to_string(row.point) + " " +
                  regularizer_to_json(grid[row.point].regularizer).dump() + " " +
                  format_number(row.mean_val) + " " + format_number(row.mean_test));
  }
}

std::vector<GradCheckResult> cmd_gradcheck(const GradCheckOptions& options, const LogFn& log) {
  const auto results = run_gradient_checks(options);
  bool ok = true;
  for (const auto& r : results) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-45s max_rel_error=%.3e instances=%zu %s", r.name.c_str(),
                  r.max_rel_error, r.instances, r.passed ? "PASS" : "FAIL");
    emit(log, buf);
    ok = ok && r.passed;
  }
  if (!ok) fail(ErrorKind::check_failed, "gradient check exceeded threshold");
  return results;
}

void cmd_histogram(const fs::path& checkpoint, const ExperimentConfig& config, Split split,
                   std::size_t bins, const fs::path& out_dir, const LogFn& log) {
  const MLPParameters params = load_checkpoint(checkpoint);
  config.validate();
  LabeledDataset data = load_dataset(config.dataset);
  data.validate();
  if (data.dim() != params.arch.input_dim || data.classes != params.arch.classes) {
    fail(ErrorKind::format, "checkpoint does not match the dataset shape");
  }
  ConfidenceHistogram hist = max_prob_histogram(params, data, split, bins);
  const EntropyStats stats = entropy_stats(params, data, split);
  make_dirs(out_dir);
  write_histogram_csv(out_dir / "histogram.csv", hist);
  write_json(out_dir / "entropy_stats.json", entropy_stats_json(stats));
  emit(log, "examples=" + std::to_string(hist.total()) +
                " top_bin_fraction=" + format_number(hist.top_bin_fraction()) +
                " mean_entropy=" + format_number(stats.mean));
}

}  // namespace outreg
