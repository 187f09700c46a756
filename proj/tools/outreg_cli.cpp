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

// outreg command-line front end. Talks to the library only through outreg.h.

#include <cstdio>
#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "outreg/outreg.h"

namespace {

struct RunFlags {
  std::string config;
  std::string out;
  std::vector<std::uint64_t> seeds;
  int threads = 0;
  bool dry_run = false;
};

void print_line(void*, const char* line) {
  std::fputs(line, stdout);
  std::fputc('\n', stdout);
  std::fflush(stdout);
}

// One line on stderr, `error[<class>]: <message>`; the exit code is the status.
int report(outreg_status status) {
  if (status != OUTREG_OK) {
    std::fprintf(stderr, "error[%s]: %s\n", outreg_status_name(status), outreg_last_error());
  }
  return static_cast<int>(status);
}

int usage_error(const std::string& msg) {
  std::fprintf(stderr, "error[%s]: %s\n", outreg_status_name(OUTREG_ERROR_CONFIG), msg.c_str());
  return OUTREG_ERROR_CONFIG;
}

class Experiment {
 public:
  ~Experiment() { outreg_experiment_free(handle_); }
  outreg_status open(const RunFlags& f) {
    outreg_status s = outreg_experiment_load(f.config.c_str(), &handle_);
    if (s != OUTREG_OK) return s;
    outreg_experiment_set_log(handle_, print_line, nullptr);
    if (!f.out.empty() && (s = outreg_experiment_set_output_dir(handle_, f.out.c_str())) != OUTREG_OK) {
      return s;
    }
    if (!f.seeds.empty() &&
        (s = outreg_experiment_set_seeds(handle_, f.seeds.data(), f.seeds.size())) != OUTREG_OK) {
      return s;
    }
    if (f.threads > 0) s = outreg_experiment_set_threads(handle_, f.threads);
    return s;
  }
  outreg_experiment* get() const { return handle_; }

 private:
  outreg_experiment* handle_ = nullptr;
};

outreg_status dry_run(const Experiment& exp) {
  char* text = nullptr;
  const outreg_status s = outreg_experiment_describe(exp.get(), &text);
  if (s == OUTREG_OK) {
    std::puts(text);
    outreg_string_free(text);
  }
  return s;
}

int run_experiment(const RunFlags& flags, outreg_status (*action)(outreg_experiment*)) {
  Experiment exp;
  outreg_status s = exp.open(flags);
  if (s != OUTREG_OK) return report(s);
  return report(flags.dry_run ? dry_run(exp) : action(exp.get()));
}

void add_run_flags(CLI::App* cmd, RunFlags& f) {
  cmd->add_option("--config", f.config, "experiment config (JSON)")->required();
  cmd->add_option("--out", f.out, "output directory (overrides config)");
  cmd->add_option("--seeds", f.seeds, "comma-separated seed list (overrides config)")
      ->delimiter(',');
  cmd->add_option("--threads", f.threads, "worker threads (overrides config)")
      ->check(CLI::PositiveNumber);
  cmd->add_flag("--dry-run", f.dry_run, "validate and print resolved settings, run nothing");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"outreg: output-distribution regularizers for classifiers"};
  app.set_version_flag("--version", std::string(outreg_version()));
  app.require_subcommand(1);

  RunFlags train_flags;
  auto* train = app.add_subcommand("train", "train one model per seed");
  add_run_flags(train, train_flags);

  RunFlags grid_flags;
  auto* grid = app.add_subcommand("gridsearch", "train every grid point for every seed and rank them");
  add_run_flags(grid, grid_flags);

  outreg_gradcheck_options gc;
  outreg_gradcheck_options_init(&gc);
  bool perturb = false;
  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient checks");
  gradcheck->add_option("--k", gc.classes, "class count")->check(CLI::Range(2, 100000));
  gradcheck->add_option("--instances", gc.instances, "random instances per check")
      ->check(CLI::PositiveNumber);
  gradcheck->add_option("--seed", gc.seed, "rng seed");
  gradcheck->add_option("--threshold", gc.threshold, "max relative error");
  gradcheck->add_flag("--perturb-analytic", perturb, "scale analytic gradients by 1.01 (self-test)");

  RunFlags hist_flags;
  std::string checkpoint, split_name = "val";
  std::size_t bins = 50;
  auto* histogram = app.add_subcommand("histogram", "max-probability histogram and entropy stats");
  histogram->add_option("--checkpoint", checkpoint, "model checkpoint")->required();
  histogram->add_option("--config", hist_flags.config, "config naming the dataset")->required();
  histogram->add_option("--split", split_name, "train, val or test")
      ->check(CLI::IsMember({"train", "val", "test"}));
  histogram->add_option("--bins", bins, "histogram bins")->check(CLI::Range(2, 1000000));
  histogram->add_option("--out", hist_flags.out, "output directory")->required();

  std::size_t input_dim = 0, classes = 0;
  std::vector<std::size_t> hidden;
  std::uint64_t init_seed = 1;
  double stddev = 0.01;
  bool zero = false;
  std::string init_out;
  auto* init = app.add_subcommand("init", "write a freshly initialised checkpoint");
  init->add_option("--input-dim", input_dim, "input dimension")->required();
  init->add_option("--hidden", hidden, "comma-separated hidden sizes")->delimiter(',');
  init->add_option("--classes", classes, "class count")->required();
  init->add_option("--seed", init_seed, "rng seed");
  init->add_option("--stddev", stddev, "weight init stddev");
  init->add_flag("--zero", zero, "all-zero parameters");
  init->add_option("--out", init_out, "checkpoint path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return usage_error(e.what());
  }

  if (*train) return run_experiment(train_flags, outreg_experiment_train);
  if (*grid) return run_experiment(grid_flags, outreg_experiment_gridsearch);

  if (*gradcheck) {
    gc.perturb_analytic = perturb ? 1 : 0;
    return report(outreg_gradcheck(&gc, print_line, nullptr));
  }

  if (*histogram) {
    const std::string out_dir = hist_flags.out;
    hist_flags.out.clear();
    Experiment exp;
    outreg_status s = exp.open(hist_flags);
    if (s != OUTREG_OK) return report(s);
    const outreg_split split = split_name == "train" ? OUTREG_SPLIT_TRAIN
                               : split_name == "test" ? OUTREG_SPLIT_TEST
                                                      : OUTREG_SPLIT_VALIDATION;
    return report(outreg_experiment_histogram(exp.get(), checkpoint.c_str(), split, bins,
                                              out_dir.c_str()));
  }

  if (*init) {
    outreg_model* model = nullptr;
    outreg_status s = outreg_model_init(input_dim, hidden.data(), hidden.size(), classes, init_seed,
                                        zero ? 0.0 : stddev, &model);
    if (s == OUTREG_OK) s = outreg_model_save(model, init_out.c_str());
    outreg_model_free(model);
    return report(s);
  }
  return usage_error("no command given");
}
