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

// Exercises the shared library through outreg.h only.

#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "outreg/outreg.h"

namespace fs = std::filesystem;

namespace {

const char* kSmall = R"({
  "schema_version": 1,
  "dataset": {"synthetic": {"per_class": [40, 40, 40], "test_per_class": [10, 10, 10],
                            "dim": 2, "separation": 4, "seed": 3}, "val_size": 30},
  "architecture": {"hidden": [8]},
  "train": {"max_epochs": 4, "batch_size": 10},
  "regularizer": {"kind": "uniform_label_smoothing", "epsilon": 0.1},
  "seeds": [1, 2]
})";

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "outreg_test_c_api";
  fs::create_directories(dir);
  return dir / name;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void collect(void* user, const char* line) { static_cast<std::vector<std::string>*>(user)->push_back(line); }

}  // namespace

TEST_CASE("status names and version") {
  CHECK(std::string(outreg_version()) == "1.0.0");
  CHECK(std::string(outreg_status_name(OUTREG_OK)) == "ok");
  CHECK(std::string(outreg_status_name(OUTREG_ERROR_DATA)) == "data_error");
  CHECK(OUTREG_ERROR_CONFIG == 2);
  CHECK(OUTREG_ERROR_DATA == 3);
  CHECK(OUTREG_ERROR_DIVERGED == 4);
  CHECK(OUTREG_ERROR_CHECK_FAILED == 5);
}

TEST_CASE("math entry points") {
  const double z[2] = {0.0, std::log(3.0)};
  double p[2], lp[2], g[2], h = 0, kl = 0, rkl = 0;
  REQUIRE(outreg_softmax(z, 2, p) == OUTREG_OK);
  CHECK(p[0] == doctest::Approx(0.25).epsilon(1e-14));
  REQUIRE(outreg_log_softmax(z, 2, lp) == OUTREG_OK);
  CHECK(lp[1] == doctest::Approx(std::log(0.75)).epsilon(1e-14));
  REQUIRE(outreg_entropy(p, 2, &h) == OUTREG_OK);
  CHECK(h == doctest::Approx(0.562335).epsilon(1e-6));
  REQUIRE(outreg_entropy_grad_logits(z, 2, g) == OUTREG_OK);
  CHECK(g[0] == doctest::Approx(0.205990).epsilon(1e-5));
  REQUIRE(outreg_kl_to_uniform(p, 2, &kl) == OUTREG_OK);
  CHECK(kl == doctest::Approx(0.130812).epsilon(1e-5));
  REQUIRE(outreg_kl_from_uniform(p, 2, &rkl) == OUTREG_OK);
  CHECK(rkl == doctest::Approx(0.143841).epsilon(1e-5));

  const double bad[2] = {0.3, 0.3};
  CHECK(outreg_entropy(bad, 2, &h) == OUTREG_ERROR_INVALID_ARGUMENT);
  CHECK(std::strlen(outreg_last_error()) > 0);
  CHECK(outreg_softmax(nullptr, 2, p) == OUTREG_ERROR_INVALID_ARGUMENT);
  CHECK(outreg_softmax(z, 2, p) == OUTREG_OK);
  CHECK(std::string(outreg_last_error()).empty());
}

TEST_CASE("loss entry point") {
  outreg_regularizer spec;
  outreg_regularizer_init(&spec);
  spec.kind = OUTREG_REG_CONFIDENCE_PENALTY;
  spec.beta = 1.0;
  const double z[2] = {0.0, std::log(3.0)};
  const int32_t y[1] = {0};
  double loss = 0, grad[2];
  REQUIRE(outreg_loss(&spec, z, 1, 2, y, nullptr, 0, &loss, grad) == OUTREG_OK);
  CHECK(loss == doctest::Approx(0.823959).epsilon(1e-6));

  spec.kind = OUTREG_REG_HINGE_CONFIDENCE_PENALTY;
  spec.gamma = 0.6;
  REQUIRE(outreg_loss(&spec, z, 1, 2, y, nullptr, 0, &loss, nullptr) == OUTREG_OK);
  CHECK(loss - 1.3862943611198906 == doctest::Approx(0.037665).epsilon(1e-5));

  spec.gamma = 5.0;
  CHECK(outreg_loss(&spec, z, 1, 2, y, nullptr, 0, &loss, grad) == OUTREG_ERROR_CONFIG);

  outreg_regularizer_init(&spec);
  const double z3[3] = {0, 0, 0};
  const unsigned char mask[3] = {1, 1, 0};
  double g3[3];
  REQUIRE(outreg_loss(&spec, z3, 1, 3, y, mask, 0, &loss, g3) == OUTREG_OK);
  CHECK(loss == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(g3[2] == 0.0);
  const int32_t masked_label[1] = {2};
  CHECK(outreg_loss(&spec, z3, 1, 3, masked_label, mask, 0, &loss, g3) ==
        OUTREG_ERROR_INVALID_ARGUMENT);

  outreg_regularizer_init(&spec);
  spec.kind = OUTREG_REG_CONFIDENCE_PENALTY;
  spec.beta = 2.0;
  spec.anneal_mode = OUTREG_ANNEAL_LINEAR_RAMP;
  spec.ramp_steps = 1000;
  double beta = 0;
  REQUIRE(outreg_effective_beta(&spec, 500, &beta) == OUTREG_OK);
  CHECK(beta == 1.0);
}

TEST_CASE("model handles") {
  const size_t hidden[1] = {5};
  outreg_model* zero = nullptr;
  REQUIRE(outreg_model_init(3, hidden, 1, 10, 1, 0.0, &zero) == OUTREG_OK);
  const double x[6] = {1, 2, 3, -1, 0, 4};
  double z[20];
  int32_t y[2];
  REQUIRE(outreg_model_logits(zero, x, 2, 3, z) == OUTREG_OK);
  for (double v : z) CHECK(v == 0.0);
  REQUIRE(outreg_model_predict(zero, x, 2, 3, y) == OUTREG_OK);
  CHECK(y[0] == 0);
  CHECK(outreg_model_logits(zero, x, 2, 2, z) == OUTREG_ERROR_INVALID_ARGUMENT);

  outreg_model* m = nullptr;
  REQUIRE(outreg_model_init(3, hidden, 1, 10, 7, 0.5, &m) == OUTREG_OK);
  size_t in = 0, k = 0, count = 0;
  REQUIRE(outreg_model_shape(m, &in, &k, &count) == OUTREG_OK);
  CHECK(in == 3);
  CHECK(k == 10);
  CHECK(count == 3 * 5 + 5 + 5 * 10 + 10);
  const auto path = scratch("model.bin").string();
  REQUIRE(outreg_model_save(m, path.c_str()) == OUTREG_OK);
  outreg_model* loaded = nullptr;
  REQUIRE(outreg_model_load(path.c_str(), &loaded) == OUTREG_OK);
  double a[20], b[20];
  outreg_model_logits(m, x, 2, 3, a);
  outreg_model_logits(loaded, x, 2, 3, b);
  CHECK(std::memcmp(a, b, sizeof a) == 0);

  outreg_model* missing = nullptr;
  CHECK(outreg_model_load(scratch("nope.bin").c_str(), &missing) == OUTREG_ERROR_IO);
  CHECK(missing == nullptr);
  const size_t bad_hidden[1] = {0};
  CHECK(outreg_model_init(3, bad_hidden, 1, 10, 1, 0.01, &missing) == OUTREG_ERROR_CONFIG);

  outreg_model_free(zero);
  outreg_model_free(m);
  outreg_model_free(loaded);
  outreg_model_free(nullptr);
}

TEST_CASE("experiment lifecycle") {
  outreg_experiment* exp = nullptr;
  REQUIRE(outreg_experiment_parse(kSmall, &exp) == OUTREG_OK);
  const fs::path out = scratch("exp");
  fs::remove_all(out);
  REQUIRE(outreg_experiment_set_output_dir(exp, out.c_str()) == OUTREG_OK);
  std::vector<std::string> lines;
  outreg_experiment_set_log(exp, collect, &lines);

  char* text = nullptr;
  REQUIRE(outreg_experiment_describe(exp, &text) == OUTREG_OK);
  CHECK(std::string(text).find("\"resolved\"") != std::string::npos);
  outreg_string_free(text);
  CHECK_FALSE(fs::exists(out));

  REQUIRE(outreg_experiment_train(exp) == OUTREG_OK);
  for (const char* f : {"checkpoint.bin", "histogram.csv", "entropy_stats.json", "metrics.csv", "summary.json"}) {
    CHECK(fs::exists(out / "seed_1" / f));
    CHECK(fs::exists(out / "seed_2" / f));
  }
  CHECK(lines.size() >= 8);  // one record per epoch plus a summary line per seed
  CHECK(lines.front().rfind("{\"run\":", 0) == 0);

  REQUIRE(outreg_experiment_histogram(exp, (out / "seed_1" / "checkpoint.bin").c_str(),
                                      OUTREG_SPLIT_TEST, 20, (out / "hist").c_str()) == OUTREG_OK);
  CHECK(fs::exists(out / "hist" / "histogram.csv"));
  CHECK(outreg_experiment_histogram(exp, (out / "missing.bin").c_str(), OUTREG_SPLIT_TEST, 20,
                                    (out / "hist2").c_str()) == OUTREG_ERROR_IO);
  CHECK_FALSE(fs::exists(out / "hist2"));

  const uint64_t seeds[1] = {9};
  REQUIRE(outreg_experiment_set_seeds(exp, seeds, 1) == OUTREG_OK);
  CHECK(outreg_experiment_set_seeds(exp, seeds, 0) == OUTREG_ERROR_CONFIG);
  CHECK(outreg_experiment_set_threads(exp, 0) == OUTREG_ERROR_CONFIG);
  REQUIRE(outreg_experiment_set_output_dir(exp, (out / "grid").c_str()) == OUTREG_OK);
  REQUIRE(outreg_experiment_gridsearch(exp) == OUTREG_OK);
  CHECK(fs::exists(out / "grid" / "grid_results.csv"));
  CHECK(fs::exists(out / "grid" / "best_config.json"));
  outreg_experiment_free(exp);
}

TEST_CASE("experiment errors map to status codes") {
  outreg_experiment* exp = nullptr;
  CHECK(outreg_experiment_parse("{not json", &exp) == OUTREG_ERROR_CONFIG);
  CHECK(exp == nullptr);
  CHECK(outreg_experiment_parse(R"({"schema_version": 1, "bogus": 1})", &exp) == OUTREG_ERROR_CONFIG);
  CHECK(outreg_experiment_load(scratch("absent.json").c_str(), &exp) != OUTREG_OK);

  const std::string diverging = std::string(kSmall).replace(std::string(kSmall).find("\"max_epochs\""),
                                                            12, "\"learning_rate\": 1e300, \"max_epochs\"");
  REQUIRE(outreg_experiment_parse(diverging.c_str(), &exp) == OUTREG_OK);
  const fs::path out = scratch("diverge");
  fs::remove_all(out);
  outreg_experiment_set_output_dir(exp, out.c_str());
  CHECK(outreg_experiment_train(exp) == OUTREG_ERROR_DIVERGED);
  CHECK(std::string(outreg_last_error()).find("non-finite") != std::string::npos);
  outreg_experiment_free(exp);

  const std::string mnist = R"({"schema_version": 1, "dataset": {"mnist": {"root": "/no/such/dir"},
    "val_size": 10}, "architecture": {"hidden": [4]}, "regularizer": {"kind": "none"}})";
  REQUIRE(outreg_experiment_parse(mnist.c_str(), &exp) == OUTREG_OK);
  const fs::path none = scratch("no_data");
  fs::remove_all(none);
  outreg_experiment_set_output_dir(exp, none.c_str());
  CHECK(outreg_experiment_train(exp) == OUTREG_ERROR_DATA);
  CHECK_FALSE(fs::exists(none));
  outreg_experiment_free(exp);
}

TEST_CASE("gradient checks through the C API") {
  outreg_gradcheck_options o;
  outreg_gradcheck_options_init(&o);
  CHECK(o.classes == 10);
  CHECK(o.instances == 50);
  CHECK(o.threshold == 1e-4);
  std::vector<std::string> lines;
  CHECK(outreg_gradcheck(&o, collect, &lines) == OUTREG_OK);
  CHECK(lines.size() == 16);
  o.perturb_analytic = 1;
  o.instances = 3;
  CHECK(outreg_gradcheck(&o, nullptr, nullptr) == OUTREG_ERROR_CHECK_FAILED);
}
