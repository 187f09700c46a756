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

#include "outreg/config.hpp"

#include <cstdlib>
#include <fstream>
#include <initializer_list>
#include <string_view>

#include "outreg/error.hpp"

namespace outreg {

using nlohmann::json;

namespace {

[[noreturn]] void config_error(const std::string& where, const std::string& what) {
  fail(ErrorKind::invalid_config, where + ": " + what);
}

void only_keys(const json& j, const std::string& where,
               std::initializer_list<std::string_view> allowed) {
  if (!j.is_object()) config_error(where, "expected an object");
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (auto a : allowed) known = known || key == a;
    if (!known) config_error(where, "unknown key \"" + key + "\"");
  }
}

template <typename T>
T get(const json& j, const char* key, const std::string& where) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    config_error(where + "." + key, "missing or wrong type");
  }
}

template <typename T>
T get_or(const json& j, const char* key, T fallback, const std::string& where) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  return get<T>(j, key, where);
}

template <typename T>
std::optional<T> get_opt(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return get<T>(j, key, where);
}

std::size_t non_negative(const json& j, const char* key, std::size_t fallback,
                         const std::string& where) {
  if (!j.contains(key)) return fallback;
  const auto v = get<std::int64_t>(j, key, where);
  if (v < 0) config_error(where + "." + key, "must be >= 0");
  return static_cast<std::size_t>(v);
}

std::vector<std::size_t> size_list(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) return {};
  std::vector<std::size_t> out;
  for (const auto& v : get<std::vector<std::int64_t>>(j, key, where)) {
    if (v < 0) config_error(where + "." + key, "entries must be >= 0");
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

TrainConfig train_from_json(const json& j, const std::string& where) {
  only_keys(j, where, {"learning_rate", "max_epochs", "batch_size", "early_stop_patience",
                       "clip_norm", "dropout_keep_prob", "init_stddev", "retrain_on_full"});
  TrainConfig t;
  t.learning_rate = get_or(j, "learning_rate", t.learning_rate, where);
  t.max_epochs = get_or(j, "max_epochs", t.max_epochs, where);
  t.batch_size = get_or(j, "batch_size", t.batch_size, where);
  t.early_stop_patience = get_or(j, "early_stop_patience", t.early_stop_patience, where);
  t.clip_norm = get_opt<double>(j, "clip_norm", where);
  t.dropout_keep_prob = get_opt<double>(j, "dropout_keep_prob", where);
  t.init_stddev = get_or(j, "init_stddev", t.init_stddev, where);
  t.retrain_on_full = get_or(j, "retrain_on_full", t.retrain_on_full, where);
  return t;
}

GridPoint grid_point_from_json(const json& j, const std::string& where) {
  only_keys(j, where, {"regularizer", "learning_rate", "dropout_keep_prob"});
  if (!j.contains("regularizer")) config_error(where, "grid point needs a regularizer");
  GridPoint p;
  p.regularizer = regularizer_from_json(j.at("regularizer"));
  p.learning_rate = get_opt<double>(j, "learning_rate", where);
  p.dropout_keep_prob = get_opt<double>(j, "dropout_keep_prob", where);
  return p;
}

DatasetSpec dataset_from_json(const json& j) {
  const std::string where = "dataset";
  only_keys(j, where, {"mnist", "synthetic", "val_size"});
  DatasetSpec d;
  d.val_size = non_negative(j, "val_size", 0, where);
  if (j.contains("mnist") == j.contains("synthetic")) {
    config_error(where, "exactly one of \"mnist\" or \"synthetic\" is required");
  }
  if (j.contains("mnist")) {
    const auto& m = j.at("mnist");
    only_keys(m, "dataset.mnist", {"root"});
    d.mnist = MnistSource{get_opt<std::string>(m, "root", "dataset.mnist")};
  } else {
    const auto& s = j.at("synthetic");
    const std::string sw = "dataset.synthetic";
    only_keys(s, sw, {"per_class", "test_per_class", "dim", "separation", "seed"});
    SyntheticSource src;
    src.per_class = size_list(s, "per_class", sw);
    src.test_per_class = size_list(s, "test_per_class", sw);
    src.dim = non_negative(s, "dim", src.dim, sw);
    src.separation = get_or(s, "separation", src.separation, sw);
    src.seed = get_or(s, "seed", src.seed, sw);
    d.synthetic = std::move(src);
  }
  return d;
}

json dataset_to_json(const DatasetSpec& d) {
  json j;
  if (d.mnist) {
    j["mnist"] = json::object();
    if (d.mnist->root) j["mnist"]["root"] = *d.mnist->root;
  } else if (d.synthetic) {
    const auto& s = *d.synthetic;
    j["synthetic"] = {{"per_class", s.per_class}, {"dim", s.dim},
                      {"separation", s.separation}, {"seed", s.seed}};
    if (!s.test_per_class.empty()) j["synthetic"]["test_per_class"] = s.test_per_class;
  }
  j["val_size"] = d.val_size;
  return j;
}

}  // namespace

RegularizerSpec regularizer_from_json(const json& j) {
  const std::string where = "regularizer";
  only_keys(j, where, {"kind", "beta", "gamma", "epsilon", "prior", "anneal",
                       "exclude_true_label", "mask_unseen_labels"});
  RegularizerSpec s;
  const auto kind_name = get<std::string>(j, "kind", where);
  const auto kind = parse_regularizer_kind(kind_name);
  if (!kind) config_error(where + ".kind", "unknown regularizer \"" + kind_name + "\"");
  s.kind = *kind;
  s.beta = get_or(j, "beta", 0.0, where);
  s.gamma = get_or(j, "gamma", 0.0, where);
  s.epsilon = get_or(j, "epsilon", 0.0, where);
  s.exclude_true_label = get_or(j, "exclude_true_label", false, where);
  s.mask_unseen_labels = get_or(j, "mask_unseen_labels", false, where);
  if (j.contains("prior")) {
    const auto& p = j.at("prior");
    if (p.is_string()) {
      if (p.get<std::string>() != "train_labels") {
        config_error(where + ".prior", "must be a probability list or \"train_labels\"");
      }
    } else {
      s.prior = get<std::vector<double>>(j, "prior", where);
    }
  }
  if (j.contains("anneal")) {
    const auto& a = j.at("anneal");
    only_keys(a, where + ".anneal", {"mode", "ramp_steps"});
    const auto mode_name = get<std::string>(a, "mode", where + ".anneal");
    const auto mode = parse_anneal_mode(mode_name);
    if (!mode) config_error(where + ".anneal.mode", "unknown mode \"" + mode_name + "\"");
    s.anneal.mode = *mode;
    s.anneal.ramp_steps = get_or<std::int64_t>(a, "ramp_steps", 0, where + ".anneal");
  }
  if (j.contains("prior") && s.kind != RegularizerKind::unigram_label_smoothing) {
    config_error(where + ".prior", "only valid for unigram_label_smoothing");
  }
  return s;
}

json regularizer_to_json(const RegularizerSpec& s) {
  json j;
  j["kind"] = std::string(to_string(s.kind));
  switch (s.kind) {
    case RegularizerKind::none:
      break;
    case RegularizerKind::hinge_confidence_penalty:
      j["gamma"] = s.gamma;
      [[fallthrough]];
    case RegularizerKind::confidence_penalty:
      j["beta"] = s.beta;
      if (s.anneal.mode != AnnealMode::constant) {
        j["anneal"] = {{"mode", std::string(to_string(s.anneal.mode))},
                       {"ramp_steps", s.anneal.ramp_steps}};
      }
      break;
    case RegularizerKind::unigram_label_smoothing:
      j["prior"] = s.prior ? json(*s.prior) : json("train_labels");
      [[fallthrough]];
    case RegularizerKind::uniform_label_smoothing:
      j["epsilon"] = s.epsilon;
      break;
    case RegularizerKind::label_noise:
      j["epsilon"] = s.epsilon;
      j["exclude_true_label"] = s.exclude_true_label;
      break;
  }
  if (s.mask_unseen_labels) j["mask_unseen_labels"] = true;
  return j;
}

json train_to_json(const TrainConfig& t) {
  json j = {{"learning_rate", t.learning_rate},
            {"max_epochs", t.max_epochs},
            {"batch_size", t.batch_size},
            {"early_stop_patience", t.early_stop_patience},
            {"init_stddev", t.init_stddev},
            {"retrain_on_full", t.retrain_on_full}};
  if (t.clip_norm) j["clip_norm"] = *t.clip_norm;
  if (t.dropout_keep_prob) j["dropout_keep_prob"] = *t.dropout_keep_prob;
  return j;
}

ExperimentConfig parse_config(const json& j) {
  only_keys(j, "config", {"schema_version", "dataset", "architecture", "train", "regularizer",
                          "grid", "output_dir", "seeds", "threads"});
  if (!j.contains("schema_version")) config_error("config", "missing schema_version");
  const int version = get<int>(j, "schema_version", "config");
  if (version != kConfigSchemaVersion) {
    config_error("config.schema_version", "unsupported version " + std::to_string(version));
  }
  ExperimentConfig c;
  if (!j.contains("dataset")) config_error("config", "missing dataset");
  c.dataset = dataset_from_json(j.at("dataset"));
  if (j.contains("architecture")) {
    only_keys(j.at("architecture"), "architecture", {"hidden"});
    c.hidden = size_list(j.at("architecture"), "hidden", "architecture");
  }
  if (j.contains("train")) c.train = train_from_json(j.at("train"), "train");
  if (j.contains("regularizer")) c.train.regularizer = regularizer_from_json(j.at("regularizer"));
  if (j.contains("grid")) {
    const auto& g = j.at("grid");
    if (!g.is_array()) config_error("grid", "expected a list");
    if (j.contains("regularizer")) config_error("config", "use either regularizer or grid");
    for (std::size_t i = 0; i < g.size(); ++i) {
      c.grid.push_back(grid_point_from_json(g[i], "grid[" + std::to_string(i) + "]"));
    }
    if (c.grid.empty()) config_error("grid", "must not be empty");
  }
  c.output_dir = get_or<std::string>(j, "output_dir", c.output_dir, "config");
  if (j.contains("seeds")) c.seeds = get<std::vector<std::uint64_t>>(j, "seeds", "config");
  c.threads = get_or(j, "threads", c.threads, "config");
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::invalid_config, "cannot read config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::invalid_config, path.string() + ": " + e.what());
  }
  return parse_config(j);
}

json to_json(const ExperimentConfig& c) {
  json j;
  j["schema_version"] = kConfigSchemaVersion;
  j["dataset"] = dataset_to_json(c.dataset);
  j["architecture"] = {{"hidden", c.hidden}};
  j["train"] = train_to_json(c.train);
  if (c.grid.empty()) {
    j["regularizer"] = regularizer_to_json(c.train.regularizer);
  } else {
    j["grid"] = json::array();
    for (const auto& p : c.grid) {
      json g = {{"regularizer", regularizer_to_json(p.regularizer)}};
      if (p.learning_rate) g["learning_rate"] = *p.learning_rate;
      if (p.dropout_keep_prob) g["dropout_keep_prob"] = *p.dropout_keep_prob;
      j["grid"].push_back(std::move(g));
    }
  }
  j["output_dir"] = c.output_dir;
  j["seeds"] = c.seeds;
  j["threads"] = c.threads;
  return j;
}

std::size_t ExperimentConfig::classes() const {
  if (dataset.synthetic) return dataset.synthetic->per_class.size();
  return 10;
}

std::size_t ExperimentConfig::input_dim() const {
  if (dataset.synthetic) return dataset.synthetic->dim;
  return 28 * 28;
}

Architecture ExperimentConfig::architecture() const {
  return Architecture{input_dim(), hidden, classes()};
}

void ExperimentConfig::validate() const {
  if (dataset.synthetic) {
    const auto& s = *dataset.synthetic;
    require(s.per_class.size() >= 2, ErrorKind::invalid_config,
            "dataset.synthetic.per_class needs at least 2 classes");
    for (auto n : s.per_class) {
      require(n >= 1, ErrorKind::invalid_config, "dataset.synthetic.per_class entries must be >= 1");
    }
    require(s.test_per_class.empty() || s.test_per_class.size() == s.per_class.size(),
            ErrorKind::invalid_config, "dataset.synthetic.test_per_class length mismatch");
    require(s.dim >= 1, ErrorKind::invalid_config, "dataset.synthetic.dim must be >= 1");
    std::size_t total = 0;
    for (auto n : s.per_class) total += n;
    require(dataset.val_size < total, ErrorKind::invalid_config,
            "dataset.val_size must be smaller than the training set");
  }
  try {
    architecture().validate();
  } catch (const Error& e) {
    fail(ErrorKind::invalid_config, std::string("architecture: ") + e.what());
  }
  require(dataset.val_size > 0, ErrorKind::invalid_config,
          "dataset.val_size must be > 0 (early stopping monitors validation error)");
  require(!seeds.empty(), ErrorKind::invalid_config, "seeds must not be empty");
  require(threads >= 1, ErrorKind::invalid_config, "threads must be >= 1");
  require(!output_dir.empty(), ErrorKind::invalid_config, "output_dir must not be empty");
  train.validate(classes());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    try {
      apply_grid_point(train, grid[i]).validate(classes());
    } catch (const Error& e) {
      fail(ErrorKind::invalid_config, "grid[" + std::to_string(i) + "]: " + e.what());
    }
  }
}

LabeledDataset load_dataset(const DatasetSpec& spec) {
  LabeledDataset ds;
  if (spec.mnist) {
    std::string root;
    if (spec.mnist->root) {
      root = *spec.mnist->root;
    } else if (const char* env = std::getenv(kDataRootEnv)) {
      root = env;
    } else {
      fail(ErrorKind::format, std::string("no MNIST root: set dataset.mnist.root or ") +
                                  kDataRootEnv);
    }
    ds = load_mnist(root);
  } else {
    const auto& s = *spec.synthetic;
    ds = synthetic_blobs(s.per_class, s.dim, s.separation, s.seed);
    if (!s.test_per_class.empty()) {
      const auto test = synthetic_blobs(s.test_per_class, s.dim, s.separation, s.seed + 0x9E3779B9ULL);
      ds = concat_train_test(ds, test);
    }
  }
  return split_train_val(std::move(ds), spec.val_size);
}

}  // namespace outreg
