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

#include "outreg/reporting.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "outreg/config.hpp"
#include "outreg/error.hpp"

namespace outreg {

namespace {

constexpr Eigen::Index kChunk = 1000;
constexpr const char* kMetricsHeader = "epoch,train_loss,grad_norm,val_error_pct";
constexpr const char* kHistogramHeader = "bin_lo,bin_hi,count";

// Calls fn(logit_row) for each example of the split, in order.
template <typename Fn>
void for_each_output(const MLPParameters& params, const LabeledDataset& data, Split split,
                     Fn&& fn) {
  const auto begin = static_cast<Eigen::Index>(data.split_begin(split));
  const auto n = static_cast<Eigen::Index>(data.split_size(split));
  require(n > 0, ErrorKind::invalid_input, "split is empty");
  const auto k = static_cast<std::size_t>(params.arch.classes);
  for (Eigen::Index start = 0; start < n; start += kChunk) {
    const Eigen::Index rows = std::min(kChunk, n - start);
    const Matrix z = logits(params, data.features.middleRows(begin + start, rows));
    for (Eigen::Index r = 0; r < rows; ++r) {
      fn(std::span<const double>(z.row(r).data(), k));
    }
  }
}

double parse_double(std::string_view s, const std::filesystem::path& path, std::size_t line) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    fail(ErrorKind::format, path.string() + ":" + std::to_string(line) + ": bad number \"" +
                                std::string(s) + "\"");
  }
  return v;
}

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const auto comma = line.find(',', pos);
    out.push_back(line.substr(pos, comma - pos));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorKind::io, "cannot write " + path.string());
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) fail(ErrorKind::io, "failed writing " + path.string());
}

}  // namespace

std::size_t ConfidenceHistogram::total() const {
  std::size_t n = 0;
  for (auto c : counts) n += c;
  return n;
}

double ConfidenceHistogram::top_bin_fraction() const {
  const auto n = total();
  return n == 0 ? 0.0 : static_cast<double>(counts.back()) / static_cast<double>(n);
}

std::vector<double> max_probabilities(const MLPParameters& params, const LabeledDataset& data,
                                      Split split) {
  std::vector<double> out;
  std::vector<double> p(params.arch.classes);
  for_each_output(params, data, split, [&](std::span<const double> z) {
    kernels::softmax(z, p);
    out.push_back(*std::max_element(p.begin(), p.end()));
  });
  return out;
}

std::vector<double> output_entropies(const MLPParameters& params, const LabeledDataset& data,
                                     Split split) {
  std::vector<double> out;
  std::vector<double> lp(params.arch.classes);
  for_each_output(params, data, split, [&](std::span<const double> z) {
    kernels::log_softmax(z, lp);
    out.push_back(kernels::entropy_from_log_probs(lp));
  });
  return out;
}

ConfidenceHistogram histogram_of(std::span<const double> max_probs, std::size_t bins) {
  require(bins >= 2, ErrorKind::invalid_input, "histogram needs at least 2 bins");
  ConfidenceHistogram h;
  h.edges.resize(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i) {
    h.edges[i] = static_cast<double>(i) / static_cast<double>(bins);
  }
  h.counts.assign(bins, 0);
  for (double p : max_probs) {
    require(p >= 0.0 && p <= 1.0, ErrorKind::invalid_input, "probability outside [0,1]");
    const auto bin = std::min(static_cast<std::size_t>(p * static_cast<double>(bins)), bins - 1);
    ++h.counts[bin];
  }
  return h;
}

ConfidenceHistogram max_prob_histogram(const MLPParameters& params, const LabeledDataset& data,
                                       Split split, std::size_t bins) {
  require(bins >= 2, ErrorKind::invalid_input, "histogram needs at least 2 bins");
  ConfidenceHistogram h = histogram_of(max_probabilities(params, data, split), bins);
  h.dataset_tag = std::string(to_string(split));
  return h;
}

EntropyStats summarize_entropies(std::vector<double> entropies) {
  require(!entropies.empty(), ErrorKind::invalid_input, "no entropies to summarize");
  EntropyStats s;
  s.count = entropies.size();
  // Running mean: exact when every value is the same.
  double n = 0.0;
  for (double h : entropies) s.mean += (h - s.mean) / ++n;
  std::sort(entropies.begin(), entropies.end());
  s.min = entropies.front();
  s.max = entropies.back();
  const std::size_t mid = s.count / 2;
  s.median = s.count % 2 == 1 ? entropies[mid] : 0.5 * (entropies[mid - 1] + entropies[mid]);
  return s;
}

EntropyStats entropy_stats(const MLPParameters& params, const LabeledDataset& data, Split split) {
  return summarize_entropies(output_entropies(params, data, split));
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

void write_metrics_csv(const std::filesystem::path& path, const RunMetrics& run) {
  auto out = open_out(path);
  out << kMetricsHeader << '\n';
  for (const auto& r : run.epochs) {
    out << r.epoch << ',' << format_number(r.train_loss) << ',' << format_number(r.grad_norm)
        << ',' << format_number(r.val_error_pct) << '\n';
  }
  finish(out, path);
}

std::vector<EpochRecord> read_metrics_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kMetricsHeader) {
    fail(ErrorKind::format, path.string() + ": unexpected metrics header");
  }
  std::vector<EpochRecord> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cols = split_csv(line);
    if (cols.size() != 4) fail(ErrorKind::format, path.string() + ": wrong column count");
    EpochRecord r;
    r.epoch = static_cast<int>(parse_double(cols[0], path, lineno));
    r.train_loss = parse_double(cols[1], path, lineno);
    r.grad_norm = parse_double(cols[2], path, lineno);
    r.val_error_pct = parse_double(cols[3], path, lineno);
    out.push_back(r);
  }
  return out;
}

void write_histogram_csv(const std::filesystem::path& path, const ConfidenceHistogram& hist) {
  auto out = open_out(path);
  out << kHistogramHeader << '\n';
  for (std::size_t i = 0; i < hist.counts.size(); ++i) {
    out << format_number(hist.edges[i]) << ',' << format_number(hist.edges[i + 1]) << ','
        << hist.counts[i] << '\n';
  }
  finish(out, path);
}

ConfidenceHistogram read_histogram_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kHistogramHeader) {
    fail(ErrorKind::format, path.string() + ": unexpected histogram header");
  }
  ConfidenceHistogram h;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cols = split_csv(line);
    if (cols.size() != 3) fail(ErrorKind::format, path.string() + ": wrong column count");
    const double lo = parse_double(cols[0], path, lineno);
    const double hi = parse_double(cols[1], path, lineno);
    if (h.edges.empty()) h.edges.push_back(lo);
    if (lo != h.edges.back() || !(hi > lo)) {
      fail(ErrorKind::format, path.string() + ":" + std::to_string(lineno) + ": bins not contiguous");
    }
    h.edges.push_back(hi);
    h.counts.push_back(static_cast<std::size_t>(parse_double(cols[2], path, lineno)));
  }
  return h;
}

nlohmann::ordered_json run_summary(const RunMetrics& run, const TrainConfig& config) {
  nlohmann::json hyper = train_to_json(config);
  const nlohmann::json reg = regularizer_to_json(config.regularizer);
  for (const auto& [key, value] : reg.items()) {
    if (key != "kind") hyper[key] = value;
  }
  nlohmann::ordered_json j;
  j["test_error_pct"] = run.test_error_pct;
  j["best_epoch"] = run.best_epoch;
  j["seed"] = config.seed;
  j["regularizer"] = std::string(to_string(config.regularizer.kind));
  j["hyperparams"] = nlohmann::ordered_json::parse(hyper.dump());
  j["best_val_error_pct"] = run.best_val_error_pct;
  j["epochs_run"] = run.epochs_run;
  return j;
}

nlohmann::ordered_json entropy_stats_json(const EntropyStats& s) {
  nlohmann::ordered_json j;
  j["count"] = s.count;
  j["mean"] = s.mean;
  j["median"] = s.median;
  j["min"] = s.min;
  j["max"] = s.max;
  return j;
}

void write_json(const std::filesystem::path& path, const nlohmann::ordered_json& j) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
  finish(out, path);
}

void write_metrics(const std::filesystem::path& dir, const RunMetrics& run,
                   const TrainConfig& config, const std::optional<ConfidenceHistogram>& histogram) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorKind::io, "cannot create " + dir.string() + ": " + ec.message());
  write_metrics_csv(dir / "metrics.csv", run);
  write_json(dir / "summary.json", run_summary(run, config));
  if (histogram && histogram->total() > 0) write_histogram_csv(dir / "histogram.csv", *histogram);
}

}  // namespace outreg
