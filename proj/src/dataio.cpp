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

#include "outreg/dataio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <numbers>
#include <random>
#include <string>

#include <zlib.h>

#include "outreg/error.hpp"

namespace outreg {

namespace {

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;

std::vector<std::uint8_t> gunzip(const std::vector<std::uint8_t>& in,
                                 const std::filesystem::path& path) {
  z_stream zs{};
  if (inflateInit2(&zs, 16 + MAX_WBITS) != Z_OK) fail(ErrorKind::io, "zlib init failed");
  zs.next_in = const_cast<Bytef*>(in.data());
  zs.avail_in = static_cast<uInt>(in.size());
  std::vector<std::uint8_t> out;
  std::vector<std::uint8_t> chunk(1 << 16);
  int rc = Z_OK;
  while (rc != Z_STREAM_END) {
    zs.next_out = chunk.data();
    zs.avail_out = static_cast<uInt>(chunk.size());
    rc = inflate(&zs, Z_NO_FLUSH);
    if (rc != Z_OK && rc != Z_STREAM_END) {
      const auto offset = zs.total_in;
      inflateEnd(&zs);
      fail(ErrorKind::format, path.string() + ": corrupt gzip stream near compressed offset " +
                                  std::to_string(offset));
    }
    out.insert(out.end(), chunk.begin(), chunk.begin() + (chunk.size() - zs.avail_out));
    if (rc != Z_STREAM_END && zs.avail_in == 0 && zs.avail_out != 0) {
      inflateEnd(&zs);
      fail(ErrorKind::format, path.string() + ": truncated gzip stream at compressed offset " +
                                  std::to_string(in.size()));
    }
  }
  inflateEnd(&zs);
  return out;
}

std::uint32_t read_be32(const std::vector<std::uint8_t>& bytes, std::size_t offset,
                        const std::filesystem::path& path) {
  if (offset + 4 > bytes.size()) {
    fail(ErrorKind::format, path.string() + ": truncated header at offset " +
                                std::to_string(offset));
  }
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

void write_be32(std::ofstream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16),
                     static_cast<char>(v >> 8), static_cast<char>(v)};
  out.write(b, 4);
}

void check_magic(std::uint32_t magic, std::uint32_t expected, const std::filesystem::path& path) {
  if (magic != expected) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "bad magic 0x%08x (expected 0x%08x) at offset 0", magic,
                  expected);
    fail(ErrorKind::format, path.string() + ": " + buf);
  }
}

}  // namespace

std::string_view to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::validation: return "val";
    case Split::test: return "test";
  }
  return "train";
}

std::size_t LabeledDataset::split_begin(Split s) const {
  switch (s) {
    case Split::train: return 0;
    case Split::validation: return train_end;
    case Split::test: return val_end;
  }
  return 0;
}

std::size_t LabeledDataset::split_end(Split s) const {
  switch (s) {
    case Split::train: return train_end;
    case Split::validation: return val_end;
    case Split::test: return size();
  }
  return 0;
}

Matrix LabeledDataset::split_features(Split s) const {
  const auto b = static_cast<Eigen::Index>(split_begin(s));
  const auto n = static_cast<Eigen::Index>(split_size(s));
  return features.middleRows(b, n);
}

std::vector<int> LabeledDataset::split_labels(Split s) const {
  const auto view = split_label_view(s);
  return {view.begin(), view.end()};
}

std::span<const int> LabeledDataset::split_label_view(Split s) const {
  return std::span<const int>(labels).subspan(split_begin(s), split_size(s));
}

void LabeledDataset::validate() const {
  require(classes >= 2, ErrorKind::invalid_input, "dataset needs at least 2 classes");
  require(static_cast<std::size_t>(features.rows()) == labels.size(), ErrorKind::invalid_input,
          "feature rows and label count differ");
  require(train_end <= val_end && val_end <= labels.size(), ErrorKind::invalid_input,
          "split boundaries are out of order");
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= classes) {
      fail(ErrorKind::invalid_label, "dataset label " + std::to_string(y) + " outside [0, " +
                                         std::to_string(classes) + ")");
    }
  }
  require(features.allFinite(), ErrorKind::invalid_input, "dataset features are not finite");
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::format, "cannot open data file " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (bytes.size() >= 2 && bytes[0] == 0x1F && bytes[1] == 0x8B) return gunzip(bytes, path);
  return bytes;
}

IdxPart load_idx(const std::filesystem::path& images, const std::filesystem::path& labels) {
  const auto img = read_file_bytes(images);
  check_magic(read_be32(img, 0, images), kImageMagic, images);
  const std::size_t n = read_be32(img, 4, images);
  const std::size_t rows = read_be32(img, 8, images);
  const std::size_t cols = read_be32(img, 12, images);
  const std::size_t pixels = rows * cols;
  if (pixels == 0) fail(ErrorKind::format, images.string() + ": zero image size at offset 8");
  const std::size_t need = 16 + n * pixels;
  if (img.size() < need) {
    fail(ErrorKind::format, images.string() + ": truncated pixel data at offset " +
                                std::to_string(img.size()) + " (expected " +
                                std::to_string(need) + " bytes)");
  }

  const auto lbl = read_file_bytes(labels);
  check_magic(read_be32(lbl, 0, labels), kLabelMagic, labels);
  const std::size_t n_labels = read_be32(lbl, 4, labels);
  if (n_labels != n) {
    fail(ErrorKind::format, labels.string() + ": label count " + std::to_string(n_labels) +
                                " at offset 4 does not match image count " + std::to_string(n));
  }
  if (lbl.size() < 8 + n) {
    fail(ErrorKind::format, labels.string() + ": truncated label data at offset " +
                                std::to_string(lbl.size()));
  }

  IdxPart part;
  part.rows = rows;
  part.cols = cols;
  part.features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(pixels));
  const std::uint8_t* src = img.data() + 16;
  double* dst = part.features.data();
  for (std::size_t i = 0; i < n * pixels; ++i) dst[i] = static_cast<double>(src[i]) / 255.0;
  part.labels.assign(lbl.begin() + 8, lbl.begin() + 8 + static_cast<std::ptrdiff_t>(n));
  return part;
}

void write_idx_images(const std::filesystem::path& path, std::span<const std::uint8_t> pixels,
                      std::size_t count, std::size_t rows, std::size_t cols) {
  require(pixels.size() == count * rows * cols, ErrorKind::invalid_input,
          "pixel buffer does not match the stated shape");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::io, "cannot write " + path.string());
  write_be32(out, kImageMagic);
  write_be32(out, static_cast<std::uint32_t>(count));
  write_be32(out, static_cast<std::uint32_t>(rows));
  write_be32(out, static_cast<std::uint32_t>(cols));
  out.write(reinterpret_cast<const char*>(pixels.data()),
            static_cast<std::streamsize>(pixels.size()));
  if (!out) fail(ErrorKind::io, "failed writing " + path.string());
}

void write_idx_labels(const std::filesystem::path& path, std::span<const std::uint8_t> labels) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::io, "cannot write " + path.string());
  write_be32(out, kLabelMagic);
  write_be32(out, static_cast<std::uint32_t>(labels.size()));
  out.write(reinterpret_cast<const char*>(labels.data()),
            static_cast<std::streamsize>(labels.size()));
  if (!out) fail(ErrorKind::io, "failed writing " + path.string());
}

LabeledDataset combine_parts(IdxPart train, IdxPart test, std::size_t classes) {
  if (train.features.cols() != test.features.cols()) {
    fail(ErrorKind::format, "train and test images have different sizes");
  }
  LabeledDataset ds;
  ds.classes = classes;
  const auto n_train = train.features.rows();
  ds.features.resize(n_train + test.features.rows(), train.features.cols());
  ds.features.topRows(n_train) = train.features;
  ds.features.bottomRows(test.features.rows()) = test.features;
  ds.labels = std::move(train.labels);
  ds.labels.insert(ds.labels.end(), test.labels.begin(), test.labels.end());
  ds.train_end = static_cast<std::size_t>(n_train);
  ds.val_end = ds.train_end;
  for (int y : ds.labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= classes) {
      fail(ErrorKind::format, "label byte " + std::to_string(y) + " outside [0, " +
                                  std::to_string(classes) + ")");
    }
  }
  return ds;
}

LabeledDataset concat_train_test(const LabeledDataset& train, const LabeledDataset& test) {
  require(train.dim() == test.dim() && train.classes == test.classes, ErrorKind::invalid_input,
          "train and test datasets are incompatible");
  LabeledDataset ds;
  ds.classes = train.classes;
  const auto n_train = static_cast<Eigen::Index>(train.split_size(Split::train));
  ds.features.resize(n_train + test.features.rows(), train.features.cols());
  ds.features.topRows(n_train) = train.features.topRows(n_train);
  ds.features.bottomRows(test.features.rows()) = test.features;
  ds.labels = train.split_labels(Split::train);
  ds.labels.insert(ds.labels.end(), test.labels.begin(), test.labels.end());
  ds.train_end = static_cast<std::size_t>(n_train);
  ds.val_end = ds.train_end;
  return ds;
}

LabeledDataset load_mnist(const std::filesystem::path& root) {
  const auto find = [&](const std::string& stem) {
    for (const auto* suffix : {"", ".gz"}) {
      auto p = root / (stem + suffix);
      if (std::filesystem::exists(p)) return p;
    }
    fail(ErrorKind::format, "missing MNIST file " + (root / stem).string() + "[.gz]");
  };
  IdxPart train = load_idx(find("train-images-idx3-ubyte"), find("train-labels-idx1-ubyte"));
  IdxPart test = load_idx(find("t10k-images-idx3-ubyte"), find("t10k-labels-idx1-ubyte"));
  return combine_parts(std::move(train), std::move(test), 10);
}

LabeledDataset split_train_val(LabeledDataset dataset, std::size_t val_size) {
  const std::size_t n_train = dataset.split_size(Split::train);
  if (val_size > 0 && val_size >= n_train) {
    fail(ErrorKind::invalid_config, "validation size " + std::to_string(val_size) +
                                        " must be smaller than the training split (" +
                                        std::to_string(n_train) + ")");
  }
  require(dataset.val_end == dataset.train_end, ErrorKind::invalid_state,
          "dataset already has a validation split");
  dataset.train_end -= val_size;
  return dataset;
}

LabeledDataset merge_train_val(LabeledDataset dataset) {
  dataset.train_end = dataset.val_end;
  return dataset;
}

LabeledDataset synthetic_blobs(std::span<const std::size_t> per_class, std::size_t dim,
                               double separation, std::uint64_t seed) {
  const std::size_t classes = per_class.size();
  require(classes >= 2, ErrorKind::invalid_config, "synthetic blobs need at least 2 classes");
  require(dim >= 1, ErrorKind::invalid_config, "synthetic blobs need dim >= 1");
  for (std::size_t c : per_class) {
    require(c >= 1, ErrorKind::invalid_config, "every class needs at least one example");
  }

  Matrix centres = Matrix::Zero(static_cast<Eigen::Index>(classes), static_cast<Eigen::Index>(dim));
  if (dim == 1) {
    for (std::size_t k = 0; k < classes; ++k) {
      centres(static_cast<Eigen::Index>(k), 0) = separation * static_cast<double>(k);
    }
  } else {
    // Adjacent vertices of a regular K-gon with side `separation`.
    const double angle = 2.0 * std::numbers::pi / static_cast<double>(classes);
    const double radius = separation / (2.0 * std::sin(angle / 2.0));
    for (std::size_t k = 0; k < classes; ++k) {
      centres(static_cast<Eigen::Index>(k), 0) = radius * std::cos(angle * static_cast<double>(k));
      centres(static_cast<Eigen::Index>(k), 1) = radius * std::sin(angle * static_cast<double>(k));
    }
  }

  std::vector<int> order;
  for (std::size_t k = 0; k < classes; ++k) order.insert(order.end(), per_class[k], static_cast<int>(k));
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  LabeledDataset ds;
  ds.classes = classes;
  ds.features.resize(static_cast<Eigen::Index>(order.size()), static_cast<Eigen::Index>(dim));
  std::normal_distribution<double> noise(0.0, 1.0);
  for (std::size_t i = 0; i < order.size(); ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    for (Eigen::Index d = 0; d < static_cast<Eigen::Index>(dim); ++d) {
      ds.features(row, d) = centres(order[i], d) + noise(rng);
    }
  }
  ds.labels = std::move(order);
  ds.train_end = ds.labels.size();
  ds.val_end = ds.train_end;
  return ds;
}

LabeledDataset synthetic_blobs(std::size_t classes, std::size_t per_class, std::size_t dim,
                               double separation, std::uint64_t seed) {
  std::vector<std::size_t> counts(classes, per_class);
  return synthetic_blobs(counts, dim, separation, seed);
}

}  // namespace outreg
