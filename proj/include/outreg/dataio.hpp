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

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "outreg/math_core.hpp"

namespace outreg {

enum class Split { train, validation, test };

// Rows [0, train_end) are training examples, [train_end, val_end) validation,
// [val_end, N) test. File order is preserved.
struct LabeledDataset {
  Matrix features;  // N x D, finite
  std::vector<int> labels;
  std::size_t classes = 0;
  std::size_t train_end = 0;
  std::size_t val_end = 0;

  std::size_t size() const { return labels.size(); }
  std::size_t dim() const { return static_cast<std::size_t>(features.cols()); }
  std::size_t split_begin(Split s) const;
  std::size_t split_end(Split s) const;
  std::size_t split_size(Split s) const { return split_end(s) - split_begin(s); }

  // Copies of the rows and labels of one split.
  Matrix split_features(Split s) const;
  std::vector<int> split_labels(Split s) const;
  std::span<const int> split_label_view(Split s) const;

  // Throws invalid_input if labels/features/boundaries are inconsistent.
  void validate() const;
};

std::string_view to_string(Split s);

// One IDX image file plus its label file. Pixels are scaled by 1/255.
struct IdxPart {
  Matrix features;
  std::vector<int> labels;
  std::size_t rows = 0;
  std::size_t cols = 0;
};

// Reads an IDX3 ubyte image file (magic 0x00000803) and an IDX1 ubyte label
// file (magic 0x00000801). Either may be gzip-compressed.
IdxPart load_idx(const std::filesystem::path& images, const std::filesystem::path& labels);

// Raw bytes of an uncompressed-or-gzip file.
std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);

void write_idx_images(const std::filesystem::path& path, std::span<const std::uint8_t> pixels,
                      std::size_t count, std::size_t rows, std::size_t cols);
void write_idx_labels(const std::filesystem::path& path, std::span<const std::uint8_t> labels);

// Train and test parts as one dataset; validation starts empty.
LabeledDataset combine_parts(IdxPart train, IdxPart test, std::size_t classes);

// Training rows of `train` followed by all rows of `test` as the test split.
LabeledDataset concat_train_test(const LabeledDataset& train, const LabeledDataset& test);

// Standard MNIST file names under `root`, with or without a .gz suffix.
LabeledDataset load_mnist(const std::filesystem::path& root);

// Moves the last `val_size` training rows into the validation split.
LabeledDataset split_train_val(LabeledDataset dataset, std::size_t val_size);

// Folds the validation rows back into the training split (file order kept).
LabeledDataset merge_train_val(LabeledDataset dataset);

// Gaussian clusters (unit variance) whose neighbouring centres are
// `separation` apart: a regular polygon in the first two dimensions, or a
// line when dim == 1. Examples are shuffled; all rows land in the training
// split.
LabeledDataset synthetic_blobs(std::span<const std::size_t> per_class, std::size_t dim,
                               double separation, std::uint64_t seed);
LabeledDataset synthetic_blobs(std::size_t classes, std::size_t per_class, std::size_t dim,
                               double separation, std::uint64_t seed);

}  // namespace outreg
