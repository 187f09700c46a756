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

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <string>

#include "outreg/error.hpp"
#include "outreg/mlp.hpp"

namespace outreg {

namespace {

constexpr std::array<char, 8> kMagic = {'O', 'R', 'C', 'K', 'P', 'T', '0', '1'};
constexpr std::uint64_t kMaxDim = std::uint64_t{1} << 32;

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

void write_u64(std::ofstream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void write_doubles(std::ofstream& out, const double* data, Eigen::Index n) {
  out.write(reinterpret_cast<const char*>(data),
            static_cast<std::streamsize>(n * static_cast<Eigen::Index>(sizeof(double))));
}

class Reader {
 public:
  explicit Reader(const std::filesystem::path& path) : path_(path), in_(path, std::ios::binary) {
    if (!in_) fail(ErrorKind::io, "cannot open checkpoint " + path.string());
  }

  void read(void* dst, std::size_t bytes, const char* what) {
    in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(bytes));
    if (static_cast<std::size_t>(in_.gcount()) != bytes) {
      fail(ErrorKind::format, path_.string() + ": truncated while reading " + what +
                                  " at offset " + std::to_string(offset_));
    }
    offset_ += bytes;
  }

  std::uint64_t u64(const char* what) {
    std::uint64_t v = 0;
    read(&v, sizeof v, what);
    return v;
  }

  void expect_eof() {
    if (in_.peek() != std::char_traits<char>::eof()) {
      fail(ErrorKind::format, path_.string() + ": trailing bytes at offset " +
                                  std::to_string(offset_));
    }
  }

 private:
  std::filesystem::path path_;
  std::ifstream in_;
  std::size_t offset_ = 0;
};

}  // namespace

void save_checkpoint(const MLPParameters& params, const std::filesystem::path& path) {
  params.arch.validate();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::io, "cannot write checkpoint " + path.string());
  out.write(kMagic.data(), kMagic.size());
  write_u64(out, params.arch.input_dim);
  write_u64(out, params.arch.classes);
  write_u64(out, params.arch.hidden.size());
  for (std::size_t h : params.arch.hidden) write_u64(out, h);
  for (const auto& layer : params.layers) {
    write_doubles(out, layer.weights.data(), layer.weights.size());
    write_doubles(out, layer.bias.data(), layer.bias.size());
  }
  if (!out) fail(ErrorKind::io, "failed writing checkpoint " + path.string());
}

MLPParameters load_checkpoint(const std::filesystem::path& path) {
  Reader in(path);
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size(), "magic");
  if (magic != kMagic) fail(ErrorKind::format, path.string() + ": bad checkpoint magic at offset 0");

  Architecture arch;
  const auto dim_or_fail = [&](std::uint64_t v) {
    if (v == 0 || v > kMaxDim) fail(ErrorKind::format, path.string() + ": implausible dimension");
    return static_cast<std::size_t>(v);
  };
  arch.input_dim = dim_or_fail(in.u64("input_dim"));
  arch.classes = dim_or_fail(in.u64("classes"));
  const std::uint64_t n_hidden = in.u64("hidden count");
  if (n_hidden > 64) fail(ErrorKind::format, path.string() + ": implausible hidden layer count");
  for (std::uint64_t i = 0; i < n_hidden; ++i) arch.hidden.push_back(dim_or_fail(in.u64("hidden")));

  MLPParameters params = MLPParameters::zeros(arch);
  for (auto& layer : params.layers) {
    in.read(layer.weights.data(), static_cast<std::size_t>(layer.weights.size()) * sizeof(double),
            "weights");
    in.read(layer.bias.data(), static_cast<std::size_t>(layer.bias.size()) * sizeof(double),
            "bias");
  }
  in.expect_eof();
  return params;
}

}  // namespace outreg
