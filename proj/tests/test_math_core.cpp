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

#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "oracles.hpp"
#include "outreg/error.hpp"
#include "outreg/math_core.hpp"

using namespace outreg;
using oracle::Vec;

namespace {

Vec vec(std::span<const double> s) { return {s.begin(), s.end()}; }

void check_kind(ErrorKind kind, const std::function<void()>& fn) {
  try {
    fn();
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == kind);
  }
}

const double kLn2 = std::numbers::ln2;
const double kLn3 = std::log(3.0);

}  // namespace

TEST_CASE("log_softmax basic values") {
  auto a = log_softmax(LogitVector({0.0, 0.0}));
  CHECK(a[0] == doctest::Approx(-kLn2).epsilon(1e-15));
  CHECK(a[1] == doctest::Approx(-kLn2).epsilon(1e-15));

  for (double c : {-50.0, 0.0, 3.7, 600.0}) {
    for (double v : log_softmax(LogitVector({c, c, c, c}))) {
      CHECK(v == doctest::Approx(-std::log(4.0)).epsilon(1e-14));
    }
  }

  auto big = log_softmax(LogitVector({1000.0, 0.0}));
  CHECK(std::isfinite(big[0]));
  CHECK(big[0] == doctest::Approx(0.0));
  CHECK(big[1] == doctest::Approx(-1000.0));

  auto extreme = log_softmax(LogitVector({700.0, -700.0, 0.0}));
  for (double v : extreme) CHECK(std::isfinite(v));
}

TEST_CASE("softmax basic values") {
  auto p = softmax(LogitVector({0.0, kLn3}));
  CHECK(p[0] == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(p[1] == doctest::Approx(0.75).epsilon(1e-14));

  auto u = softmax(LogitVector(Vec(10, 0.0)));
  for (double v : u.values()) CHECK(v == doctest::Approx(0.1).epsilon(1e-15));

  auto q = softmax(LogitVector({5.0, 5.0 + kLn2}));
  CHECK(q[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  CHECK(q[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
}

TEST_CASE("non-finite or undersized logits are rejected") {
  const double inf = std::numeric_limits<double>::infinity();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  check_kind(ErrorKind::invalid_input, [&] { LogitVector({0.0, inf}); });
  check_kind(ErrorKind::invalid_input, [&] { LogitVector({nan, 1.0}); });
  check_kind(ErrorKind::invalid_input, [&] { LogitVector({1.0}); });
  check_kind(ErrorKind::invalid_input, [&] { entropy_grad_logits(LogitVector({0.0, -inf})); });
}

TEST_CASE("ProbVector validation and renormalize helper") {
  check_kind(ErrorKind::invalid_input, [] { ProbVector({0.5, 0.6}); });
  check_kind(ErrorKind::invalid_input, [] { ProbVector({-0.1, 1.1}); });
  check_kind(ErrorKind::invalid_input, [] { ProbVector({1.0}); });
  // inside the 1e-9 tolerance is accepted as-is, not rescaled
  ProbVector near({0.5, 0.5 + 5e-10});
  CHECK(near[1] == 0.5 + 5e-10);
  auto r = ProbVector::renormalized({1.0, 3.0});
  CHECK(r[0] == 0.25);
  CHECK(r[1] == 0.75);
  check_kind(ErrorKind::invalid_input, [] { ProbVector::renormalized({0.0, 0.0}); });
}

TEST_CASE("entropy examples") {
  CHECK(entropy(ProbVector({1.0, 0.0, 0.0})) == 0.0);
  CHECK(entropy(ProbVector::uniform(10)) == doctest::Approx(std::log(10.0)).epsilon(1e-14));
  // hand value: -(0.25 ln 0.25 + 0.75 ln 0.75)
  CHECK(entropy(ProbVector({0.25, 0.75})) == doctest::Approx(0.562335).epsilon(1e-6));
  CHECK(entropy(ProbVector({0.25, 0.75})) ==
        doctest::Approx(oracle::entropy({0.25, 0.75})).epsilon(1e-15));
  check_kind(ErrorKind::invalid_input, [] { entropy(ProbVector({0.3, 0.3})); });
}

TEST_CASE("entropy_grad_logits examples") {
  for (double v : entropy_grad_logits(LogitVector({2.5, 2.5, 2.5}))) CHECK(v == 0.0);
  auto g = entropy_grad_logits(LogitVector({0.0, kLn3}));
  CHECK(g[0] == doctest::Approx(0.205990).epsilon(1e-5));
  CHECK(g[1] == doctest::Approx(-0.205990).epsilon(1e-5));
  // exact value 0.25 * (ln 4 - H)
  const double h = oracle::entropy({0.25, 0.75});
  CHECK(g[0] == doctest::Approx(0.25 * (std::log(4.0) - h)).epsilon(1e-13));
}

TEST_CASE("entropy gradient matches finite differences") {
  std::mt19937_64 rng(11);
  for (std::size_t k : {2u, 10u, 100u}) {
    for (int t = 0; t < 100; ++t) {
      const Vec z = oracle::random_logits(k, rng);
      const Vec analytic = entropy_grad_logits(LogitVector(z));
      const Vec numeric = oracle::fd_gradient(
          [](const Vec& v) { return oracle::entropy(oracle::softmax(v)); }, z);
      CHECK(oracle::rel_error(analytic, numeric) < 1e-5);
      double sum = 0;
      for (double v : analytic) sum += v;
      CHECK(std::abs(sum) < 1e-9);
    }
  }
}

TEST_CASE("kl_to_uniform examples") {
  CHECK(kl_to_uniform(ProbVector::uniform(7)) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(kl_to_uniform(ProbVector({0.25, 0.75})) == doctest::Approx(0.130812).epsilon(1e-5));
  Vec point(10, 0.0);
  point[0] = 1.0;
  CHECK(kl_to_uniform(ProbVector(point)) == doctest::Approx(std::log(10.0)).epsilon(1e-14));
}

TEST_CASE("kl_from_uniform examples") {
  CHECK(kl_from_uniform(ProbVector::uniform(5)) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(kl_from_uniform(ProbVector({0.25, 0.75})) == doctest::Approx(0.143841).epsilon(1e-5));
  Vec p(10, 0.01);
  p[0] = 0.91;
  CHECK(kl_from_uniform(ProbVector(p)) ==
        doctest::Approx(oracle::kl(oracle::uniform(10), p)).epsilon(1e-13));
  CHECK(kl_from_uniform(ProbVector({0.0, 1.0})) == std::numeric_limits<double>::infinity());
}

TEST_CASE("simplex invariants on random points") {
  std::mt19937_64 rng(5);
  for (std::size_t k : {2u, 3u, 10u, 50u}) {
    const double ln_k = std::log(static_cast<double>(k));
    for (int t = 0; t < 200; ++t) {
      const ProbVector p(oracle::random_simplex(k, rng));
      const double h = entropy(p);
      CHECK(h >= 0.0);
      CHECK(h <= ln_k + 1e-12);
      CHECK(std::abs(kl_to_uniform(p) + h - ln_k) < 1e-9);
      CHECK(kl_from_uniform(p) >= 0.0);
      CHECK(kl_from_uniform(p) ==
            doctest::Approx(oracle::kl(oracle::uniform(k), vec(p.values()))).epsilon(1e-10));
    }
  }
}

TEST_CASE("softmax is shift invariant") {
  std::mt19937_64 rng(9);
  for (int t = 0; t < 100; ++t) {
    Vec z = oracle::random_logits(10, rng);
    const auto p = softmax(LogitVector(z));
    for (double c : {-30.0, 0.5, 100.0}) {
      Vec s = z;
      for (double& v : s) v += c;
      const auto q = softmax(LogitVector(s));
      for (std::size_t i = 0; i < z.size(); ++i) CHECK(std::abs(p[i] - q[i]) < 1e-12);
    }
  }
}

TEST_CASE("KL-to-uniform gradient is the negated entropy gradient bitwise") {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 100; ++t) {
    const LogitVector z(oracle::random_logits(10, rng));
    const Vec a = kl_to_uniform_grad_logits(z);
    const Vec b = entropy_grad_logits(z);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == -b[i]);
  }
}

TEST_CASE("masked log_softmax kernel") {
  const Vec z{0.0, 0.0, 0.0};
  const std::vector<std::uint8_t> mask{1, 1, 0};
  Vec lp(3);
  kernels::log_softmax(z, lp, mask);
  CHECK(std::exp(lp[0]) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(std::exp(lp[1]) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(lp[2] == -std::numeric_limits<double>::infinity());
  CHECK(kernels::entropy_from_log_probs(lp) == doctest::Approx(kLn2).epsilon(1e-15));
  Vec g(3);
  kernels::entropy_grad_from_log_probs(lp, kLn2, g);
  CHECK(g[2] == 0.0);
}
