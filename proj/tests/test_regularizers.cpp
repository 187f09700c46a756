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

#include "oracles.hpp"
#include "outreg/error.hpp"
#include "outreg/regularizers.hpp"

using namespace outreg;
using oracle::Vec;

namespace {

const double kLn3 = std::log(3.0);

Matrix rows_of(const std::vector<Vec>& rows) {
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) m(r, c) = rows[r][c];
  }
  return m;
}

Vec flat(const Matrix& m) { return {m.data(), m.data() + m.size()}; }

Matrix random_batch(std::size_t b, std::size_t k, std::mt19937_64& rng) {
  std::vector<Vec> rows;
  for (std::size_t i = 0; i < b; ++i) rows.push_back(oracle::random_logits(k, rng));
  return rows_of(rows);
}

std::vector<int> random_labels(std::size_t b, std::size_t k, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> d(0, static_cast<int>(k) - 1);
  std::vector<int> y(b);
  for (int& v : y) v = d(rng);
  return y;
}

Vec row(const Matrix& m, Eigen::Index r) { return {m.row(r).data(), m.row(r).data() + m.cols()}; }

// Per-example oracle objective, mean-reduced.
double oracle_loss(const Matrix& z, const std::vector<int>& y,
                   const std::function<double(const Vec& p, int label)>& per_row) {
  double total = 0;
  for (Eigen::Index r = 0; r < z.rows(); ++r) total += per_row(oracle::softmax(row(z, r)), y[r]);
  return total / static_cast<double>(z.rows());
}

void check_kind(ErrorKind kind, const std::function<void()>& fn) {
  try {
    fn();
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == kind);
  }
}

RegularizerSpec spec_of(RegularizerKind kind, double beta = 0, double gamma = 0, double eps = 0) {
  RegularizerSpec s;
  s.kind = kind;
  s.beta = beta;
  s.gamma = gamma;
  s.epsilon = eps;
  return s;
}

}  // namespace

TEST_CASE("nll examples") {
  const Matrix z = rows_of({{0.0, kLn3}});
  const std::vector<int> y{0};
  const auto r = nll_loss(z, y);
  CHECK(r.loss == doctest::Approx(1.386294).epsilon(1e-6));
  CHECK(r.loss == doctest::Approx(-std::log(0.25)).epsilon(1e-14));
  CHECK(r.grad_logits(0, 0) == doctest::Approx(0.25 - 1.0).epsilon(1e-14));
  CHECK(r.grad_logits(0, 1) == doctest::Approx(0.75).epsilon(1e-14));

  const auto confident = nll_loss(rows_of({{0.0, 60.0, 0.0}}), std::vector<int>{1});
  CHECK(confident.loss < 1e-20);
  CHECK(confident.grad_logits.cwiseAbs().maxCoeff() < 1e-20);

  check_kind(ErrorKind::invalid_label, [] { nll_loss(rows_of({{0.0, 0.0}}), std::vector<int>{2}); });
  check_kind(ErrorKind::invalid_label, [] { nll_loss(rows_of({{0.0, 0.0}}), std::vector<int>{-1}); });
  check_kind(ErrorKind::invalid_input, [] { nll_loss(Matrix(0, 3), std::vector<int>{}); });
}

TEST_CASE("confidence penalty examples") {
  const Matrix z = rows_of({{0.0, kLn3}});
  const std::vector<int> y{0};
  CHECK(confidence_penalty_loss(z, y, 1.0).loss == doctest::Approx(0.823959).epsilon(1e-6));

  std::mt19937_64 rng(1);
  const Matrix zb = random_batch(8, 10, rng);
  const auto yb = random_labels(8, 10, rng);
  const auto base = nll_loss(zb, yb);
  const auto zero = confidence_penalty_loss(zb, yb, 0.0);
  CHECK(zero.loss == base.loss);
  CHECK(zero.grad_logits == base.grad_logits);

  check_kind(ErrorKind::invalid_config, [&] { confidence_penalty_loss(zb, yb, -0.1); });
}

TEST_CASE("hinge confidence penalty examples") {
  const Matrix z = rows_of({{0.0, kLn3}});
  const std::vector<int> y{0};
  const double nll = nll_loss(z, y).loss;
  CHECK(hinge_confidence_penalty_loss(z, y, 1.0, 0.6).loss - nll ==
        doctest::Approx(0.037665).epsilon(1e-5));
  const auto inactive = hinge_confidence_penalty_loss(z, y, 1.0, 0.5);
  CHECK(inactive.loss == nll);
  CHECK(inactive.grad_logits == nll_loss(z, y).grad_logits);

  // gamma = ln K: nll + beta * KL(p || u)
  std::mt19937_64 rng(2);
  const Matrix zb = random_batch(6, 10, rng);
  const auto yb = random_labels(6, 10, rng);
  const double beta = 0.7;
  const double expected = oracle_loss(zb, yb, [&](const Vec& p, int label) {
    return -std::log(p[label]) + beta * oracle::kl(p, oracle::uniform(10));
  });
  CHECK(hinge_confidence_penalty_loss(zb, yb, beta, std::log(10.0)).loss ==
        doctest::Approx(expected).epsilon(1e-12));

  check_kind(ErrorKind::invalid_config,
             [&] { hinge_confidence_penalty_loss(z, y, 1.0, std::log(2.0) + 1e-6); });
}

TEST_CASE("hinge is inactive at H == gamma exactly") {
  const Matrix z = rows_of({{0.0, 0.0}});
  const std::vector<int> y{1};
  const auto r = hinge_confidence_penalty_loss(z, y, 3.0, std::log(2.0));
  CHECK(r.loss == nll_loss(z, y).loss);
  CHECK(r.grad_logits == nll_loss(z, y).grad_logits);
}

TEST_CASE("hinge dominance") {
  std::mt19937_64 rng(21);
  for (int t = 0; t < 200; ++t) {
    const Matrix z = random_batch(1, 5, rng);
    const auto y = random_labels(1, 5, rng);
    const double gamma = std::uniform_real_distribution<double>(0.0, std::log(5.0))(rng);
    const double beta = 1.3;
    const Vec p = oracle::softmax(row(z, 0));
    const double h = oracle::entropy(p);
    const double full = -std::log(p[y[0]]) + beta * (gamma - h);
    const double hinge = hinge_confidence_penalty_loss(z, y, beta, gamma).loss;
    CHECK(hinge >= full - 1e-12);
    if (h <= gamma) {
      CHECK(hinge == doctest::Approx(full).epsilon(1e-12));
    } else {
      CHECK(hinge > full);
    }
  }
}

TEST_CASE("smooth_targets examples") {
  const auto t = smooth_targets(3, 0.1, ProbVector::uniform(10));
  for (std::size_t i = 0; i < 10; ++i) {
    CHECK(t[i] == doctest::Approx(i == 3 ? 0.91 : 0.01).epsilon(1e-14));
  }
  const auto onehot = smooth_targets(1, 0.0, ProbVector::uniform(4));
  for (std::size_t i = 0; i < 4; ++i) CHECK(onehot[i] == (i == 1 ? 1.0 : 0.0));
  const ProbVector prior({0.5, 0.25, 0.25});
  const auto full = smooth_targets(0, 1.0, prior);
  for (std::size_t i = 0; i < 3; ++i) CHECK(full[i] == prior[i]);

  check_kind(ErrorKind::invalid_label, [] { smooth_targets(10, 0.1, ProbVector::uniform(10)); });
  check_kind(ErrorKind::invalid_config, [] { smooth_targets(0, 1.5, ProbVector::uniform(10)); });
}

TEST_CASE("smoothed cross entropy") {
  std::mt19937_64 rng(4);
  const Matrix z = random_batch(8, 10, rng);
  const auto y = random_labels(8, 10, rng);
  const auto base = nll_loss(z, y);
  const auto zero = smoothed_ce_loss(z, y, 0.0, ProbVector::uniform(10));
  CHECK(zero.loss == base.loss);
  CHECK(zero.grad_logits == base.grad_logits);

  // (1 - eps) nll + eps [KL(u || p) + ln K]
  const double eps = 0.3;
  const double expected = oracle_loss(z, y, [&](const Vec& p, int label) {
    return (1 - eps) * -std::log(p[label]) +
           eps * (oracle::kl(oracle::uniform(10), p) + std::log(10.0));
  });
  CHECK(std::abs(smoothed_ce_loss(z, y, eps, ProbVector::uniform(10)).loss - expected) < 1e-9);

  // arbitrary prior: (1 - eps) nll + eps CE(prior, p)
  const Vec prior = oracle::random_simplex(10, rng);
  const double expected_prior = oracle_loss(z, y, [&](const Vec& p, int label) {
    return (1 - eps) * -std::log(p[label]) + eps * oracle::cross_entropy(prior, p);
  });
  CHECK(std::abs(smoothed_ce_loss(z, y, eps, ProbVector(prior)).loss - expected_prior) < 1e-9);
}

TEST_CASE("unigram prior") {
  const auto a = unigram_prior(std::vector<int>{0, 0, 1, 2}, 3);
  CHECK(a.prior[0] == 0.5);
  CHECK(a.prior[1] == 0.25);
  CHECK(a.prior[2] == 0.25);
  CHECK(a.mask == ClassMask{1, 1, 1});
  const auto b = unigram_prior(std::vector<int>{0, 0}, 3);
  CHECK(b.prior[0] == 1.0);
  CHECK(b.prior[1] == 0.0);
  CHECK(b.mask == ClassMask{1, 0, 0});
  check_kind(ErrorKind::invalid_input, [] { unigram_prior(std::vector<int>{}, 3); });
  check_kind(ErrorKind::invalid_label, [] { unigram_prior(std::vector<int>{3}, 3); });
}

TEST_CASE("label noise") {
  std::mt19937_64 rng(6);
  for (int t = 0; t < 1000; ++t) CHECK(apply_label_noise(t % 10, 10, 0.0, rng) == t % 10);

  std::vector<int> counts(10, 0);
  const int n = 100000;
  for (int t = 0; t < n; ++t) ++counts[static_cast<std::size_t>(apply_label_noise(3, 10, 1.0, rng))];
  for (int c : counts) CHECK(std::abs(c / static_cast<double>(n) - 0.1) <= 0.005);

  std::mt19937_64 a(99), b(99);
  for (int t = 0; t < 500; ++t) {
    CHECK(apply_label_noise(t % 7, 7, 0.4, a) == apply_label_noise(t % 7, 7, 0.4, b));
  }

  std::mt19937_64 ex(8);
  for (int t = 0; t < 1000; ++t) CHECK(apply_label_noise(2, 5, 1.0, ex, true) != 2);

  check_kind(ErrorKind::invalid_label, [&] { apply_label_noise(5, 5, 0.1, rng); });
  check_kind(ErrorKind::invalid_config, [&] { apply_label_noise(0, 5, -0.1, rng); });
}

TEST_CASE("effective beta") {
  auto s = spec_of(RegularizerKind::confidence_penalty, 2.0);
  for (std::int64_t step : {0, 1, 500, 100000}) CHECK(effective_beta(s, step) == 2.0);
  s.anneal = {AnnealMode::linear_ramp, 1000};
  CHECK(effective_beta(s, 500) == 1.0);
  CHECK(effective_beta(s, 0) == 0.0);
  CHECK(effective_beta(s, 1000) == 2.0);
  CHECK(effective_beta(s, 5000) == 2.0);
  double prev = -1;
  for (std::int64_t step = 0; step <= 1500; step += 7) {
    const double b = effective_beta(s, step);
    CHECK(b >= prev);
    CHECK(b <= 2.0);
    prev = b;
  }
}

TEST_CASE("regularizer spec validation") {
  check_kind(ErrorKind::invalid_config,
             [] { spec_of(RegularizerKind::confidence_penalty, -1.0).validate(10); });
  check_kind(ErrorKind::invalid_config, [] {
    spec_of(RegularizerKind::uniform_label_smoothing, 0, 0, 1.1).validate(10);
  });
  check_kind(ErrorKind::invalid_config, [] {
    spec_of(RegularizerKind::hinge_confidence_penalty, 1.0, 2.4).validate(10);
  });
  spec_of(RegularizerKind::hinge_confidence_penalty, 1.0, std::log(10.0)).validate(10);
  check_kind(ErrorKind::invalid_config, [] {
    auto s = spec_of(RegularizerKind::confidence_penalty, 1.0);
    s.anneal = {AnnealMode::linear_ramp, 0};
    s.validate(10);
  });
  check_kind(ErrorKind::invalid_config,
             [] { spec_of(RegularizerKind::unigram_label_smoothing, 0, 0, 0.1).validate(3); });
  check_kind(ErrorKind::invalid_config, [] {
    auto s = spec_of(RegularizerKind::uniform_label_smoothing, 0, 0, 0.1);
    s.prior = Vec{0.5, 0.25, 0.25};
    s.validate(3);
  });
  auto ok = spec_of(RegularizerKind::unigram_label_smoothing, 0, 0, 0.1);
  ok.prior = Vec{0.5, 0.25, 0.25};
  ok.validate(3);
  CHECK(parse_regularizer_kind("label_noise") == RegularizerKind::label_noise);
  CHECK_FALSE(parse_regularizer_kind("label-noise").has_value());
}

TEST_CASE("masked loss") {
  std::mt19937_64 rng(12);
  const Matrix z = random_batch(6, 4, rng);
  const auto y = random_labels(6, 3, rng);  // never class 3
  const auto cp = spec_of(RegularizerKind::confidence_penalty, 0.8);
  const auto all = masked_loss(cp, z, y, ClassMask{1, 1, 1, 1});
  const auto plain = evaluate_loss(cp, z, y);
  CHECK(all.loss == plain.loss);
  CHECK(all.grad_logits == plain.grad_logits);

  const auto m = masked_loss(cp, z, y, ClassMask{1, 1, 1, 0});
  for (Eigen::Index r = 0; r < z.rows(); ++r) CHECK(m.grad_logits(r, 3) == 0.0);
  // oracle: the same loss on the first three columns only
  const Matrix z3 = z.leftCols(3);
  CHECK(m.loss == doctest::Approx(evaluate_loss(cp, z3, y).loss).epsilon(1e-13));

  // softmax [0.5, 0.5, 0] on z = 0: nll = ln 2
  const auto half = masked_loss(RegularizerSpec{}, rows_of({{0.0, 0.0, 0.0}}), std::vector<int>{0},
                                ClassMask{1, 1, 0});
  CHECK(half.loss == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(half.grad_logits(0, 0) == doctest::Approx(-0.5).epsilon(1e-15));
  CHECK(half.grad_logits(0, 1) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(half.grad_logits(0, 2) == 0.0);

  check_kind(ErrorKind::invalid_mask, [&] { masked_loss(cp, z, y, ClassMask{0, 0, 0, 0}); });
  check_kind(ErrorKind::invalid_mask,
             [&] { masked_loss(cp, z, std::vector<int>(6, 3), ClassMask{1, 1, 1, 0}); });
  check_kind(ErrorKind::invalid_mask, [&] { masked_loss(cp, z, y, ClassMask{1, 1}); });
}

TEST_CASE("reversed KL identity") {
  std::mt19937_64 rng(13);
  const double beta = 1.7;
  for (std::size_t k : {2u, 10u}) {
    for (int t = 0; t < 100; ++t) {
      const Matrix z = random_batch(5, k, rng);
      const auto y = random_labels(5, k, rng);
      const auto cp = confidence_penalty_loss(z, y, beta);
      const auto nll = nll_loss(z, y);
      double mean_kl = 0;
      for (Eigen::Index r = 0; r < z.rows(); ++r) mean_kl += kl_to_uniform(softmax(LogitVector(row(z, r))));
      mean_kl /= static_cast<double>(z.rows());
      CHECK(std::abs(cp.loss - (nll.loss + beta * (mean_kl - std::log(static_cast<double>(k))))) < 1e-9);
      // gradient: (p - onehot) + beta * dKL, then the batch mean
      for (Eigen::Index r = 0; r < z.rows(); ++r) {
        const auto klg = kl_to_uniform_grad_logits(LogitVector(row(z, r)));
        const auto p = softmax(LogitVector(row(z, r)));
        for (Eigen::Index c = 0; c < z.cols(); ++c) {
          const double onehot = c == y[r] ? 1.0 : 0.0;
          const double g = ((p[c] - onehot) + beta * klg[c]) / static_cast<double>(z.rows());
          CHECK(cp.grad_logits(r, c) == g);
        }
      }
    }
  }
}

TEST_CASE("every loss matches finite differences") {
  std::mt19937_64 rng(17);
  for (std::size_t k : {2u, 10u}) {
    std::vector<RegularizerSpec> zoo{
        spec_of(RegularizerKind::none),
        spec_of(RegularizerKind::confidence_penalty, 1.0),
        spec_of(RegularizerKind::hinge_confidence_penalty, 2.0, 0.8 * std::log(static_cast<double>(k))),
        spec_of(RegularizerKind::uniform_label_smoothing, 0, 0, 0.1),
        spec_of(RegularizerKind::unigram_label_smoothing, 0, 0, 0.3),
        spec_of(RegularizerKind::label_noise, 0, 0, 0.1)};
    zoo[4].prior = oracle::random_simplex(k, rng);
    auto annealed = spec_of(RegularizerKind::confidence_penalty, 1.5);
    annealed.anneal = {AnnealMode::linear_ramp, 40};
    zoo.push_back(annealed);
    for (const auto& spec : zoo) {
      int done = 0;
      while (done < 50) {
        const Matrix z = random_batch(3, k, rng);
        const auto y = random_labels(3, k, rng);
        if (spec.kind == RegularizerKind::hinge_confidence_penalty) {
          bool near = false;
          for (Eigen::Index r = 0; r < z.rows(); ++r) {
            near = near || std::abs(oracle::entropy(oracle::softmax(row(z, r))) - spec.gamma) < 1e-3;
          }
          if (near) continue;
        }
        const auto analytic = flat(evaluate_loss(spec, z, y, 10).grad_logits);
        const auto numeric = oracle::fd_gradient(
            [&](const Vec& v) {
              return evaluate_loss(spec, Eigen::Map<const Matrix>(v.data(), z.rows(), z.cols()), y, 10).loss;
            },
            flat(z));
        CHECK(oracle::rel_error(analytic, numeric) < 1e-5);
        ++done;
      }
    }
  }
}

TEST_CASE("confidence penalty keeps a free logit vector off the vertex") {
  const std::vector<int> y{0};
  const auto descend = [&](double beta) {
    Matrix z = Matrix::Zero(1, 4);
    for (int step = 0; step < 20000; ++step) z -= 1.0 * confidence_penalty_loss(z, y, beta).grad_logits;
    return oracle::softmax(row(z, 0));
  };
  const Vec p_cp = descend(0.5);
  CHECK(oracle::entropy(p_cp) > 0.1);
  CHECK(p_cp[0] < 0.99);
  // the off-target classes sit where -ln q - H = 1 / beta
  const double h = oracle::entropy(p_cp);
  CHECK(-std::log(p_cp[1]) - h == doctest::Approx(2.0).epsilon(1e-6));
  const Vec p_none = descend(0.0);
  CHECK(p_none[0] > 0.999);
  CHECK(p_none[0] > p_cp[0]);
}
