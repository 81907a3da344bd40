#include <cmath>

#include "advenc/nn.hpp"
#include "advenc/rng.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace advenc;
using namespace advenc::testutil;

TEST_CASE("bce: uniform 0.5 prediction gives ln 2 for any binary target") {
  const Matrix pred(3, 2, 0.5);
  const Matrix target = Matrix::from_rows({{0, 1}, {1, 1}, {0, 0}});
  const LossResult r = loss_bce(pred, target);
  CHECK(std::abs(r.value - std::log(2.0)) < 1e-12);
}

TEST_CASE("bce: perfect prediction stays within the clamp-floor bound") {
  const Matrix pred = Matrix::from_rows({{1.0, 0.0}});
  const Matrix target = Matrix::from_rows({{1.0, 0.0}});
  const LossResult r = loss_bce(pred, target);
  CHECK(r.value <= -std::log(1.0 - kBceClamp) + 1e-15);
  CHECK(r.value >= 0.0);
}

TEST_CASE("bce: frozen value -ln 0.8") {
  const LossResult r = loss_bce(Matrix(1, 1, 0.8), Matrix(1, 1, 1.0));
  CHECK(r.value == doctest::Approx(0.2231435513142097).epsilon(1e-14));
}

TEST_CASE("bce: gradient matches the analytic form and finite differences") {
  Rng rng(4);
  const Matrix pred = random_matrix(3, 2, rng, 0.1, 0.9);
  const Matrix target = Matrix::from_rows({{0, 1}, {1, 0}, {1, 1}});
  const LossResult r = loss_bce(pred, target);
  const double h = 1e-6;
  for (std::size_t k = 0; k < pred.size(); ++k) {
    Matrix p2 = pred;
    p2.values()[k] += h;
    const double fp = loss_bce(p2, target).value;
    p2.values()[k] -= 2 * h;
    const double fm = loss_bce(p2, target).value;
    CHECK(r.grad.values()[k] == doctest::Approx((fp - fm) / (2 * h)).epsilon(1e-5));
  }
}

TEST_CASE("bce: non-binary target rejected") {
  CHECK_THROWS_AS(loss_bce(Matrix(1, 1, 0.5), Matrix(1, 1, 0.3)), ConfigError);
}

TEST_CASE("cross-entropy: uniform logits give ln K") {
  for (std::size_t k : {2, 3, 7}) {
    const Matrix logits(4, k, 1.25);
    const std::vector<int> labels(4, static_cast<int>(k - 1));
    const LossResult r = loss_cross_entropy(logits, labels);
    CHECK(std::abs(r.value - std::log(static_cast<double>(k))) < 1e-12);
  }
}

TEST_CASE("cross-entropy: saturated correct logits give near-zero loss") {
  const Matrix logits = Matrix::from_rows({{40.0, 0.0}, {0.0, 40.0}});
  const LossResult r = loss_cross_entropy(logits, {0, 1});
  CHECK(r.value < 1e-12);
}

TEST_CASE("cross-entropy: frozen value for logits [1,0], label 0") {
  const LossResult r = loss_cross_entropy(Matrix::from_rows({{1.0, 0.0}}), {0});
  CHECK(r.value == doctest::Approx(0.3132616875182228).epsilon(1e-14));
}

TEST_CASE("cross-entropy: gradient is (softmax - onehot)/rows") {
  const Matrix logits = Matrix::from_rows({{1.0, 0.0}});
  const LossResult r = loss_cross_entropy(logits, {0});
  const double p0 = 1.0 / (1.0 + std::exp(-1.0));
  CHECK(r.grad(0, 0) == doctest::Approx(p0 - 1.0).epsilon(1e-14));
  CHECK(r.grad(0, 1) == doctest::Approx(1.0 - p0).epsilon(1e-14));
}

TEST_CASE("cross-entropy: label out of range rejected") {
  CHECK_THROWS_AS(loss_cross_entropy(Matrix(1, 2, 0.0), {2}), ConfigError);
  CHECK_THROWS_AS(loss_cross_entropy(Matrix(1, 2, 0.0), {-1}), ConfigError);
}

TEST_CASE("l1: identical inputs give zero loss and zero grad") {
  Rng rng(4);
  const Matrix a = random_matrix(3, 4, rng);
  const LossResult r = loss_l1(a, a);
  CHECK(r.value == 0.0);
  for (double v : r.grad.values()) CHECK(v == 0.0);
}

TEST_CASE("l1: symmetric in its arguments") {
  Rng rng(5);
  const Matrix a = random_matrix(4, 3, rng);
  const Matrix b = random_matrix(4, 3, rng);
  CHECK(loss_l1(a, b).value == loss_l1(b, a).value);
}

TEST_CASE("l1: hand-computed mean") {
  const Matrix a = Matrix::from_rows({{0.2, 0.9}});
  const Matrix b = Matrix::from_rows({{0.5, 0.5}});
  const LossResult r = loss_l1(a, b);
  CHECK(r.value == doctest::Approx(0.35).epsilon(1e-14));
  CHECK(r.grad(0, 0) == -0.5);  // sign/numel
  CHECK(r.grad(0, 1) == 0.5);
}

TEST_CASE("l1: shape mismatch rejected") {
  CHECK_THROWS_AS(loss_l1(Matrix(1, 2), Matrix(2, 1)), ShapeError);
}
