#include <cmath>

#include "advenc/nn.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace advenc;
using namespace advenc::testutil;

TEST_CASE("forward: identity linear layer passes input through") {
  Rng rng(1);
  Network net = identity_network(2, rng);
  const Matrix x = Matrix::from_rows({{0.3, 0.7}});
  const Matrix out = net.forward(x).output();
  CHECK(out(0, 0) == 0.3);
  CHECK(out(0, 1) == 0.7);
}

TEST_CASE("forward: sigmoid fixed points") {
  Rng rng(1);
  Network net({LayerSpec::sigmoid()}, rng);
  net.eval();
  const Matrix x = Matrix::from_rows({{0.0, 50.0, -50.0}});
  const Matrix out = net.forward(x).output();
  CHECK(out(0, 0) == 0.5);
  CHECK(out(0, 1) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(out(0, 2) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("forward: two-layer net matches hand evaluation") {
  // x(1x2) * W(2x2) + b, then ReLU; expected values computed independently
  Rng rng(1);
  Network net({LayerSpec::linear(2, 2), LayerSpec::relu()}, rng);
  net.weight(0) = Matrix::from_rows({{0.2, -0.1}, {0.4, 0.3}});
  net.bias(0) = Matrix::from_rows({{0.05, -0.05}});
  net.eval();
  const Matrix out = net.forward(Matrix::from_rows({{0.3, 0.7}})).output();
  CHECK(out(0, 0) == doctest::Approx(0.39).epsilon(1e-12));
  CHECK(out(0, 1) == doctest::Approx(0.13).epsilon(1e-12));
}

TEST_CASE("forward: dimension mismatch names the offending layer") {
  Rng rng(1);
  Network net({LayerSpec::linear(3, 2)}, rng);
  CHECK_THROWS_WITH_AS(net.forward(Matrix(1, 4)),
                       doctest::Contains("layer 0"), ShapeError);
}

TEST_CASE("network: incompatible consecutive linear dims rejected") {
  Rng rng(1);
  CHECK_THROWS_AS(Network({LayerSpec::linear(2, 3), LayerSpec::linear(4, 2)}, rng), ShapeError);
}

TEST_CASE("backward: identity linear with sum loss gives all-ones input grad") {
  Rng rng(1);
  Network net = identity_network(3, rng);
  const Matrix x = Matrix::from_rows({{0.1, 0.5, 0.9}});
  const ForwardTrace trace = net.forward(x);
  const Matrix ones(1, 3, 1.0);
  const Gradients g = net.backward(trace, ones);
  for (double v : g.input.values()) CHECK(v == 1.0);
}

TEST_CASE("backward: zero output grad zeroes every gradient") {
  Rng rng(7);
  Network net = every_kind_network(4, rng);
  const Matrix x = random_matrix(3, 4, rng, 0.0, 1.0);
  const ForwardTrace trace = net.forward(x);
  const Gradients g = net.backward(trace, Matrix(3, 3, 0.0));
  for (double v : g.input.values()) CHECK(v == 0.0);
  for (const auto& lg : g.layers) {
    for (double v : lg.weight.values()) CHECK(v == 0.0);
    for (double v : lg.bias.values()) CHECK(v == 0.0);
  }
}

TEST_CASE("backward: mismatched trace is rejected") {
  Rng rng(1);
  Network a({LayerSpec::linear(2, 2), LayerSpec::relu()}, rng);
  const ForwardTrace trace = a.forward(Matrix(2, 2, 0.1));
  CHECK_THROWS_AS(a.backward(trace, Matrix(2, 3, 0.0)), ShapeError);
  Network b({LayerSpec::linear(2, 2)}, rng);
  CHECK_THROWS_AS(b.backward(trace, Matrix(2, 2, 0.0)), ShapeError);
}

TEST_CASE("backward: gradients match central finite differences") {
  Rng rng(42);
  for (int trial = 0; trial < 5; ++trial) {
    Network net = every_kind_network(4, rng);
    const Matrix x = draw_input_off_kinks(net, 3, rng);
    const Matrix weighting = random_matrix(3, 3, rng);
    const auto res = check_gradients(net, x, weighting);
    CAPTURE(trial);
    CHECK(res.max_rel_err < 1e-4);
    CHECK(res.checked > 0);
  }
}

TEST_CASE("adam: zero gradient leaves parameters and moments unchanged") {
  Rng rng(3);
  Network net({LayerSpec::linear(2, 2)}, rng);
  const Matrix w_before = net.weight(0);
  Gradients g;
  g.layers.assign(1, LayerGrads{Matrix(2, 2, 0.0), Matrix(1, 2, 0.0)});
  net.adam_step(g, AdamHyper{1e-3, 0.9, 0.999, 1e-8});
  CHECK(net.weight(0) == w_before);
  CHECK(net.adam_step_count() == 1);
  for (double v : net.adam_m(0, false).values()) CHECK(v == 0.0);
  for (double v : net.adam_v(0, false).values()) CHECK(v == 0.0);
}

TEST_CASE("adam: first step is approximately -lr * sign(gradient)") {
  Rng rng(3);
  Network net({LayerSpec::linear(1, 1)}, rng);
  net.weight(0)(0, 0) = 0.5;
  net.bias(0)(0, 0) = 0.0;
  Gradients g;
  g.layers.assign(1, LayerGrads{Matrix(1, 1, 0.3), Matrix(1, 1, 0.0)});
  const AdamHyper hyper{1e-3, 0.9, 0.999, 1e-8};
  net.adam_step(g, hyper);
  // frozen from the closed-form first-step recurrence
  CHECK(net.weight(0)(0, 0) == doctest::Approx(0.49900000003333334).epsilon(1e-14));
  CHECK(std::abs((net.weight(0)(0, 0) - 0.5) + hyper.learning_rate) < 1e-7);
}

TEST_CASE("adam: two constant-gradient steps match the hand-unrolled recurrence") {
  Rng rng(3);
  Network net({LayerSpec::linear(1, 1)}, rng);
  net.weight(0)(0, 0) = 0.5;
  net.bias(0)(0, 0) = 0.0;
  const AdamHyper hyper{1e-3, 0.9, 0.999, 1e-8};
  const double grad = 0.3;
  Gradients g;
  g.layers.assign(1, LayerGrads{Matrix(1, 1, grad), Matrix(1, 1, 0.0)});
  net.adam_step(g, hyper);
  net.adam_step(g, hyper);

  // independent unroll of the Adam recurrences
  double theta = 0.5, m = 0.0, v = 0.0;
  for (int t = 1; t <= 2; ++t) {
    m = hyper.beta1 * m + (1.0 - hyper.beta1) * grad;
    v = hyper.beta2 * v + (1.0 - hyper.beta2) * grad * grad;
    const double mhat = m / (1.0 - std::pow(hyper.beta1, t));
    const double vhat = v / (1.0 - std::pow(hyper.beta2, t));
    theta -= hyper.learning_rate * mhat / (std::sqrt(vhat) + hyper.epsilon);
  }
  CHECK(net.weight(0)(0, 0) == doctest::Approx(theta).epsilon(1e-14));
  CHECK(net.weight(0)(0, 0) == doctest::Approx(0.49800000006666667).epsilon(1e-14));
}

TEST_CASE("adam: shape mismatch is rejected") {
  Rng rng(3);
  Network net({LayerSpec::linear(2, 2)}, rng);
  Gradients g;
  g.layers.assign(1, LayerGrads{Matrix(2, 3, 0.0), Matrix(1, 2, 0.0)});
  CHECK_THROWS_AS(net.adam_step(g, AdamHyper{1e-3, 0.9, 0.999, 1e-8}), ShapeError);
}

TEST_CASE("eval mode forward is idempotent and deterministic") {
  Rng rng(11);
  Network net = every_kind_network(5, rng);
  const Matrix x = random_matrix(4, 5, rng, 0.0, 1.0);
  const Matrix out1 = net.forward(x).output();
  const Matrix out2 = net.forward(x).output();
  CHECK(out1 == out2);
}

TEST_CASE("dropout: train-mode expectation matches eval activation") {
  Rng rng(5);
  Network net({LayerSpec::dropout(0.3)}, rng);
  net.train();
  const Matrix x(10, 50, 1.0);
  const int reps = 400;
  double total = 0.0;
  for (int r = 0; r < reps; ++r) {
    const Matrix out = net.forward(x).output();
    for (double v : out.values()) total += v;
  }
  const double mean = total / (reps * static_cast<double>(x.size()));
  CHECK(std::abs(mean - 1.0) < 0.01);  // inverted dropout keeps the expectation
  net.eval();
  const Matrix out_eval = net.forward(x).output();
  for (double v : out_eval.values()) CHECK(v == 1.0);
}

TEST_CASE("dropout: backward reuses the forward masks") {
  Rng rng(5);
  Network net({LayerSpec::dropout(0.5)}, rng);
  net.train();
  const Matrix x(2, 20, 1.0);
  const ForwardTrace trace = net.forward(x);
  const Gradients g = net.backward(trace, Matrix(2, 20, 1.0));
  // grad equals the mask itself (scale where kept, zero where dropped)
  for (std::size_t k = 0; k < g.input.size(); ++k)
    CHECK(g.input.values()[k] == trace.dropout_masks[0].values()[k]);
}

TEST_CASE("training determinism: same seed and config give identical parameters") {
  auto build_and_train = [](std::uint64_t seed) {
    Rng rng(seed);
    Network net({LayerSpec::linear(3, 4), LayerSpec::relu(), LayerSpec::dropout(0.2),
                 LayerSpec::linear(4, 2)},
                rng);
    Rng data_rng(derive_seed(seed, "data"));
    net.train();
    for (int step = 0; step < 25; ++step) {
      const Matrix x = random_matrix(6, 3, data_rng, 0.0, 1.0);
      const std::vector<int> y{0, 1, 0, 1, 0, 1};
      const ForwardTrace trace = net.forward(x);
      const LossResult ce = loss_cross_entropy(trace.output(), y);
      net.adam_step(net.backward(trace, ce.grad), AdamHyper{1e-3, 0.9, 0.999, 1e-8});
    }
    return net;
  };
  const Network a = build_and_train(99);
  const Network b = build_and_train(99);
  CHECK(a.params_equal(b));
  const Network c = build_and_train(100);
  CHECK_FALSE(a.params_equal(c));
}

TEST_CASE("layer spec validation") {
  CHECK_THROWS_AS(LayerSpec::linear(0, 3).validate(), ConfigError);
  CHECK_THROWS_AS(LayerSpec::dropout(1.0).validate(), ConfigError);
  CHECK_THROWS_AS(LayerSpec::leaky_relu(0.0).validate(), ConfigError);
  CHECK_THROWS_AS(LayerSpec::leaky_relu(1.5).validate(), ConfigError);
  CHECK_NOTHROW(LayerSpec::dropout(0.0).validate());
}
