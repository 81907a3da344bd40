#pragma once

#include <cmath>
#include <vector>

#include "advenc/advenc.hpp"
#include "advenc/nn.hpp"

namespace advenc::testutil {

// Central finite differences of f(theta) = sum(output .* weighting) over
// every parameter and input element, compared against backward(). The
// weighting plays the role of output_grad, so the analytic side is exactly
// one backward pass. Eval mode only (dropout must be identity).
struct GradCheckResult {
  double max_rel_err = 0.0;
  std::size_t checked = 0;
};

inline double fd_scalar(const Network& net, const Matrix& x, const Matrix& weighting) {
  const Matrix out = net.forward_eval(x).output();
  double s = 0.0;
  const double* po = out.data();
  const double* pw = weighting.data();
  for (std::size_t k = 0; k < out.size(); ++k) s += po[k] * pw[k];
  return s;
}

inline double rel_err(double analytic, double numeric, double atol, double rtol) {
  const double diff = std::abs(analytic - numeric);
  const double scale = std::max(std::abs(analytic), std::abs(numeric));
  if (diff <= atol) return 0.0;
  return diff / std::max(scale, atol / rtol);
}

inline GradCheckResult check_gradients(Network& net, const Matrix& x, const Matrix& weighting,
                                       double h = 1e-4, double atol = 1e-7) {
  GradCheckResult res;
  const ForwardTrace trace = net.forward_eval(x);
  const Gradients grads = net.backward(trace, weighting);

  auto probe_param = [&](Matrix& param, const Matrix& analytic) {
    for (std::size_t k = 0; k < param.size(); ++k) {
      double& v = param.values()[k];
      const double saved = v;
      v = saved + h;
      const double fp = fd_scalar(net, x, weighting);
      v = saved - h;
      const double fm = fd_scalar(net, x, weighting);
      v = saved;
      const double fd = (fp - fm) / (2.0 * h);
      res.max_rel_err =
          std::max(res.max_rel_err, rel_err(analytic.values()[k], fd, atol, 1e-4));
      ++res.checked;
    }
  };
  for (std::size_t i = 0; i < net.layer_count(); ++i) {
    if (net.specs()[i].kind != LayerKind::Linear) continue;
    probe_param(net.weight(i), grads.layers[i].weight);
    probe_param(net.bias(i), grads.layers[i].bias);
  }
  // input gradient
  Matrix xp = x;
  for (std::size_t k = 0; k < xp.size(); ++k) {
    const double saved = xp.values()[k];
    xp.values()[k] = saved + h;
    const double fp = fd_scalar(net, xp, weighting);
    xp.values()[k] = saved - h;
    const double fm = fd_scalar(net, xp, weighting);
    xp.values()[k] = saved;
    const double fd = (fp - fm) / (2.0 * h);
    res.max_rel_err =
        std::max(res.max_rel_err, rel_err(grads.input.values()[k], fd, atol, 1e-4));
    ++res.checked;
  }
  return res;
}

// A network whose layer stack covers every supported kind, eval mode.
inline Network every_kind_network(std::size_t in_dim, Rng& rng) {
  std::vector<LayerSpec> specs{
      LayerSpec::linear(in_dim, 6), LayerSpec::relu(),
      LayerSpec::linear(6, 5),      LayerSpec::leaky_relu(0.2),
      LayerSpec::dropout(0.3),
      LayerSpec::linear(5, 4),      LayerSpec::sigmoid(),
      LayerSpec::linear(4, 3),      LayerSpec::softmax(),
  };
  Network net(std::move(specs), rng);
  net.eval();
  return net;
}

inline Matrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng, double lo = -1.0,
                            double hi = 1.0) {
  Matrix m(rows, cols);
  for (double& v : m.values()) v = rng.uniform(lo, hi);
  return m;
}

// Finite differences break down when a ReLU/LeakyReLU pre-activation sits
// within the probe step of its kink; redraw inputs until all rectifier
// inputs keep a safe margin.
inline Matrix draw_input_off_kinks(const Network& net, std::size_t rows, Rng& rng,
                                   double margin = 5e-3, double lo = 0.05, double hi = 0.95) {
  for (int attempt = 0; attempt < 200; ++attempt) {
    Matrix x = random_matrix(rows, net.input_dim() ? net.input_dim() : 1, rng, lo, hi);
    const ForwardTrace trace = net.forward_eval(x);
    bool clear = true;
    for (std::size_t i = 0; i < net.layer_count() && clear; ++i) {
      const LayerKind k = net.specs()[i].kind;
      if (k != LayerKind::ReLU && k != LayerKind::LeakyReLU) continue;
      for (double v : trace.activations[i].values()) {
        if (std::abs(v) < margin) {
          clear = false;
          break;
        }
      }
    }
    if (clear) return x;
  }
  throw std::runtime_error("draw_input_off_kinks: no kink-free input found");
}

// Single Linear layer preset to the identity map.
inline Network identity_network(std::size_t dim, Rng& rng) {
  Network net({LayerSpec::linear(dim, dim)}, rng);
  for (std::size_t i = 0; i < dim; ++i)
    for (std::size_t j = 0; j < dim; ++j) net.weight(0)(i, j) = i == j ? 1.0 : 0.0;
  for (double& v : net.bias(0).values()) v = 0.0;
  net.eval();
  return net;
}

}  // namespace advenc::testutil
