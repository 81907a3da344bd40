#include "advenc/nn.hpp"

#include <algorithm>
#include <cmath>

namespace advenc {

void AdamHyper::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("adam: learning_rate must be > 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw ConfigError("adam: beta1 must be in [0,1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("adam: beta2 must be in [0,1)");
  if (!(epsilon > 0.0)) throw ConfigError("adam: epsilon must be > 0");
}

std::string layer_kind_name(LayerKind k) {
  switch (k) {
    case LayerKind::Linear: return "Linear";
    case LayerKind::ReLU: return "ReLU";
    case LayerKind::LeakyReLU: return "LeakyReLU";
    case LayerKind::Sigmoid: return "Sigmoid";
    case LayerKind::Dropout: return "Dropout";
    case LayerKind::Softmax: return "Softmax";
  }
  return "?";
}

LayerSpec LayerSpec::linear(std::size_t in, std::size_t out) {
  LayerSpec s;
  s.kind = LayerKind::Linear;
  s.in_dim = in;
  s.out_dim = out;
  return s;
}
LayerSpec LayerSpec::relu() { return {LayerKind::ReLU}; }
LayerSpec LayerSpec::leaky_relu(double slope) {
  LayerSpec s;
  s.kind = LayerKind::LeakyReLU;
  s.slope = slope;
  return s;
}
LayerSpec LayerSpec::sigmoid() { return {LayerKind::Sigmoid}; }
LayerSpec LayerSpec::dropout(double rate) {
  LayerSpec s;
  s.kind = LayerKind::Dropout;
  s.rate = rate;
  return s;
}
LayerSpec LayerSpec::softmax() { return {LayerKind::Softmax}; }

void LayerSpec::validate() const {
  switch (kind) {
    case LayerKind::Linear:
      if (in_dim == 0 || out_dim == 0) throw ConfigError("Linear: dims must be positive");
      break;
    case LayerKind::LeakyReLU:
      if (!(slope > 0.0 && slope < 1.0)) throw ConfigError("LeakyReLU: slope must be in (0,1)");
      break;
    case LayerKind::Dropout:
      if (!(rate >= 0.0 && rate < 1.0)) throw ConfigError("Dropout: rate must be in [0,1)");
      break;
    default:
      break;
  }
}

Network::Network(std::vector<LayerSpec> specs, Rng& init_rng, std::string seed_lineage)
    : specs_(std::move(specs)), seed_lineage_(std::move(seed_lineage)), dropout_rng_(0) {
  if (specs_.empty()) throw ConfigError("Network: empty layer list");
  std::size_t current = 0;  // 0 = not yet pinned by a Linear layer
  for (std::size_t i = 0; i < specs_.size(); ++i) {
    specs_[i].validate();
    if (specs_[i].kind == LayerKind::Linear) {
      if (current != 0 && specs_[i].in_dim != current)
        throw ShapeError("Network: layer " + std::to_string(i) + " (Linear) expects in_dim " +
                         std::to_string(specs_[i].in_dim) + " but previous layer produces " +
                         std::to_string(current));
      current = specs_[i].out_dim;
    }
  }
  init_params(init_rng);
  dropout_rng_ = Rng(init_rng.next_u64());
}

void Network::init_params(Rng& rng) {
  const std::size_t n = specs_.size();
  weights_.assign(n, Matrix());
  biases_.assign(n, Matrix());
  adam_m_weight_.assign(n, Matrix());
  adam_v_weight_.assign(n, Matrix());
  adam_m_bias_.assign(n, Matrix());
  adam_v_bias_.assign(n, Matrix());
  for (std::size_t i = 0; i < n; ++i) {
    if (specs_[i].kind != LayerKind::Linear) continue;
    const std::size_t in = specs_[i].in_dim, out = specs_[i].out_dim;
    const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
    Matrix w(in, out);
    for (double& v : w.values()) v = rng.uniform(-bound, bound);
    weights_[i] = std::move(w);
    biases_[i] = Matrix(1, out);
    adam_m_weight_[i] = Matrix(in, out);
    adam_v_weight_[i] = Matrix(in, out);
    adam_m_bias_[i] = Matrix(1, out);
    adam_v_bias_[i] = Matrix(1, out);
  }
}

std::size_t Network::input_dim() const {
  for (const auto& s : specs_)
    if (s.kind == LayerKind::Linear) return s.in_dim;
  return 0;
}

std::size_t Network::output_dim() const {
  for (auto it = specs_.rbegin(); it != specs_.rend(); ++it)
    if (it->kind == LayerKind::Linear) return it->out_dim;
  return 0;
}

namespace {

double sigmoid_scalar(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

ForwardTrace Network::run_forward(const Matrix& batch, Mode mode) const {
  ForwardTrace trace;
  trace.activations.reserve(specs_.size() + 1);
  trace.dropout_masks.assign(specs_.size(), Matrix());
  trace.activations.push_back(batch);
  for (std::size_t i = 0; i < specs_.size(); ++i) {
    const Matrix& x = trace.activations.back();
    const LayerSpec& s = specs_[i];
    switch (s.kind) {
      case LayerKind::Linear: {
        if (x.cols() != s.in_dim)
          throw ShapeError("forward: layer " + std::to_string(i) + " (Linear " +
                           std::to_string(s.in_dim) + "->" + std::to_string(s.out_dim) +
                           ") got input " + shape_str(x));
        Matrix y = matmul(x, weights_[i]);
        const double* b = biases_[i].data();
        for (std::size_t r = 0; r < y.rows(); ++r) {
          double* row = y.row_ptr(r);
          for (std::size_t c = 0; c < y.cols(); ++c) row[c] += b[c];
        }
        trace.activations.push_back(std::move(y));
        break;
      }
      case LayerKind::ReLU: {
        Matrix y = x;
        for (double& v : y.values()) v = v > 0.0 ? v : 0.0;
        trace.activations.push_back(std::move(y));
        break;
      }
      case LayerKind::LeakyReLU: {
        Matrix y = x;
        for (double& v : y.values()) v = v > 0.0 ? v : s.slope * v;
        trace.activations.push_back(std::move(y));
        break;
      }
      case LayerKind::Sigmoid: {
        Matrix y = x;
        for (double& v : y.values()) v = sigmoid_scalar(v);
        trace.activations.push_back(std::move(y));
        break;
      }
      case LayerKind::Dropout: {
        if (mode == Mode::Eval || s.rate == 0.0) {
          trace.activations.push_back(x);
        } else {
          // inverted dropout: surviving units scaled by 1/(1-rate)
          const double keep = 1.0 - s.rate;
          const double scale = 1.0 / keep;
          Matrix mask(x.rows(), x.cols());
          for (double& v : mask.values()) v = dropout_rng_.uniform() < keep ? scale : 0.0;
          Matrix y = x;
          double* py = y.data();
          const double* pm = mask.data();
          for (std::size_t k = 0; k < y.size(); ++k) py[k] *= pm[k];
          trace.dropout_masks[i] = std::move(mask);
          trace.activations.push_back(std::move(y));
        }
        break;
      }
      case LayerKind::Softmax: {
        Matrix y = x;
        for (std::size_t r = 0; r < y.rows(); ++r) {
          double* row = y.row_ptr(r);
          double mx = row[0];
          for (std::size_t c = 1; c < y.cols(); ++c) mx = std::max(mx, row[c]);
          double sum = 0.0;
          for (std::size_t c = 0; c < y.cols(); ++c) {
            row[c] = std::exp(row[c] - mx);
            sum += row[c];
          }
          for (std::size_t c = 0; c < y.cols(); ++c) row[c] /= sum;
        }
        trace.activations.push_back(std::move(y));
        break;
      }
    }
  }
  return trace;
}

ForwardTrace Network::forward(const Matrix& batch) const { return run_forward(batch, mode_); }

ForwardTrace Network::forward_eval(const Matrix& batch) const {
  return run_forward(batch, Mode::Eval);
}

void Network::check_trace(const ForwardTrace& trace, const Matrix& output_grad) const {
  if (trace.activations.size() != specs_.size() + 1 ||
      trace.dropout_masks.size() != specs_.size())
    throw ShapeError("backward: trace does not match this network (layer count)");
  if (!output_grad.same_shape(trace.activations.back()))
    throw ShapeError("backward: output_grad " + shape_str(output_grad) +
                     " does not match output " + shape_str(trace.activations.back()));
}

Gradients Network::backward(const ForwardTrace& trace, const Matrix& output_grad) const {
  check_trace(trace, output_grad);
  Gradients grads;
  grads.layers.assign(specs_.size(), LayerGrads{});
  Matrix g = output_grad;
  for (std::size_t ii = specs_.size(); ii-- > 0;) {
    const LayerSpec& s = specs_[ii];
    const Matrix& x = trace.activations[ii];
    const Matrix& y = trace.activations[ii + 1];
    if (!g.same_shape(y))
      throw ShapeError("backward: stale trace at layer " + std::to_string(ii));
    switch (s.kind) {
      case LayerKind::Linear: {
        grads.layers[ii].weight = matmul(transpose(x), g);
        Matrix db(1, s.out_dim);
        for (std::size_t r = 0; r < g.rows(); ++r) {
          const double* row = g.row_ptr(r);
          for (std::size_t c = 0; c < s.out_dim; ++c) db(0, c) += row[c];
        }
        grads.layers[ii].bias = std::move(db);
        g = matmul(g, transpose(weights_[ii]));
        break;
      }
      case LayerKind::ReLU: {
        double* pg = g.data();
        const double* px = x.data();
        for (std::size_t k = 0; k < g.size(); ++k)
          if (px[k] <= 0.0) pg[k] = 0.0;
        break;
      }
      case LayerKind::LeakyReLU: {
        double* pg = g.data();
        const double* px = x.data();
        for (std::size_t k = 0; k < g.size(); ++k)
          if (px[k] <= 0.0) pg[k] *= s.slope;
        break;
      }
      case LayerKind::Sigmoid: {
        double* pg = g.data();
        const double* py = y.data();
        for (std::size_t k = 0; k < g.size(); ++k) pg[k] *= py[k] * (1.0 - py[k]);
        break;
      }
      case LayerKind::Dropout: {
        const Matrix& mask = trace.dropout_masks[ii];
        if (!mask.empty()) {
          double* pg = g.data();
          const double* pm = mask.data();
          for (std::size_t k = 0; k < g.size(); ++k) pg[k] *= pm[k];
        }
        break;
      }
      case LayerKind::Softmax: {
        // dx_c = y_c * (g_c - sum_j g_j y_j) per row
        for (std::size_t r = 0; r < g.rows(); ++r) {
          double* pg = g.row_ptr(r);
          const double* py = y.row_ptr(r);
          double dot = 0.0;
          for (std::size_t c = 0; c < g.cols(); ++c) dot += pg[c] * py[c];
          for (std::size_t c = 0; c < g.cols(); ++c) pg[c] = py[c] * (pg[c] - dot);
        }
        break;
      }
    }
  }
  grads.input = std::move(g);
  return grads;
}

void Network::adam_step(const Gradients& grads, const AdamHyper& hyper) {
  hyper.validate();
  if (grads.layers.size() != specs_.size())
    throw ShapeError("adam_step: gradient layer count mismatch");
  adam_step_count_ += 1;
  const double t = static_cast<double>(adam_step_count_);
  const double bc1 = 1.0 - std::pow(hyper.beta1, t);
  const double bc2 = 1.0 - std::pow(hyper.beta2, t);
  auto update = [&](Matrix& param, Matrix& m, Matrix& v, const Matrix& grad, std::size_t layer) {
    if (!grad.same_shape(param))
      throw ShapeError("adam_step: grad shape " + shape_str(grad) + " vs param " +
                       shape_str(param) + " at layer " + std::to_string(layer));
    double* pp = param.data();
    double* pm = m.data();
    double* pv = v.data();
    const double* pg = grad.data();
    for (std::size_t k = 0; k < param.size(); ++k) {
      pm[k] = hyper.beta1 * pm[k] + (1.0 - hyper.beta1) * pg[k];
      pv[k] = hyper.beta2 * pv[k] + (1.0 - hyper.beta2) * pg[k] * pg[k];
      const double mhat = pm[k] / bc1;
      const double vhat = pv[k] / bc2;
      pp[k] -= hyper.learning_rate * mhat / (std::sqrt(vhat) + hyper.epsilon);
    }
  };
  for (std::size_t i = 0; i < specs_.size(); ++i) {
    if (specs_[i].kind != LayerKind::Linear) continue;
    update(weights_[i], adam_m_weight_[i], adam_v_weight_[i], grads.layers[i].weight, i);
    update(biases_[i], adam_m_bias_[i], adam_v_bias_[i], grads.layers[i].bias, i);
  }
}

bool Network::params_equal(const Network& other) const {
  if (specs_.size() != other.specs_.size()) return false;
  for (std::size_t i = 0; i < specs_.size(); ++i) {
    if (!(weights_[i] == other.weights_[i]) || !(biases_[i] == other.biases_[i])) return false;
  }
  return true;
}

bool Network::all_params_finite() const {
  for (std::size_t i = 0; i < specs_.size(); ++i) {
    if (!weights_[i].all_finite() || !biases_[i].all_finite()) return false;
  }
  return true;
}

LossResult loss_bce(const Matrix& pred, const Matrix& target) {
  require_same_shape(pred, target, "loss_bce");
  if (pred.empty()) throw ShapeError("loss_bce: empty input");
  const std::size_t n = pred.size();
  LossResult res;
  res.grad = Matrix(pred.rows(), pred.cols());
  const double* pp = pred.data();
  const double* pt = target.data();
  double* pg = res.grad.data();
  double sum = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double t = pt[k];
    if (t != 0.0 && t != 1.0) throw ConfigError("loss_bce: target must be exactly 0 or 1");
    const double p = std::clamp(pp[k], kBceClamp, 1.0 - kBceClamp);
    sum += t * std::log(p) + (1.0 - t) * std::log(1.0 - p);
    pg[k] = (p - t) / (p * (1.0 - p)) / static_cast<double>(n);
  }
  res.value = -sum / static_cast<double>(n);
  return res;
}

LossResult loss_cross_entropy(const Matrix& logits, const std::vector<int>& labels) {
  if (logits.empty()) throw ShapeError("loss_cross_entropy: empty logits");
  if (labels.size() != logits.rows())
    throw ShapeError("loss_cross_entropy: " + std::to_string(labels.size()) + " labels for " +
                     std::to_string(logits.rows()) + " rows");
  const std::size_t n = logits.rows(), k = logits.cols();
  LossResult res;
  res.grad = Matrix(n, k);
  double sum = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    const int label = labels[r];
    if (label < 0 || static_cast<std::size_t>(label) >= k)
      throw ConfigError("loss_cross_entropy: label " + std::to_string(label) +
                        " out of range for " + std::to_string(k) + " classes (row " +
                        std::to_string(r) + ")");
    const double* row = logits.row_ptr(r);
    double mx = row[0];
    for (std::size_t c = 1; c < k; ++c) mx = std::max(mx, row[c]);
    double se = 0.0;
    for (std::size_t c = 0; c < k; ++c) se += std::exp(row[c] - mx);
    const double lse = mx + std::log(se);
    sum += lse - row[label];
    double* grow = res.grad.row_ptr(r);
    for (std::size_t c = 0; c < k; ++c)
      grow[c] = std::exp(row[c] - lse) / static_cast<double>(n);
    grow[label] -= 1.0 / static_cast<double>(n);
  }
  res.value = sum / static_cast<double>(n);
  return res;
}

LossResult loss_l1(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "loss_l1");
  if (a.empty()) throw ShapeError("loss_l1: empty input");
  const std::size_t n = a.size();
  LossResult res;
  res.grad = Matrix(a.rows(), a.cols());
  const double* pa = a.data();
  const double* pb = b.data();
  double* pg = res.grad.data();
  double sum = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double d = pa[k] - pb[k];
    sum += std::abs(d);
    pg[k] = (d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0)) / static_cast<double>(n);
  }
  res.value = sum / static_cast<double>(n);
  return res;
}

std::vector<int> argmax_rows(const Matrix& m) {
  std::vector<int> out(m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const double* row = m.row_ptr(r);
    std::size_t best = 0;
    for (std::size_t c = 1; c < m.cols(); ++c)
      if (row[c] > row[best]) best = c;
    out[r] = static_cast<int>(best);
  }
  return out;
}

}  // namespace advenc
