#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "advenc/matrix.hpp"
#include "advenc/rng.hpp"

namespace advenc {

struct AdamHyper {
  double learning_rate = 1e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate() const;
};

enum class LayerKind { Linear, ReLU, LeakyReLU, Sigmoid, Dropout, Softmax };

std::string layer_kind_name(LayerKind k);

struct LayerSpec {
  LayerKind kind = LayerKind::ReLU;
  std::size_t in_dim = 0;   // Linear only
  std::size_t out_dim = 0;  // Linear only
  double slope = 0.2;       // LeakyReLU only, in (0,1)
  double rate = 0.2;        // Dropout only, in [0,1)

  static LayerSpec linear(std::size_t in, std::size_t out);
  static LayerSpec relu();
  static LayerSpec leaky_relu(double slope);
  static LayerSpec sigmoid();
  static LayerSpec dropout(double rate);
  static LayerSpec softmax();

  void validate() const;
};

enum class Mode { Train, Eval };

// Activations and per-layer dropout masks from one forward pass.
// activations[0] is the input; activations.back() is the output.
// dropout_masks[i] is non-empty only for Dropout layers in train mode and
// already carries the 1/(1-rate) inverted-dropout scale.
struct ForwardTrace {
  std::vector<Matrix> activations;
  std::vector<Matrix> dropout_masks;

  const Matrix& output() const { return activations.back(); }
};

struct LayerGrads {
  Matrix weight;  // empty for parameter-free layers
  Matrix bias;
};

struct Gradients {
  std::vector<LayerGrads> layers;
  Matrix input;
};

// Ordered stack of layers with per-layer parameters and Adam state.
// A network in Eval mode may be read concurrently; Train-mode forward
// draws dropout masks from an internal stream and is not thread safe.
class Network {
 public:
  Network() = default;
  Network(std::vector<LayerSpec> specs, Rng& init_rng, std::string seed_lineage = {});

  ForwardTrace forward(const Matrix& batch) const;       // honors mode()
  ForwardTrace forward_eval(const Matrix& batch) const;  // dropout = identity

  // Exact reverse-mode gradients of the scalar implied by output_grad.
  // The trace must come from a matching forward call on this network.
  Gradients backward(const ForwardTrace& trace, const Matrix& output_grad) const;

  // Standard Adam with bias correction; one shared step counter.
  void adam_step(const Gradients& grads, const AdamHyper& hyper);

  Mode mode() const { return mode_; }
  void set_mode(Mode m) { mode_ = m; }
  void train() { mode_ = Mode::Train; }
  void eval() { mode_ = Mode::Eval; }

  std::size_t layer_count() const { return specs_.size(); }
  const std::vector<LayerSpec>& specs() const { return specs_; }
  const std::string& seed_lineage() const { return seed_lineage_; }

  // First Linear in_dim / last Linear out_dim; 0 when the net has no Linear.
  std::size_t input_dim() const;
  std::size_t output_dim() const;

  std::int64_t adam_step_count() const { return adam_step_count_; }

  Matrix& weight(std::size_t layer) { return weights_[layer]; }
  const Matrix& weight(std::size_t layer) const { return weights_[layer]; }
  Matrix& bias(std::size_t layer) { return biases_[layer]; }
  const Matrix& bias(std::size_t layer) const { return biases_[layer]; }
  const Matrix& adam_m(std::size_t layer, bool for_bias) const {
    return for_bias ? adam_m_bias_[layer] : adam_m_weight_[layer];
  }
  const Matrix& adam_v(std::size_t layer, bool for_bias) const {
    return for_bias ? adam_v_bias_[layer] : adam_v_weight_[layer];
  }

  bool params_equal(const Network& other) const;
  bool all_params_finite() const;

  friend class ModelIo;

 private:
  void init_params(Rng& rng);
  void check_trace(const ForwardTrace& trace, const Matrix& output_grad) const;
  ForwardTrace run_forward(const Matrix& batch, Mode mode) const;

  std::vector<LayerSpec> specs_;
  std::vector<Matrix> weights_;  // indexed by layer; empty for non-Linear
  std::vector<Matrix> biases_;
  std::vector<Matrix> adam_m_weight_, adam_v_weight_;
  std::vector<Matrix> adam_m_bias_, adam_v_bias_;
  std::int64_t adam_step_count_ = 0;
  Mode mode_ = Mode::Train;
  std::string seed_lineage_;
  mutable Rng dropout_rng_{0};
};

struct LossResult {
  double value = 0.0;
  Matrix grad;  // with respect to the first argument
};

// Mean binary cross-entropy over all elements; predictions are clamped to
// [1e-7, 1-1e-7] before the logs and the gradient is taken at the clamped
// values. Targets must be exactly 0 or 1.
LossResult loss_bce(const Matrix& pred, const Matrix& target);

// Mean softmax cross-entropy over rows; grad = (softmax - onehot) / rows.
LossResult loss_cross_entropy(const Matrix& logits, const std::vector<int>& labels);

// Mean absolute difference over all elements; subgradient sign(a-b)/numel,
// zero at exact ties.
LossResult loss_l1(const Matrix& a, const Matrix& b);

// Row-wise argmax; ties resolve to the lowest index.
std::vector<int> argmax_rows(const Matrix& m);

constexpr double kBceClamp = 1e-7;

}  // namespace advenc
