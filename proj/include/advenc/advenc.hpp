#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "advenc/datasets.hpp"
#include "advenc/nn.hpp"

namespace advenc {

// Shared dense-net shapes. hidden scales the layer widths; the stated
// layer counts and activation placement are fixed.
struct DefenderNetConfig {
  std::size_t hidden = 64;
  double dropout = 0.2;
  double leaky_slope = 0.2;
};

// classifier: 4 x (Linear hidden + ReLU) + Linear K, dropout after the
// second ReLU
std::vector<LayerSpec> classifier_arch(std::size_t dim, int num_classes,
                                       const DefenderNetConfig& cfg);
// encoder/decoder: 2 x (Linear hidden + LeakyReLU + dropout) + Linear d
// + sigmoid
std::vector<LayerSpec> coder_arch(std::size_t dim, const DefenderNetConfig& cfg);
// discriminator: like the coder but the final layer has output size 1
std::vector<LayerSpec> discriminator_arch(std::size_t dim, const DefenderNetConfig& cfg);

struct TrainConfig {
  int epochs = 200;
  int batch_size = 64;
  AdamHyper adam{1e-3, 0.5, 0.999, 1e-8};
  double cyc_weight = 1.0;
  int fake_label = -1;    // -1 = seed-deterministic random choice
  int disc_steps = 1;     // discriminator updates per batch (step a)
  std::uint64_t seed = 0;
  double target_enc_efficiency_pct = 95.0;  // stopping thresholds
  double target_dec_efficiency_pct = 90.0;
  DefenderNetConfig arch;

  void validate() const;
};

// Encoder/decoder/discriminator/classifier plus the unified fake label and
// the cycle-loss weight. Immutable once trained; encrypt/decrypt and the
// metric reads are safe concurrently.
struct AdvEncModel {
  Network encoder;        // G1: plaintext -> encrypted, same feature space
  Network decoder;        // G2: encrypted -> decrypted
  Network discriminator;  // D: real class-m sample vs encoder output
  Network classifier;     // C: decides on decrypted data
  int fake_label = 0;
  double cyc_weight = 1.0;
};

// Per-batch loss record from the generator-side update. total is computed
// as gan + cyc_weight*cyc + classi, in that order.
struct StepLoss {
  double gan = 0.0;
  double cyc = 0.0;
  double classi = 0.0;
  double total = 0.0;
  double disc = 0.0;
};

struct BaselineResult {
  Network net;
  double train_accuracy_pct = 0.0;
};

struct AdvEncTrainResult {
  AdvEncModel model;
  std::vector<StepLoss> history;  // one entry per batch step
  int epochs_run = 0;
  bool stopped_on_thresholds = false;
  double final_enc_efficiency_pct = 0.0;  // on the training data
  double final_dec_efficiency_pct = 0.0;
};

struct EfficiencyReport {
  double encryption_efficiency_pct = 0.0;
  double decryption_efficiency_pct = 0.0;
  double baseline_train_acc_pct = 0.0;
  double baseline_test_acc_pct = 0.0;
  double pipeline_train_acc_pct = 0.0;
  double pipeline_test_acc_pct = 0.0;
};

// Plain cross-entropy training of the classifier shape on raw data.
BaselineResult train_baseline_classifier(const Dataset& train, const TrainConfig& cfg);

// Which of the three interleaved updates a batch step applies.
struct UpdateParts {
  bool discriminator = true;
  bool coders = true;      // chained encoder+decoder
  bool classifier = true;
};

// One batch of adversarial training on the model in place: the
// discriminator step ascends the GAN value on (x_real vs G1(x)), the coder
// step descends gan + cyc_weight*cycle + classification, the classifier
// step descends classification on freshly decrypted x. Returns the loss
// components seen by the coder step (zeros for skipped parts).
StepLoss advenc_batch_update(AdvEncModel& model, const Matrix& x, const std::vector<int>& y,
                             const Matrix& x_real, const AdamHyper& adam,
                             const UpdateParts& parts = {});

// Joint adversarial training: per batch the discriminator ascends the GAN
// value on real class-m samples vs encoder outputs, the chained
// encoder+decoder descend gan + cyc_weight*cycle + classification, then the
// classifier descends classification on freshly decrypted data. Stops at
// the epoch budget or when both efficiency thresholds are met on the
// training data.
AdvEncTrainResult train_advenc(const Dataset& train, const TrainConfig& cfg,
                               const Network& baseline);

Matrix encrypt(const AdvEncModel& model, const Matrix& x);
Matrix decrypt(const AdvEncModel& model, const Matrix& x_enc);

// Percentage of test rows whose encryption the baseline classifier assigns
// to the fake label.
double encryption_efficiency(const Network& baseline, const AdvEncModel& model,
                             const Dataset& test);

// 100 * mean over elements of 1 - |decrypt(encrypt(x)) - x|.
double decryption_efficiency(const AdvEncModel& model, const Dataset& test);

// Accuracy of the classifier on decrypt(encrypt(x)) against ground truth.
double pipeline_accuracy(const AdvEncModel& model, const Dataset& data);

// Plain accuracy of a classifier network on a dataset, in percent.
double accuracy(const Network& net, const Dataset& data);

EfficiencyReport make_efficiency_report(const Network& baseline, const AdvEncModel& model,
                                        const Dataset& train, const Dataset& test);

// Empirical GAN value estimate V = mean log D(real) + mean log(1-D(G1(x)))
// on the given batches (for the minimax direction checks).
double gan_value_estimate(const AdvEncModel& model, const Matrix& real_m, const Matrix& plain);

// Model directory layout: encoder.net, decoder.net, discriminator.net,
// classifier.net plus manifest.json (fake label, cycle weight, config hash,
// final efficiency report).
void save_model(const AdvEncModel& model, const std::string& dir, const std::string& config_hash,
                const EfficiencyReport& report);
AdvEncModel load_model(const std::string& dir);

}  // namespace advenc
