#include "advenc/advenc.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "advenc/serialize.hpp"
#include "nlohmann/json.hpp"

namespace advenc {

std::vector<LayerSpec> classifier_arch(std::size_t dim, int num_classes,
                                       const DefenderNetConfig& cfg) {
  const std::size_t h = cfg.hidden;
  return {
      LayerSpec::linear(dim, h), LayerSpec::relu(),
      LayerSpec::linear(h, h),   LayerSpec::relu(),
      LayerSpec::dropout(cfg.dropout),
      LayerSpec::linear(h, h),   LayerSpec::relu(),
      LayerSpec::linear(h, h),   LayerSpec::relu(),
      LayerSpec::linear(h, static_cast<std::size_t>(num_classes)),
  };
}

std::vector<LayerSpec> coder_arch(std::size_t dim, const DefenderNetConfig& cfg) {
  const std::size_t h = cfg.hidden;
  return {
      LayerSpec::linear(dim, h), LayerSpec::leaky_relu(cfg.leaky_slope),
      LayerSpec::dropout(cfg.dropout),
      LayerSpec::linear(h, h),   LayerSpec::leaky_relu(cfg.leaky_slope),
      LayerSpec::dropout(cfg.dropout),
      LayerSpec::linear(h, dim), LayerSpec::sigmoid(),
  };
}

std::vector<LayerSpec> discriminator_arch(std::size_t dim, const DefenderNetConfig& cfg) {
  const std::size_t h = cfg.hidden;
  return {
      LayerSpec::linear(dim, h), LayerSpec::leaky_relu(cfg.leaky_slope),
      LayerSpec::dropout(cfg.dropout),
      LayerSpec::linear(h, h),   LayerSpec::leaky_relu(cfg.leaky_slope),
      LayerSpec::dropout(cfg.dropout),
      LayerSpec::linear(h, 1),   LayerSpec::sigmoid(),
  };
}

void TrainConfig::validate() const {
  if (epochs < 0) throw ConfigError("train: epochs must be >= 0");
  if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
  adam.validate();
  if (cyc_weight < 0.0) throw ConfigError("train: cyc_weight must be >= 0");
  if (disc_steps < 1) throw ConfigError("train: disc_steps must be >= 1");
  if (!(target_enc_efficiency_pct >= 0.0 && target_enc_efficiency_pct <= 100.0) ||
      !(target_dec_efficiency_pct >= 0.0 && target_dec_efficiency_pct <= 100.0))
    throw ConfigError("train: efficiency thresholds must be in [0,100]");
  if (arch.hidden < 1) throw ConfigError("train: hidden width must be >= 1");
}

namespace {

std::vector<std::vector<std::size_t>> make_batches(std::size_t n, std::size_t batch_size,
                                                   Rng& order_rng) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  order_rng.shuffle(idx);
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t at = 0; at < n; at += batch_size) {
    const std::size_t end = std::min(n, at + batch_size);
    batches.emplace_back(idx.begin() + static_cast<std::ptrdiff_t>(at),
                         idx.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return batches;
}

std::vector<int> take_labels(const std::vector<int>& labels, std::span<const std::size_t> idx) {
  std::vector<int> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(labels[i]);
  return out;
}

Matrix sample_rows_with_replacement(const Matrix& pool, std::size_t n, Rng& rng) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = rng.uniform_index(pool.rows());
  return take_rows(pool, idx);
}

void add_gradients(Gradients& acc, const Gradients& g) {
  for (std::size_t i = 0; i < acc.layers.size(); ++i) {
    if (acc.layers[i].weight.empty()) continue;
    add_inplace(acc.layers[i].weight, g.layers[i].weight);
    add_inplace(acc.layers[i].bias, g.layers[i].bias);
  }
}

double enc_eff_impl(const Network& baseline, const Network& encoder, int fake_label,
                    const Matrix& features) {
  const Matrix enc = encoder.forward_eval(features).output();
  const std::vector<int> pred = argmax_rows(baseline.forward_eval(enc).output());
  std::size_t hits = 0;
  for (int p : pred)
    if (p == fake_label) ++hits;
  return 100.0 * static_cast<double>(hits) / static_cast<double>(pred.size());
}

double dec_eff_impl(const Network& encoder, const Network& decoder, const Matrix& features) {
  const Matrix enc = encoder.forward_eval(features).output();
  const Matrix dec = decoder.forward_eval(enc).output();
  const double* pd = dec.data();
  const double* px = features.data();
  double sum = 0.0;
  for (std::size_t k = 0; k < dec.size(); ++k) sum += 1.0 - std::abs(pd[k] - px[k]);
  return 100.0 * sum / static_cast<double>(dec.size());
}

}  // namespace

BaselineResult train_baseline_classifier(const Dataset& train, const TrainConfig& cfg) {
  cfg.validate();
  train.validate_training();
  Rng init(derive_seed(cfg.seed, "baseline-init"));
  Network net(classifier_arch(train.dim(), train.num_classes, cfg.arch), init,
              "baseline@" + std::to_string(cfg.seed));
  Rng order(derive_seed(cfg.seed, "baseline-order"));
  net.train();
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto batches = make_batches(train.size(), static_cast<std::size_t>(cfg.batch_size), order);
    for (std::size_t b = 0; b < batches.size(); ++b) {
      const Matrix x = take_rows(train.features, batches[b]);
      const std::vector<int> y = take_labels(train.labels, batches[b]);
      const ForwardTrace trace = net.forward(x);
      const LossResult ce = loss_cross_entropy(trace.output(), y);
      if (!std::isfinite(ce.value))
        throw TrainError("baseline: non-finite loss at epoch " + std::to_string(epoch) +
                         ", batch " + std::to_string(b));
      net.adam_step(net.backward(trace, ce.grad), cfg.adam);
    }
  }
  net.eval();
  BaselineResult res{std::move(net), 0.0};
  res.train_accuracy_pct = accuracy(res.net, train);
  return res;
}

StepLoss advenc_batch_update(AdvEncModel& model, const Matrix& x, const std::vector<int>& y,
                             const Matrix& x_real, const AdamHyper& adam,
                             const UpdateParts& parts) {
  StepLoss step;
  const Matrix ones(x.rows(), 1, 1.0);
  const Matrix zeros(x.rows(), 1, 0.0);

  if (parts.discriminator) {
    // discriminator ascends V: real class-m batch vs (detached) encoder outputs
    const Matrix enc_detached = model.encoder.forward(x).output();
    const ForwardTrace d_real = model.discriminator.forward(x_real);
    const LossResult bce_real = loss_bce(d_real.output(), ones);
    const ForwardTrace d_fake = model.discriminator.forward(enc_detached);
    const LossResult bce_fake = loss_bce(d_fake.output(), zeros);
    step.disc = bce_real.value + bce_fake.value;
    Gradients d_grads = model.discriminator.backward(d_real, bce_real.grad);
    add_gradients(d_grads, model.discriminator.backward(d_fake, bce_fake.grad));
    model.discriminator.adam_step(d_grads, adam);
  }

  if (parts.coders) {
    // chained encoder+decoder: non-saturating GAN term + cycle + classification
    const ForwardTrace t_enc = model.encoder.forward(x);
    const ForwardTrace t_disc = model.discriminator.forward(t_enc.output());
    const LossResult gan = loss_bce(t_disc.output(), ones);
    const ForwardTrace t_dec = model.decoder.forward(t_enc.output());
    const LossResult cyc = loss_l1(t_dec.output(), x);
    const ForwardTrace t_clf = model.classifier.forward(t_dec.output());
    const LossResult classi = loss_cross_entropy(t_clf.output(), y);
    step.gan = gan.value;
    step.cyc = cyc.value;
    step.classi = classi.value;
    step.total = gan.value + model.cyc_weight * cyc.value + classi.value;

    Matrix d_dec_out = model.classifier.backward(t_clf, classi.grad).input;
    Matrix cyc_grad = cyc.grad;
    scale_inplace(cyc_grad, model.cyc_weight);
    add_inplace(d_dec_out, cyc_grad);
    const Gradients g2_grads = model.decoder.backward(t_dec, d_dec_out);
    Matrix d_enc_out = model.discriminator.backward(t_disc, gan.grad).input;
    add_inplace(d_enc_out, g2_grads.input);
    const Gradients g1_grads = model.encoder.backward(t_enc, d_enc_out);
    model.encoder.adam_step(g1_grads, adam);
    model.decoder.adam_step(g2_grads, adam);
  }

  if (parts.classifier) {
    // classifier on current decoder outputs
    const ForwardTrace t_enc = model.encoder.forward(x);
    const ForwardTrace t_dec = model.decoder.forward(t_enc.output());
    const ForwardTrace t_clf = model.classifier.forward(t_dec.output());
    const LossResult clf_loss = loss_cross_entropy(t_clf.output(), y);
    model.classifier.adam_step(model.classifier.backward(t_clf, clf_loss.grad), adam);
  }
  return step;
}

AdvEncTrainResult train_advenc(const Dataset& train, const TrainConfig& cfg,
                               const Network& baseline) {
  cfg.validate();
  train.validate_training();
  const std::size_t d = train.dim();
  const int K = train.num_classes;

  int fake_label = cfg.fake_label;
  if (fake_label < 0) {
    Rng pick(derive_seed(cfg.seed, "fake-label"));
    fake_label = static_cast<int>(pick.uniform_index(static_cast<std::size_t>(K)));
  }
  if (fake_label >= K)
    throw ConfigError("train_advenc: fake_label " + std::to_string(fake_label) +
                      " out of range for " + std::to_string(K) + " classes");

  const Dataset real_pool = class_subset(train, fake_label);
  const std::string lineage = "advenc@" + std::to_string(cfg.seed);

  Rng enc_init(derive_seed(cfg.seed, "encoder-init"));
  Rng dec_init(derive_seed(cfg.seed, "decoder-init"));
  Rng disc_init(derive_seed(cfg.seed, "discriminator-init"));
  Rng clf_init(derive_seed(cfg.seed, "classifier-init"));
  AdvEncTrainResult res;
  res.model.encoder = Network(coder_arch(d, cfg.arch), enc_init, lineage + "/encoder");
  res.model.decoder = Network(coder_arch(d, cfg.arch), dec_init, lineage + "/decoder");
  res.model.discriminator =
      Network(discriminator_arch(d, cfg.arch), disc_init, lineage + "/discriminator");
  res.model.classifier = Network(classifier_arch(d, K, cfg.arch), clf_init, lineage + "/classifier");
  res.model.fake_label = fake_label;
  res.model.cyc_weight = cfg.cyc_weight;
  AdvEncModel& model = res.model;

  Rng order(derive_seed(cfg.seed, "advenc-order"));
  Rng real_rng(derive_seed(cfg.seed, "advenc-real"));

  model.encoder.train();
  model.decoder.train();
  model.discriminator.train();
  model.classifier.train();

  res.history.reserve(static_cast<std::size_t>(cfg.epochs) *
                      (train.size() / static_cast<std::size_t>(cfg.batch_size) + 1));

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto batches = make_batches(train.size(), static_cast<std::size_t>(cfg.batch_size), order);
    for (std::size_t b = 0; b < batches.size(); ++b) {
      const Matrix x = take_rows(train.features, batches[b]);
      const std::vector<int> y = take_labels(train.labels, batches[b]);
      for (int k = 0; k + 1 < cfg.disc_steps; ++k) {
        const Matrix extra_real =
            sample_rows_with_replacement(real_pool.features, x.rows(), real_rng);
        advenc_batch_update(model, x, y, extra_real, cfg.adam, {true, false, false});
      }
      const Matrix x_real = sample_rows_with_replacement(real_pool.features, x.rows(), real_rng);
      const StepLoss step = advenc_batch_update(model, x, y, x_real, cfg.adam);
      if (!std::isfinite(step.total) || !std::isfinite(step.disc))
        throw TrainError("train_advenc: non-finite loss at epoch " + std::to_string(epoch) +
                         ", batch " + std::to_string(b) + " (disc=" + std::to_string(step.disc) +
                         ", total=" + std::to_string(step.total) + ")");
      res.history.push_back(step);
    }
    ++res.epochs_run;

    if (!model.encoder.all_params_finite() || !model.decoder.all_params_finite() ||
        !model.discriminator.all_params_finite() || !model.classifier.all_params_finite())
      throw TrainError("train_advenc: non-finite parameters after epoch " +
                       std::to_string(epoch));

    res.final_enc_efficiency_pct =
        enc_eff_impl(baseline, model.encoder, fake_label, train.features);
    res.final_dec_efficiency_pct = dec_eff_impl(model.encoder, model.decoder, train.features);
    if (res.final_enc_efficiency_pct >= cfg.target_enc_efficiency_pct &&
        res.final_dec_efficiency_pct >= cfg.target_dec_efficiency_pct) {
      res.stopped_on_thresholds = true;
      break;
    }
  }

  model.encoder.eval();
  model.decoder.eval();
  model.discriminator.eval();
  model.classifier.eval();
  if (cfg.epochs == 0) {
    res.final_enc_efficiency_pct =
        enc_eff_impl(baseline, model.encoder, fake_label, train.features);
    res.final_dec_efficiency_pct = dec_eff_impl(model.encoder, model.decoder, train.features);
  }
  return res;
}

Matrix encrypt(const AdvEncModel& model, const Matrix& x) {
  return model.encoder.forward_eval(x).output();
}

Matrix decrypt(const AdvEncModel& model, const Matrix& x_enc) {
  return model.decoder.forward_eval(x_enc).output();
}

double encryption_efficiency(const Network& baseline, const AdvEncModel& model,
                             const Dataset& test) {
  if (test.size() == 0) throw ConfigError("encryption_efficiency: empty test set");
  return enc_eff_impl(baseline, model.encoder, model.fake_label, test.features);
}

double decryption_efficiency(const AdvEncModel& model, const Dataset& test) {
  if (test.size() == 0) throw ConfigError("decryption_efficiency: empty test set");
  return dec_eff_impl(model.encoder, model.decoder, test.features);
}

double pipeline_accuracy(const AdvEncModel& model, const Dataset& data) {
  if (data.size() == 0) throw ConfigError("pipeline_accuracy: empty dataset");
  const Matrix dec = decrypt(model, encrypt(model, data.features));
  const std::vector<int> pred = argmax_rows(model.classifier.forward_eval(dec).output());
  std::size_t hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i)
    if (pred[i] == data.labels[i]) ++hits;
  return 100.0 * static_cast<double>(hits) / static_cast<double>(pred.size());
}

double accuracy(const Network& net, const Dataset& data) {
  if (data.size() == 0) throw ConfigError("accuracy: empty dataset");
  const std::vector<int> pred = argmax_rows(net.forward_eval(data.features).output());
  std::size_t hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i)
    if (pred[i] == data.labels[i]) ++hits;
  return 100.0 * static_cast<double>(hits) / static_cast<double>(pred.size());
}

EfficiencyReport make_efficiency_report(const Network& baseline, const AdvEncModel& model,
                                        const Dataset& train, const Dataset& test) {
  EfficiencyReport r;
  r.encryption_efficiency_pct = encryption_efficiency(baseline, model, test);
  r.decryption_efficiency_pct = decryption_efficiency(model, test);
  r.baseline_train_acc_pct = accuracy(baseline, train);
  r.baseline_test_acc_pct = accuracy(baseline, test);
  r.pipeline_train_acc_pct = pipeline_accuracy(model, train);
  r.pipeline_test_acc_pct = pipeline_accuracy(model, test);
  return r;
}

double gan_value_estimate(const AdvEncModel& model, const Matrix& real_m, const Matrix& plain) {
  const Matrix d_real = model.discriminator.forward_eval(real_m).output();
  const Matrix enc = model.encoder.forward_eval(plain).output();
  const Matrix d_fake = model.discriminator.forward_eval(enc).output();
  double v = 0.0;
  for (double p : d_real.values()) v += std::log(std::clamp(p, kBceClamp, 1.0 - kBceClamp));
  v /= static_cast<double>(d_real.size());
  double w = 0.0;
  for (double p : d_fake.values())
    w += std::log(std::clamp(1.0 - p, kBceClamp, 1.0 - kBceClamp));
  w /= static_cast<double>(d_fake.size());
  return v + w;
}

void save_model(const AdvEncModel& model, const std::string& dir, const std::string& config_hash,
                const EfficiencyReport& report) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  save_network(model.encoder, (fs::path(dir) / "encoder.net").string());
  save_network(model.decoder, (fs::path(dir) / "decoder.net").string());
  save_network(model.discriminator, (fs::path(dir) / "discriminator.net").string());
  save_network(model.classifier, (fs::path(dir) / "classifier.net").string());
  nlohmann::json j{
      {"fake_label", model.fake_label},
      {"cyc_weight", model.cyc_weight},
      {"config_hash", config_hash},
      {"efficiency",
       {{"encryption_efficiency_pct", report.encryption_efficiency_pct},
        {"decryption_efficiency_pct", report.decryption_efficiency_pct},
        {"baseline_train_acc_pct", report.baseline_train_acc_pct},
        {"baseline_test_acc_pct", report.baseline_test_acc_pct},
        {"pipeline_train_acc_pct", report.pipeline_train_acc_pct},
        {"pipeline_test_acc_pct", report.pipeline_test_acc_pct}}},
  };
  std::ofstream os(fs::path(dir) / "manifest.json");
  if (!os) throw IoError("cannot write manifest in " + dir);
  os << j.dump(2) << "\n";
}

AdvEncModel load_model(const std::string& dir) {
  namespace fs = std::filesystem;
  std::ifstream is(fs::path(dir) / "manifest.json");
  if (!is) throw IoError("cannot open manifest in " + dir);
  nlohmann::json j;
  is >> j;
  AdvEncModel model;
  model.encoder = load_network((fs::path(dir) / "encoder.net").string());
  model.decoder = load_network((fs::path(dir) / "decoder.net").string());
  model.discriminator = load_network((fs::path(dir) / "discriminator.net").string());
  model.classifier = load_network((fs::path(dir) / "classifier.net").string());
  model.fake_label = j.at("fake_label").get<int>();
  model.cyc_weight = j.at("cyc_weight").get<double>();
  return model;
}

}  // namespace advenc
