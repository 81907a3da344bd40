#include "advenc/attacks.hpp"

#include <algorithm>
#include <cmath>

namespace advenc {

Oracle oracle_from_baseline(const Network& baseline) {
  Network net = baseline;
  net.eval();
  return Oracle("baseline", [net = std::move(net)](const Matrix& rows) {
    return argmax_rows(net.forward_eval(rows).output());
  });
}

Oracle oracle_from_advenc(const AdvEncModel& model) {
  Network decoder = model.decoder;
  Network classifier = model.classifier;
  decoder.eval();
  classifier.eval();
  return Oracle("advenc-encrypted",
                [decoder = std::move(decoder), classifier = std::move(classifier)](const Matrix& z) {
                  const Matrix dec = decoder.forward_eval(z).output();
                  return argmax_rows(classifier.forward_eval(dec).output());
                });
}

Oracle oracle_from_advenc_plaintext(const AdvEncModel& model) {
  Network encoder = model.encoder;
  Network decoder = model.decoder;
  Network classifier = model.classifier;
  encoder.eval();
  decoder.eval();
  classifier.eval();
  return Oracle("advenc-plaintext",
                [encoder = std::move(encoder), decoder = std::move(decoder),
                 classifier = std::move(classifier)](const Matrix& x) {
                  const Matrix enc = encoder.forward_eval(x).output();
                  const Matrix dec = decoder.forward_eval(enc).output();
                  return argmax_rows(classifier.forward_eval(dec).output());
                });
}

std::string attack_method_name(AttackMethod m) {
  switch (m) {
    case AttackMethod::Jacobian: return "jacobian";
    case AttackMethod::Fgsm: return "fgsm";
    case AttackMethod::Fgv: return "fgv";
    case AttackMethod::Gan: return "gan";
  }
  return "?";
}

AttackMethod attack_method_from_name(const std::string& name) {
  if (name == "jacobian") return AttackMethod::Jacobian;
  if (name == "fgsm") return AttackMethod::Fgsm;
  if (name == "fgv") return AttackMethod::Fgv;
  if (name == "gan") return AttackMethod::Gan;
  throw ConfigError("unknown attack method '" + name + "'");
}

void AttackConfig::validate() const {
  if (rho_max < 1) throw ConfigError("attack: rho_max must be >= 1");
  if (step_size < 0.0) throw ConfigError("attack: step_size must be >= 0");
  if (num_classes < 2) throw ConfigError("attack: num_classes must be >= 2");
  if (hidden < 1) throw ConfigError("attack: hidden width must be >= 1");
  if (substitute_passes < 1) throw ConfigError("attack: substitute_passes must be >= 1");
  if (substitute_batch_size < 1) throw ConfigError("attack: substitute_batch_size must be >= 1");
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

void train_supervised(Network& net, const Matrix& x, const std::vector<int>& y, int passes,
                      std::size_t batch_size, const AdamHyper& adam, Rng& order,
                      const char* what) {
  net.train();
  for (int pass = 0; pass < passes; ++pass) {
    const auto batches = make_batches(x.rows(), batch_size, order);
    for (std::size_t b = 0; b < batches.size(); ++b) {
      const Matrix xb = take_rows(x, batches[b]);
      std::vector<int> yb;
      yb.reserve(batches[b].size());
      for (std::size_t i : batches[b]) yb.push_back(y[i]);
      const ForwardTrace trace = net.forward(xb);
      const LossResult ce = loss_cross_entropy(trace.output(), yb);
      if (!std::isfinite(ce.value))
        throw TrainError(std::string(what) + ": non-finite substitute loss (pass " +
                         std::to_string(pass) + ", batch " + std::to_string(b) + ")");
      net.adam_step(net.backward(trace, ce.grad), adam);
    }
  }
}

std::vector<LayerSpec> generator_arch(std::size_t latent, std::size_t out_dim, std::size_t hidden,
                                      double slope) {
  return {
      LayerSpec::linear(latent, hidden),  LayerSpec::leaky_relu(slope),
      LayerSpec::linear(hidden, hidden),  LayerSpec::leaky_relu(slope),
      LayerSpec::linear(hidden, out_dim), LayerSpec::sigmoid(),
  };
}

}  // namespace

Matrix craft_augmentation(const Network& substitute, const Matrix& s,
                          const std::vector<int>& oracle_labels, AttackMethod method,
                          double step_size) {
  if (method == AttackMethod::Gan)
    throw ConfigError("craft_augmentation: gan is not a crafting method");
  if (step_size < 0.0) throw ConfigError("craft_augmentation: step_size must be >= 0");
  if (oracle_labels.size() != s.rows())
    throw ShapeError("craft_augmentation: label count does not match rows");

  const ForwardTrace trace = substitute.forward_eval(s);
  Matrix grad;  // per-sample input gradient
  if (method == AttackMethod::Jacobian) {
    // rows of the output Jacobian selected by the oracle label
    const Matrix& out = trace.output();
    Matrix onehot(out.rows(), out.cols());
    for (std::size_t r = 0; r < out.rows(); ++r) {
      const int l = oracle_labels[r];
      if (l < 0 || static_cast<std::size_t>(l) >= out.cols())
        throw ConfigError("craft_augmentation: oracle label " + std::to_string(l) +
                          " out of range");
      onehot(r, static_cast<std::size_t>(l)) = 1.0;
    }
    grad = substitute.backward(trace, onehot).input;
  } else {
    // per-sample gradient of the substitute's cross-entropy at the oracle
    // label: undo the 1/n of the mean loss
    LossResult ce = loss_cross_entropy(trace.output(), oracle_labels);
    scale_inplace(ce.grad, static_cast<double>(s.rows()));
    grad = substitute.backward(trace, ce.grad).input;
  }

  Matrix crafted = s;
  double* pc = crafted.data();
  const double* pg = grad.data();
  if (method == AttackMethod::Fgv) {
    for (std::size_t k = 0; k < crafted.size(); ++k) pc[k] += step_size * pg[k];
  } else {
    for (std::size_t k = 0; k < crafted.size(); ++k) {
      const double sg = pg[k] > 0.0 ? 1.0 : (pg[k] < 0.0 ? -1.0 : 0.0);
      pc[k] += step_size * sg;
    }
  }
  clip_inplace(crafted, 0.0, 1.0);
  return crafted;
}

AttackResult substitute_train_gradient(const Oracle& oracle, const Matrix& s0,
                                       const AttackConfig& cfg, const Matrix& eval_set) {
  cfg.validate();
  if (s0.rows() == 0) throw ConfigError("substitute_train_gradient: empty initial set");
  if (eval_set.rows() == 0) throw ConfigError("substitute_train_gradient: empty eval set");
  if (cfg.method == AttackMethod::Gan)
    throw ConfigError("substitute_train_gradient: use substitute_train_gan for the gan method");

  const std::uint64_t queries_before = oracle.query_count();
  Rng init(derive_seed(cfg.seed, "substitute-init"));
  DefenderNetConfig arch{cfg.hidden, cfg.dropout, 0.2};
  Network substitute(classifier_arch(s0.cols(), cfg.num_classes, arch), init,
                     "substitute@" + std::to_string(cfg.seed));
  Rng order(derive_seed(cfg.seed, "substitute-order"));

  AttackResult res;
  res.method = cfg.method;
  res.seed = cfg.seed;
  Matrix s = s0;
  for (int rho = 0; rho < cfg.rho_max; ++rho) {
    const std::vector<int> labels = oracle.label(s);
    res.queries_training += s.rows();
    train_supervised(substitute, s, labels, cfg.substitute_passes,
                     static_cast<std::size_t>(cfg.substitute_batch_size), cfg.adam, order,
                     "substitute_train_gradient");
    res.success_rates_pct.push_back(success_rate(substitute, oracle, eval_set));
    res.queries_eval += eval_set.rows();
    res.queries_cumulative_per_epoch.push_back(oracle.query_count() - queries_before);
    substitute.eval();
    const Matrix s_add = craft_augmentation(substitute, s, labels, cfg.method, cfg.step_size);
    s = vconcat(s, s_add);  // multiset union; duplicates kept
    res.attack_set_sizes.push_back(s.rows());
  }
  res.max_success_rate_pct =
      *std::max_element(res.success_rates_pct.begin(), res.success_rates_pct.end());
  res.queries_total = oracle.query_count() - queries_before;
  return res;
}

AttackResult substitute_train_gan(const Oracle& oracle, const Matrix& s0,
                                  const AttackConfig& cfg, const Matrix& eval_set) {
  cfg.validate();
  if (s0.rows() == 0) throw ConfigError("substitute_train_gan: empty initial set");
  if (eval_set.rows() == 0) throw ConfigError("substitute_train_gan: empty eval set");

  const std::size_t d = s0.cols();
  const std::size_t latent = cfg.latent_dim == 0 ? d : cfg.latent_dim;
  const std::size_t k = static_cast<std::size_t>(cfg.num_classes);
  const std::uint64_t queries_before = oracle.query_count();

  Rng init(derive_seed(cfg.seed, "substitute-init"));
  DefenderNetConfig arch{cfg.hidden, cfg.dropout, 0.2};
  Network substitute(classifier_arch(d, cfg.num_classes, arch), init,
                     "substitute@" + std::to_string(cfg.seed));
  Rng order(derive_seed(cfg.seed, "substitute-order"));
  Rng noise(derive_seed(cfg.seed, "gan-noise"));
  std::vector<Network> generators;
  generators.reserve(k);
  for (std::size_t j = 0; j < k; ++j) {
    Rng gen_init(derive_seed(cfg.seed, "gan-generator-" + std::to_string(j)));
    generators.emplace_back(generator_arch(latent, d, cfg.hidden, 0.2), gen_init,
                            "gan-generator-" + std::to_string(j) + "@" + std::to_string(cfg.seed));
    generators.back().train();
  }

  AttackResult res;
  res.method = AttackMethod::Gan;
  res.seed = cfg.seed;
  for (int rho = 0; rho < cfg.rho_max; ++rho) {
    const std::vector<int> s0_labels = oracle.label(s0);
    res.queries_training += s0.rows();
    train_supervised(substitute, s0, s0_labels, cfg.substitute_passes,
                     static_cast<std::size_t>(cfg.substitute_batch_size), cfg.adam, order,
                     "substitute_train_gan");

    if (cfg.gan_examples_per_class > 0) {
      // generate m examples from each class generator
      std::vector<Matrix> latents(k);
      Matrix generated_all;
      for (std::size_t j = 0; j < k; ++j) {
        Matrix z(cfg.gan_examples_per_class, latent);
        for (double& v : z.values()) v = noise.normal();
        latents[j] = std::move(z);
        generated_all = vconcat(generated_all, generators[j].forward(latents[j]).output());
      }
      const std::vector<int> gen_labels = oracle.label(generated_all);
      res.queries_training += generated_all.rows();

      // one substitute step on the generated pool
      substitute.train();
      const ForwardTrace t_sub = substitute.forward(generated_all);
      const LossResult l_sub = loss_cross_entropy(t_sub.output(), gen_labels);
      if (!std::isfinite(l_sub.value))
        throw TrainError("substitute_train_gan: non-finite substitute loss at epoch " +
                         std::to_string(rho));
      substitute.adam_step(substitute.backward(t_sub, l_sub.grad), cfg.adam);

      // push each generator toward its class under the (frozen) substitute
      for (std::size_t j = 0; j < k; ++j) {
        const ForwardTrace t_gen = generators[j].forward(latents[j]);
        const ForwardTrace t_cls = substitute.forward(t_gen.output());
        const std::vector<int> want(cfg.gan_examples_per_class, static_cast<int>(j));
        const LossResult l_gen = loss_cross_entropy(t_cls.output(), want);
        if (!std::isfinite(l_gen.value))
          throw TrainError("substitute_train_gan: non-finite generator loss at epoch " +
                           std::to_string(rho) + ", class " + std::to_string(j));
        const Matrix d_gen = substitute.backward(t_cls, l_gen.grad).input;
        generators[j].adam_step(generators[j].backward(t_gen, d_gen), cfg.adam);
      }
    }

    res.success_rates_pct.push_back(success_rate(substitute, oracle, eval_set));
    res.queries_eval += eval_set.rows();
    res.queries_cumulative_per_epoch.push_back(oracle.query_count() - queries_before);
  }
  res.max_success_rate_pct =
      *std::max_element(res.success_rates_pct.begin(), res.success_rates_pct.end());
  res.queries_total = oracle.query_count() - queries_before;
  return res;
}

double success_rate(const Network& substitute, const Oracle& oracle, const Matrix& eval_set) {
  if (eval_set.rows() == 0) throw ConfigError("success_rate: empty eval set");
  const std::vector<int> mine = argmax_rows(substitute.forward_eval(eval_set).output());
  const std::vector<int> theirs = oracle.label(eval_set);
  std::size_t agree = 0;
  for (std::size_t i = 0; i < mine.size(); ++i)
    if (mine[i] == theirs[i]) ++agree;
  return 100.0 * static_cast<double>(agree) / static_cast<double>(mine.size());
}

}  // namespace advenc
