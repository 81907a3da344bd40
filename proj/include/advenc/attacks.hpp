#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "advenc/advenc.hpp"
#include "advenc/nn.hpp"

namespace advenc {

// The attacker's only view of the defender: a deterministic labeling
// function with an exact query counter (one query per labeled row).
class Oracle {
 public:
  Oracle(std::string tag, std::function<std::vector<int>(const Matrix&)> fn)
      : tag_(std::move(tag)), fn_(std::move(fn)) {}

  std::vector<int> label(const Matrix& rows) const {
    auto out = fn_(rows);
    queries_ += rows.rows();
    return out;
  }

  std::uint64_t query_count() const { return queries_; }
  const std::string& tag() const { return tag_; }

 private:
  std::string tag_;
  std::function<std::vector<int>(const Matrix&)> fn_;
  mutable std::uint64_t queries_ = 0;
};

// Unprotected condition: the oracle is the baseline classifier itself.
Oracle oracle_from_baseline(const Network& baseline);

// Protected condition: the attacker eavesdrops the encrypted stream, so the
// oracle operates on encrypted-space inputs z and answers argmax C(G2(z)).
Oracle oracle_from_advenc(const AdvEncModel& model);

// Alternative plaintext-query interface (the system encrypts internally):
// answers argmax C(G2(G1(x))). Kept for comparison runs.
Oracle oracle_from_advenc_plaintext(const AdvEncModel& model);

enum class AttackMethod { Jacobian, Fgsm, Fgv, Gan };

std::string attack_method_name(AttackMethod m);
AttackMethod attack_method_from_name(const std::string& name);

struct AttackConfig {
  AttackMethod method = AttackMethod::Jacobian;
  int rho_max = 6;
  double step_size = 0.1;  // perturbation magnitude of the crafting rules
  int num_classes = 2;
  std::size_t hidden = 64;          // substitute width (defender-shaped net)
  double dropout = 0.2;
  int substitute_passes = 10;       // training passes over the attack set per epoch
  int substitute_batch_size = 32;
  std::size_t gan_examples_per_class = 64;  // m_gen; 0 degenerates to S0-only training
  std::size_t latent_dim = 0;               // 0 = data dimension
  AdamHyper adam{1e-3, 0.9, 0.999, 1e-8};
  std::uint64_t seed = 0;

  void validate() const;
};

struct AttackResult {
  AttackMethod method = AttackMethod::Jacobian;
  std::vector<double> success_rates_pct;  // one entry per epoch, raw
  double max_success_rate_pct = 0.0;
  std::uint64_t queries_total = 0;
  std::uint64_t queries_training = 0;  // oracle labels consumed for training
  std::uint64_t queries_eval = 0;      // oracle labels consumed by success-rate checks
  std::vector<std::uint64_t> queries_cumulative_per_epoch;  // running total after each epoch
  std::vector<std::size_t> attack_set_sizes;  // |S_rho| per epoch (gradient methods)
  std::uint64_t seed = 0;
};

// One crafting step of the three augmentation rules. oracle_labels are the
// labels the oracle assigned to s; gradients are taken per sample through
// the substitute in eval mode; outputs are clipped to [0,1].
Matrix craft_augmentation(const Network& substitute, const Matrix& s,
                          const std::vector<int>& oracle_labels, AttackMethod method,
                          double step_size);

// Gradient-based substitute training: label S_rho, train the substitute,
// craft S_add, double the attack set, record the success rate per epoch.
AttackResult substitute_train_gradient(const Oracle& oracle, const Matrix& s0,
                                       const AttackConfig& cfg, const Matrix& eval_set);

// GAN-based substitute training with one generator per class: per epoch the
// substitute trains on S0, then on generated samples labeled by the oracle,
// then each generator is pushed toward its class under the substitute.
AttackResult substitute_train_gan(const Oracle& oracle, const Matrix& s0,
                                  const AttackConfig& cfg, const Matrix& eval_set);

// 100 * fraction of eval rows where the substitute and the oracle agree.
double success_rate(const Network& substitute, const Oracle& oracle, const Matrix& eval_set);

}  // namespace advenc
