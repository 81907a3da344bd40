// advenc: train the AdvEncryption defender, run extraction attacks against
// protected and unprotected oracles, and aggregate sweep results.

#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "advenc/harness.hpp"
#include "advenc/serialize.hpp"

using namespace advenc;
namespace fs = std::filesystem;

namespace {

struct CommonOpts {
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string csv_path;
  std::string label_col;
};

ExperimentConfig resolve_config(const CommonOpts& opts) {
  ExperimentConfig cfg;
  if (!opts.config_path.empty()) cfg = load_experiment_config(opts.config_path);
  if (!opts.out_dir.empty()) cfg.out_dir = opts.out_dir;
  if (opts.seed_set) cfg.seeds = {opts.seed};
  if (!opts.csv_path.empty()) {
    cfg.dataset.is_csv = true;
    cfg.dataset.csv_path = opts.csv_path;
    if (opts.label_col.empty())
      throw ConfigError("--csv requires --label-col");
    cfg.dataset.label_column = opts.label_col;
  }
  cfg.validate();
  return cfg;
}

// Data for one seed, from either source, split into train/test.
std::pair<Dataset, Dataset> seed_data(const ExperimentConfig& cfg, std::uint64_t seed) {
  Dataset full;
  if (cfg.dataset.is_csv) {
    CsvDataset loaded = load_csv(cfg.dataset.csv_path, cfg.dataset.label_column);
    fs::create_directories(cfg.out_dir);
    write_normalization_sidecar(loaded,
                                (fs::path(cfg.out_dir) / "normalization.json").string());
    full = std::move(loaded.dataset);
  } else {
    full = generate_synthetic(cfg.dataset.synthetic, derive_seed(seed, "data"));
  }
  return split(full, cfg.test_fraction, derive_seed(seed, "data-split"));
}

int cmd_train_baseline(const CommonOpts& opts) {
  const ExperimentConfig cfg = resolve_config(opts);
  const std::uint64_t seed = cfg.seeds.front();
  const auto [train, test] = seed_data(cfg, seed);
  TrainConfig tcfg = cfg.defender.train;
  tcfg.seed = derive_seed(seed, "defender");
  tcfg.epochs = cfg.defender.baseline_epochs;
  const BaselineResult res = train_baseline_classifier(train, tcfg);
  fs::create_directories(cfg.out_dir);
  const std::string path = (fs::path(cfg.out_dir) / "baseline.net").string();
  save_network(res.net, path);
  std::cout << "baseline: train acc " << format_double(res.train_accuracy_pct) << "%, test acc "
            << format_double(accuracy(res.net, test)) << "%, saved to " << path << "\n";
  return 0;
}

int cmd_train_advenc(const CommonOpts& opts) {
  const ExperimentConfig cfg = resolve_config(opts);
  const std::uint64_t seed = cfg.seeds.front();
  const auto [train, test] = seed_data(cfg, seed);

  TrainConfig base_cfg = cfg.defender.train;
  base_cfg.seed = derive_seed(seed, "defender");
  base_cfg.epochs = cfg.defender.baseline_epochs;
  const std::string base_path = (fs::path(cfg.out_dir) / "baseline.net").string();
  Network baseline;
  if (fs::exists(base_path)) {
    baseline = load_network(base_path);
    std::cout << "loaded baseline from " << base_path << "\n";
  } else {
    std::cout << "training baseline classifier...\n";
    baseline = train_baseline_classifier(train, base_cfg).net;
    fs::create_directories(cfg.out_dir);
    save_network(baseline, base_path);
  }

  TrainConfig adv_cfg = cfg.defender.train;
  adv_cfg.seed = derive_seed(seed, "defender");
  std::cout << "training AdvEncryption (epochs <= " << adv_cfg.epochs << ")...\n";
  const AdvEncTrainResult adv = train_advenc(train, adv_cfg, baseline);
  const EfficiencyReport rep = make_efficiency_report(baseline, adv.model, train, test);
  const std::string model_dir = (fs::path(cfg.out_dir) / "model").string();
  save_model(adv.model, model_dir, experiment_config_hash(cfg), rep);
  std::cout << "epochs run: " << adv.epochs_run
            << (adv.stopped_on_thresholds ? " (stopped on efficiency thresholds)" : "") << "\n"
            << "fake label: " << adv.model.fake_label << "\n"
            << "encryption efficiency: " << format_double(rep.encryption_efficiency_pct) << "%\n"
            << "decryption efficiency: " << format_double(rep.decryption_efficiency_pct) << "%\n"
            << "baseline  train/test acc: " << format_double(rep.baseline_train_acc_pct) << "% / "
            << format_double(rep.baseline_test_acc_pct) << "%\n"
            << "pipeline  train/test acc: " << format_double(rep.pipeline_train_acc_pct) << "% / "
            << format_double(rep.pipeline_test_acc_pct) << "%\n"
            << "model saved to " << model_dir << "\n";
  return 0;
}

int cmd_attack(const CommonOpts& opts, const std::string& method_name, const std::string& protected_flag,
               const std::string& model_dir_opt) {
  const ExperimentConfig cfg = resolve_config(opts);
  const std::uint64_t seed = cfg.seeds.front();
  const bool is_protected = protected_flag == "true";
  if (!is_protected && protected_flag != "false")
    throw ConfigError("--protected must be true or false");
  const AttackMethod method = attack_method_from_name(method_name);

  const auto [train, test] = seed_data(cfg, seed);
  const std::string model_dir =
      model_dir_opt.empty() ? (fs::path(cfg.out_dir) / "model").string() : model_dir_opt;
  const std::string base_path = (fs::path(cfg.out_dir) / "baseline.net").string();
  if (!fs::exists(model_dir) || !fs::exists(base_path))
    throw ConfigError("attack needs a trained model; run train-advenc first (looked in " +
                      model_dir + " and " + base_path + ")");
  const AdvEncModel model = load_model(model_dir);
  const Network baseline = load_network(base_path);

  if (test.size() < cfg.attack.s0_size + cfg.attack.eval_size)
    throw ConfigError("test split too small for s0_size + eval_size");
  Rng sel(derive_seed(seed, "attack-s0"));
  std::vector<std::size_t> idx(test.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  sel.shuffle(idx);
  const std::vector<std::size_t> s0_idx(idx.begin(),
                                        idx.begin() + static_cast<std::ptrdiff_t>(cfg.attack.s0_size));
  const std::vector<std::size_t> eval_idx(
      idx.begin() + static_cast<std::ptrdiff_t>(cfg.attack.s0_size),
      idx.begin() + static_cast<std::ptrdiff_t>(cfg.attack.s0_size + cfg.attack.eval_size));
  Matrix s0 = take_rows(test.features, s0_idx);
  Matrix eval_set = take_rows(test.features, eval_idx);
  Oracle oracle = is_protected ? (cfg.attack.plaintext_oracle
                                      ? oracle_from_advenc_plaintext(model)
                                      : oracle_from_advenc(model))
                               : oracle_from_baseline(baseline);
  if (is_protected && !cfg.attack.plaintext_oracle) {
    s0 = encrypt(model, s0);
    eval_set = encrypt(model, eval_set);
  }

  AttackConfig acfg = cfg.attack.base;
  acfg.method = method;
  acfg.num_classes = test.num_classes;
  acfg.seed = derive_seed(seed, "attacker-" + method_name);
  AttackRunRecord rec;
  rec.seed = seed;
  rec.method = method;
  rec.is_protected = is_protected;
  rec.oracle_tag = oracle.tag();
  rec.result = method == AttackMethod::Gan ? substitute_train_gan(oracle, s0, acfg, eval_set)
                                           : substitute_train_gradient(oracle, s0, acfg, eval_set);

  const fs::path dir = fs::path(cfg.out_dir) / "runs" / std::to_string(seed);
  fs::create_directories(dir);
  const std::string name =
      method_name + "_" + (is_protected ? "protected" : "unprotected") + ".json";
  std::ofstream os(dir / name);
  os << attack_run_to_json(rec).dump(2) << "\n";
  std::cout << "success rates per epoch (%):";
  for (double v : rec.result.success_rates_pct) std::cout << " " << format_double(v);
  std::cout << "\nmax " << format_double(rec.result.max_success_rate_pct) << "%, "
            << rec.result.queries_total << " oracle queries, written to " << (dir / name).string()
            << "\n";
  return 0;
}

int cmd_run(const CommonOpts& opts) {
  const ExperimentConfig cfg = resolve_config(opts);
  const SweepSummary summary = run_experiment(cfg);
  std::cout << "completed seeds: " << summary.efficiency.size() << "/" << cfg.seeds.size() << "\n";
  for (const auto& f : summary.failures)
    std::cout << "seed " << f.seed << " FAILED: " << f.message << "\n";
  std::cout << "outputs in " << cfg.out_dir << "\n";
  return summary.failures.empty() ? 0 : 1;
}

int cmd_summarize(const std::string& run_dir) {
  const SweepSummary summary = summarize(run_dir);
  write_summary_csvs(summary, run_dir);
  std::cout << "runs: " << summary.runs.size() << "\n";
  for (const auto& [key, mean] : summary.mean_success_per_epoch()) {
    std::cout << key.first << (key.second ? " protected  " : " unprotected") << " mean:";
    for (double v : mean) {
      char buf[16];
      std::snprintf(buf, sizeof buf, " %6.2f", v);
      std::cout << buf;
    }
    std::cout << "\n";
  }
  std::cout << "summaries rewritten under " << run_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"AdvEncryption trainer and model-extraction attack harness"};
  app.require_subcommand(1);

  CommonOpts opts;
  std::string method = "jacobian";
  std::string protected_flag = "false";
  std::string model_dir;
  std::string run_dir;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", opts.config_path, "JSON experiment config");
    cmd->add_option("--out-dir", opts.out_dir, "output directory (overrides config)");
    cmd->add_option("--seed", opts.seed, "single seed (overrides config seeds)")
        ->each([&](const std::string&) { opts.seed_set = true; });
    cmd->add_option("--csv", opts.csv_path, "CSV dataset path (overrides config dataset)");
    cmd->add_option("--label-col", opts.label_col, "label column name for --csv");
  };

  auto* tb = app.add_subcommand("train-baseline", "train the plaintext baseline classifier");
  add_common(tb);
  auto* ta = app.add_subcommand("train-advenc", "train the AdvEncryption defender");
  add_common(ta);
  auto* at = app.add_subcommand("attack", "run one substitute-model attack");
  add_common(at);
  at->add_option("--method", method, "jacobian|fgsm|fgv|gan");
  at->add_option("--protected", protected_flag, "true|false");
  at->add_option("--model-dir", model_dir, "trained model directory");
  auto* rn = app.add_subcommand("run", "full sweep: seeds x methods x conditions");
  add_common(rn);
  auto* sm = app.add_subcommand("summarize", "aggregate an existing run directory");
  sm->add_option("run_dir", run_dir, "directory produced by run")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (tb->parsed()) return cmd_train_baseline(opts);
    if (ta->parsed()) return cmd_train_advenc(opts);
    if (at->parsed()) return cmd_attack(opts, method, protected_flag, model_dir);
    if (rn->parsed()) return cmd_run(opts);
    if (sm->parsed()) return cmd_summarize(run_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
