#include "advenc/harness.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "advenc/serialize.hpp"

namespace advenc {

namespace fs = std::filesystem;

void ExperimentConfig::validate() const {
  if (seeds.empty()) throw ConfigError("experiment: need at least one seed");
  if (attack.methods.empty()) throw ConfigError("experiment: need at least one attack method");
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw ConfigError("experiment: test_fraction must be in (0,1)");
  if (attack.s0_size == 0 || attack.eval_size == 0)
    throw ConfigError("experiment: s0_size and eval_size must be positive");
  if (out_dir.empty()) throw ConfigError("experiment: out_dir must be set");
  defender.train.validate();
  if (defender.baseline_epochs < 0) throw ConfigError("experiment: baseline_epochs must be >= 0");
  attack.base.validate();
  if (!dataset.is_csv) dataset.synthetic.validate();
}

namespace {

AdamHyper adam_from_json(const nlohmann::json& j, AdamHyper defaults) {
  AdamHyper a = defaults;
  if (j.contains("learning_rate")) a.learning_rate = j.at("learning_rate").get<double>();
  if (j.contains("beta1")) a.beta1 = j.at("beta1").get<double>();
  if (j.contains("beta2")) a.beta2 = j.at("beta2").get<double>();
  if (j.contains("epsilon")) a.epsilon = j.at("epsilon").get<double>();
  return a;
}

nlohmann::json adam_to_json(const AdamHyper& a) {
  return {{"learning_rate", a.learning_rate},
          {"beta1", a.beta1},
          {"beta2", a.beta2},
          {"epsilon", a.epsilon}};
}

}  // namespace

ExperimentConfig experiment_config_from_json(const nlohmann::json& j) {
  ExperimentConfig cfg;
  if (j.contains("dataset")) {
    const auto& d = j.at("dataset");
    const std::string type = d.value("type", "synthetic");
    if (type == "csv") {
      cfg.dataset.is_csv = true;
      cfg.dataset.csv_path = d.at("path").get<std::string>();
      cfg.dataset.label_column = d.at("label_column").get<std::string>();
    } else if (type == "synthetic") {
      auto& s = cfg.dataset.synthetic;
      s.num_classes = d.value("num_classes", s.num_classes);
      s.dim = d.value("dim", s.dim);
      s.samples_per_class = d.value("samples_per_class", s.samples_per_class);
      s.class_center_separation = d.value("separation", s.class_center_separation);
      s.noise_sigma = d.value("noise_sigma", s.noise_sigma);
    } else {
      throw ConfigError("experiment: unknown dataset type '" + type + "'");
    }
  }
  cfg.test_fraction = j.value("test_fraction", cfg.test_fraction);
  if (j.contains("defender")) {
    const auto& d = j.at("defender");
    cfg.defender.baseline_epochs = d.value("baseline_epochs", cfg.defender.baseline_epochs);
    auto& t = cfg.defender.train;
    t.epochs = d.value("epochs", t.epochs);
    t.batch_size = d.value("batch_size", t.batch_size);
    if (d.contains("adam")) t.adam = adam_from_json(d.at("adam"), t.adam);
    t.cyc_weight = d.value("cyc_weight", t.cyc_weight);
    t.fake_label = d.value("fake_label", t.fake_label);
    t.disc_steps = d.value("disc_steps", t.disc_steps);
    t.target_enc_efficiency_pct =
        d.value("target_enc_efficiency_pct", t.target_enc_efficiency_pct);
    t.target_dec_efficiency_pct =
        d.value("target_dec_efficiency_pct", t.target_dec_efficiency_pct);
    t.arch.hidden = d.value("hidden", t.arch.hidden);
    t.arch.dropout = d.value("dropout", t.arch.dropout);
    t.arch.leaky_slope = d.value("leaky_slope", t.arch.leaky_slope);
  }
  if (j.contains("attack")) {
    const auto& a = j.at("attack");
    if (a.contains("methods")) {
      cfg.attack.methods.clear();
      for (const auto& m : a.at("methods"))
        cfg.attack.methods.push_back(attack_method_from_name(m.get<std::string>()));
    }
    auto& b = cfg.attack.base;
    b.rho_max = a.value("rho_max", b.rho_max);
    b.step_size = a.value("step_size", b.step_size);
    b.hidden = a.value("hidden", b.hidden);
    b.dropout = a.value("dropout", b.dropout);
    b.substitute_passes = a.value("substitute_passes", b.substitute_passes);
    b.substitute_batch_size = a.value("substitute_batch_size", b.substitute_batch_size);
    b.gan_examples_per_class = a.value("gan_examples_per_class", b.gan_examples_per_class);
    b.latent_dim = a.value("latent_dim", b.latent_dim);
    if (a.contains("adam")) b.adam = adam_from_json(a.at("adam"), b.adam);
    cfg.attack.s0_size = a.value("s0_size", cfg.attack.s0_size);
    cfg.attack.eval_size = a.value("eval_size", cfg.attack.eval_size);
    cfg.attack.plaintext_oracle = a.value("plaintext_oracle", cfg.attack.plaintext_oracle);
  }
  if (j.contains("seeds")) {
    cfg.seeds.clear();
    for (const auto& s : j.at("seeds")) cfg.seeds.push_back(s.get<std::uint64_t>());
  }
  cfg.out_dir = j.value("out_dir", cfg.out_dir);
  cfg.save_models = j.value("save_models", cfg.save_models);
  cfg.validate();
  return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open config: " + path);
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("config " + path + ": " + e.what());
  }
  return experiment_config_from_json(j);
}

nlohmann::json experiment_config_to_json(const ExperimentConfig& cfg) {
  nlohmann::json dataset;
  if (cfg.dataset.is_csv) {
    dataset = {{"type", "csv"},
               {"path", cfg.dataset.csv_path},
               {"label_column", cfg.dataset.label_column}};
  } else {
    const auto& s = cfg.dataset.synthetic;
    dataset = {{"type", "synthetic"},
               {"num_classes", s.num_classes},
               {"dim", s.dim},
               {"samples_per_class", s.samples_per_class},
               {"separation", s.class_center_separation},
               {"noise_sigma", s.noise_sigma}};
  }
  std::vector<std::string> method_names;
  for (auto m : cfg.attack.methods) method_names.push_back(attack_method_name(m));
  const auto& t = cfg.defender.train;
  const auto& b = cfg.attack.base;
  return {
      {"dataset", dataset},
      {"test_fraction", cfg.test_fraction},
      {"defender",
       {{"baseline_epochs", cfg.defender.baseline_epochs},
        {"epochs", t.epochs},
        {"batch_size", t.batch_size},
        {"adam", adam_to_json(t.adam)},
        {"cyc_weight", t.cyc_weight},
        {"fake_label", t.fake_label},
        {"disc_steps", t.disc_steps},
        {"target_enc_efficiency_pct", t.target_enc_efficiency_pct},
        {"target_dec_efficiency_pct", t.target_dec_efficiency_pct},
        {"hidden", t.arch.hidden},
        {"dropout", t.arch.dropout},
        {"leaky_slope", t.arch.leaky_slope}}},
      {"attack",
       {{"methods", method_names},
        {"rho_max", b.rho_max},
        {"step_size", b.step_size},
        {"hidden", b.hidden},
        {"dropout", b.dropout},
        {"substitute_passes", b.substitute_passes},
        {"substitute_batch_size", b.substitute_batch_size},
        {"gan_examples_per_class", b.gan_examples_per_class},
        {"latent_dim", b.latent_dim},
        {"adam", adam_to_json(b.adam)},
        {"s0_size", cfg.attack.s0_size},
        {"eval_size", cfg.attack.eval_size},
        {"plaintext_oracle", cfg.attack.plaintext_oracle}}},
      {"seeds", cfg.seeds},
      {"out_dir", cfg.out_dir},
      {"save_models", cfg.save_models},
  };
}

std::string experiment_config_hash(const ExperimentConfig& cfg) {
  const std::string dump = experiment_config_to_json(cfg).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : dump) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

nlohmann::json attack_run_to_json(const AttackRunRecord& rec) {
  return {
      {"seed", rec.seed},
      {"method", attack_method_name(rec.method)},
      {"protected", rec.is_protected},
      {"oracle_tag", rec.oracle_tag},
      {"success_rates_pct", rec.result.success_rates_pct},
      {"max_success_rate_pct", rec.result.max_success_rate_pct},
      {"queries_total", rec.result.queries_total},
      {"queries_training", rec.result.queries_training},
      {"queries_eval", rec.result.queries_eval},
      {"queries_cumulative_per_epoch", rec.result.queries_cumulative_per_epoch},
      {"attack_set_sizes", rec.result.attack_set_sizes},
  };
}

AttackRunRecord attack_run_from_json(const nlohmann::json& j) {
  AttackRunRecord rec;
  rec.seed = j.at("seed").get<std::uint64_t>();
  rec.method = attack_method_from_name(j.at("method").get<std::string>());
  rec.is_protected = j.at("protected").get<bool>();
  rec.oracle_tag = j.value("oracle_tag", "");
  rec.result.method = rec.method;
  rec.result.seed = rec.seed;
  rec.result.success_rates_pct = j.at("success_rates_pct").get<std::vector<double>>();
  rec.result.max_success_rate_pct = j.at("max_success_rate_pct").get<double>();
  rec.result.queries_total = j.at("queries_total").get<std::uint64_t>();
  rec.result.queries_training = j.value("queries_training", std::uint64_t{0});
  rec.result.queries_eval = j.value("queries_eval", std::uint64_t{0});
  if (j.contains("queries_cumulative_per_epoch"))
    rec.result.queries_cumulative_per_epoch =
        j.at("queries_cumulative_per_epoch").get<std::vector<std::uint64_t>>();
  if (j.contains("attack_set_sizes"))
    rec.result.attack_set_sizes = j.at("attack_set_sizes").get<std::vector<std::size_t>>();
  return rec;
}

std::map<std::pair<std::string, bool>, std::vector<double>>
SweepSummary::mean_success_per_epoch() const {
  // group runs, then average epoch-wise in ascending seed order
  std::map<std::pair<std::string, bool>, std::vector<const AttackRunRecord*>> groups;
  for (const auto& r : runs)
    groups[{attack_method_name(r.method), r.is_protected}].push_back(&r);
  std::map<std::pair<std::string, bool>, std::vector<double>> out;
  for (auto& [key, recs] : groups) {
    std::sort(recs.begin(), recs.end(),
              [](const AttackRunRecord* a, const AttackRunRecord* b) { return a->seed < b->seed; });
    std::size_t epochs = 0;
    for (const auto* r : recs) epochs = std::max(epochs, r->result.success_rates_pct.size());
    std::vector<double> mean(epochs, 0.0);
    for (std::size_t e = 0; e < epochs; ++e) {
      double sum = 0.0;
      std::size_t n = 0;
      for (const auto* r : recs) {
        if (e < r->result.success_rates_pct.size()) {
          sum += r->result.success_rates_pct[e];
          ++n;
        }
      }
      mean[e] = sum / static_cast<double>(n);
    }
    out[key] = std::move(mean);
  }
  return out;
}

std::map<std::pair<std::string, bool>, std::vector<std::pair<std::uint64_t, double>>>
SweepSummary::max_success_per_seed() const {
  std::map<std::pair<std::string, bool>, std::vector<std::pair<std::uint64_t, double>>> out;
  for (const auto& r : runs)
    out[{attack_method_name(r.method), r.is_protected}].push_back(
        {r.seed, r.result.max_success_rate_pct});
  for (auto& [key, v] : out) std::sort(v.begin(), v.end());
  return out;
}

namespace {

struct SeedArtifacts {
  std::vector<AttackRunRecord> runs;
  SeedEfficiency efficiency;
};

SeedArtifacts run_seed(const ExperimentConfig& cfg, std::uint64_t seed, const Dataset* csv_data) {
  Dataset full;
  if (cfg.dataset.is_csv) {
    full = *csv_data;
  } else {
    full = generate_synthetic(cfg.dataset.synthetic, derive_seed(seed, "data"));
  }
  auto [train, test] = split(full, cfg.test_fraction, derive_seed(seed, "data-split"));

  TrainConfig base_cfg = cfg.defender.train;
  base_cfg.seed = derive_seed(seed, "defender");
  base_cfg.epochs = cfg.defender.baseline_epochs;
  const BaselineResult baseline = train_baseline_classifier(train, base_cfg);

  TrainConfig adv_cfg = cfg.defender.train;
  adv_cfg.seed = derive_seed(seed, "defender");
  const AdvEncTrainResult adv = train_advenc(train, adv_cfg, baseline.net);

  SeedArtifacts art;
  art.efficiency.seed = seed;
  art.efficiency.fake_label = adv.model.fake_label;
  art.efficiency.report = make_efficiency_report(baseline.net, adv.model, train, test);

  if (cfg.save_models) {
    const fs::path mdir = fs::path(cfg.out_dir) / "models" / std::to_string(seed);
    save_model(adv.model, mdir.string(), experiment_config_hash(cfg), art.efficiency.report);
    save_network(baseline.net, (mdir / "baseline.net").string());
  }

  // attacker's eavesdropped slice and the success-rate holdout, disjoint,
  // chosen pre-encryption so both arms pair exactly
  if (test.size() < cfg.attack.s0_size + cfg.attack.eval_size)
    throw ConfigError("experiment: test split too small for s0_size + eval_size");
  Rng sel(derive_seed(seed, "attack-s0"));
  std::vector<std::size_t> idx(test.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  sel.shuffle(idx);
  const std::vector<std::size_t> s0_idx(idx.begin(),
                                        idx.begin() + static_cast<std::ptrdiff_t>(cfg.attack.s0_size));
  const std::vector<std::size_t> eval_idx(
      idx.begin() + static_cast<std::ptrdiff_t>(cfg.attack.s0_size),
      idx.begin() + static_cast<std::ptrdiff_t>(cfg.attack.s0_size + cfg.attack.eval_size));
  const Matrix s0_plain = take_rows(test.features, s0_idx);
  const Matrix eval_plain = take_rows(test.features, eval_idx);
  const Matrix s0_enc = encrypt(adv.model, s0_plain);
  const Matrix eval_enc = encrypt(adv.model, eval_plain);

  for (const AttackMethod method : cfg.attack.methods) {
    AttackConfig acfg = cfg.attack.base;
    acfg.method = method;
    acfg.num_classes = full.num_classes;
    acfg.seed = derive_seed(seed, "attacker-" + attack_method_name(method));
    for (const bool is_protected : {false, true}) {
      Oracle oracle = is_protected ? (cfg.attack.plaintext_oracle
                                          ? oracle_from_advenc_plaintext(adv.model)
                                          : oracle_from_advenc(adv.model))
                                   : oracle_from_baseline(baseline.net);
      const bool encrypted_view = is_protected && !cfg.attack.plaintext_oracle;
      const Matrix& s0 = encrypted_view ? s0_enc : s0_plain;
      const Matrix& eval_set = encrypted_view ? eval_enc : eval_plain;
      AttackRunRecord rec;
      rec.seed = seed;
      rec.method = method;
      rec.is_protected = is_protected;
      rec.oracle_tag = oracle.tag();
      rec.result = method == AttackMethod::Gan
                       ? substitute_train_gan(oracle, s0, acfg, eval_set)
                       : substitute_train_gradient(oracle, s0, acfg, eval_set);
      art.runs.push_back(std::move(rec));
    }
  }
  return art;
}

void write_attack_run_file(const ExperimentConfig& cfg, const AttackRunRecord& rec) {
  const fs::path dir = fs::path(cfg.out_dir) / "runs" / std::to_string(rec.seed);
  fs::create_directories(dir);
  const std::string name = attack_method_name(rec.method) + "_" +
                           (rec.is_protected ? "protected" : "unprotected") + ".json";
  std::ofstream os(dir / name);
  if (!os) throw IoError("cannot write " + (dir / name).string());
  os << attack_run_to_json(rec).dump(2) << "\n";
}

}  // namespace

void write_summary_csvs(const SweepSummary& summary, const std::string& out_dir) {
  fs::create_directories(out_dir);
  {
    std::ofstream os(fs::path(out_dir) / "summary_mean.csv");
    os << "method,protected,epoch,mean_success_rate_pct\n";
    for (const auto& [key, mean] : summary.mean_success_per_epoch())
      for (std::size_t e = 0; e < mean.size(); ++e)
        os << key.first << "," << (key.second ? "true" : "false") << "," << e << ","
           << format_double(mean[e]) << "\n";
  }
  {
    std::ofstream os(fs::path(out_dir) / "summary_max.csv");
    os << "seed,method,protected,max_success_rate_pct\n";
    for (const auto& [key, v] : summary.max_success_per_seed())
      for (const auto& [seed, mx] : v)
        os << seed << "," << key.first << "," << (key.second ? "true" : "false") << ","
           << format_double(mx) << "\n";
  }
  {
    std::ofstream os(fs::path(out_dir) / "efficiency.csv");
    os << "seed,fake_label,encryption_efficiency_pct,decryption_efficiency_pct,"
          "baseline_train_acc_pct,baseline_test_acc_pct,pipeline_train_acc_pct,"
          "pipeline_test_acc_pct\n";
    for (const auto& e : summary.efficiency)
      os << e.seed << "," << e.fake_label << ","
         << format_double(e.report.encryption_efficiency_pct) << ","
         << format_double(e.report.decryption_efficiency_pct) << ","
         << format_double(e.report.baseline_train_acc_pct) << ","
         << format_double(e.report.baseline_test_acc_pct) << ","
         << format_double(e.report.pipeline_train_acc_pct) << ","
         << format_double(e.report.pipeline_test_acc_pct) << "\n";
  }
  {
    // one row per attack epoch across every run
    std::ofstream os(fs::path(out_dir) / "attack_epochs.csv");
    os << "seed,method,protected,epoch,success_rate_pct,cumulative_queries\n";
    std::vector<const AttackRunRecord*> ordered;
    for (const auto& r : summary.runs) ordered.push_back(&r);
    std::sort(ordered.begin(), ordered.end(), [](const AttackRunRecord* a, const AttackRunRecord* b) {
      const auto ka = std::tuple(a->seed, attack_method_name(a->method), a->is_protected);
      const auto kb = std::tuple(b->seed, attack_method_name(b->method), b->is_protected);
      return ka < kb;
    });
    for (const auto* r : ordered) {
      for (std::size_t e = 0; e < r->result.success_rates_pct.size(); ++e) {
        const std::uint64_t q = e < r->result.queries_cumulative_per_epoch.size()
                                    ? r->result.queries_cumulative_per_epoch[e]
                                    : 0;
        os << r->seed << "," << attack_method_name(r->method) << ","
           << (r->is_protected ? "true" : "false") << "," << e << ","
           << format_double(r->result.success_rates_pct[e]) << "," << q << "\n";
      }
    }
  }
}

SweepSummary run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  fs::create_directories(cfg.out_dir);

  Dataset csv_data;
  if (cfg.dataset.is_csv) {
    CsvDataset loaded = load_csv(cfg.dataset.csv_path, cfg.dataset.label_column);
    write_normalization_sidecar(loaded,
                                (fs::path(cfg.out_dir) / "normalization.json").string());
    csv_data = std::move(loaded.dataset);
  }

  SweepSummary summary;
  for (const std::uint64_t seed : cfg.seeds) {
    try {
      SeedArtifacts art = run_seed(cfg, seed, cfg.dataset.is_csv ? &csv_data : nullptr);
      for (const auto& rec : art.runs) write_attack_run_file(cfg, rec);
      summary.efficiency.push_back(art.efficiency);
      for (auto& rec : art.runs) summary.runs.push_back(std::move(rec));
    } catch (const std::exception& e) {
      std::cerr << "[seed " << seed << "] failed: " << e.what() << "\n";
      summary.failures.push_back({seed, e.what()});
    }
  }

  write_summary_csvs(summary, cfg.out_dir);

  nlohmann::json manifest{
      {"config", experiment_config_to_json(cfg)},
      {"config_hash", experiment_config_hash(cfg)},
      {"profile_note", "desk-scale synthetic profile unless overridden by config"},
      {"completed_seeds", summary.efficiency.size()},
  };
  for (const auto& f : summary.failures)
    manifest["failures"].push_back({{"seed", f.seed}, {"message", f.message}});
  std::ofstream os(fs::path(cfg.out_dir) / "manifest.json");
  os << manifest.dump(2) << "\n";
  return summary;
}

SweepSummary summarize(const std::string& run_dir) {
  const fs::path runs = fs::path(run_dir) / "runs";
  if (!fs::exists(runs) || !fs::is_directory(runs))
    throw IoError("summarize: no runs directory under " + run_dir);
  SweepSummary summary;
  std::vector<fs::path> files;
  for (const auto& seed_dir : fs::directory_iterator(runs)) {
    if (!seed_dir.is_directory()) continue;
    for (const auto& f : fs::directory_iterator(seed_dir.path()))
      if (f.path().extension() == ".json") files.push_back(f.path());
  }
  if (files.empty()) throw IoError("summarize: no run artifacts under " + runs.string());
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    std::ifstream is(f);
    nlohmann::json j;
    try {
      is >> j;
      summary.runs.push_back(attack_run_from_json(j));
    } catch (const std::exception& e) {
      throw ParseError("summarize: corrupt artifact " + f.string() + ": " + e.what());
    }
  }
  // efficiency rows are re-read from the experiment's efficiency.csv if present
  const fs::path eff = fs::path(run_dir) / "efficiency.csv";
  if (fs::exists(eff)) {
    std::ifstream is(eff);
    std::string line;
    std::getline(is, line);  // header
    while (std::getline(is, line)) {
      if (line.empty()) continue;
      SeedEfficiency e;
      char* end = nullptr;
      std::vector<std::string> cells;
      std::string cur;
      for (char ch : line) {
        if (ch == ',') {
          cells.push_back(cur);
          cur.clear();
        } else {
          cur.push_back(ch);
        }
      }
      cells.push_back(cur);
      if (cells.size() != 8) throw ParseError("summarize: bad efficiency.csv row: " + line);
      e.seed = std::strtoull(cells[0].c_str(), &end, 10);
      e.fake_label = static_cast<int>(std::strtol(cells[1].c_str(), &end, 10));
      e.report.encryption_efficiency_pct = std::strtod(cells[2].c_str(), &end);
      e.report.decryption_efficiency_pct = std::strtod(cells[3].c_str(), &end);
      e.report.baseline_train_acc_pct = std::strtod(cells[4].c_str(), &end);
      e.report.baseline_test_acc_pct = std::strtod(cells[5].c_str(), &end);
      e.report.pipeline_train_acc_pct = std::strtod(cells[6].c_str(), &end);
      e.report.pipeline_test_acc_pct = std::strtod(cells[7].c_str(), &end);
      summary.efficiency.push_back(e);
    }
  }
  return summary;
}

}  // namespace advenc
