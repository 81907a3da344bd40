#include <filesystem>
#include <fstream>

#include "advenc/harness.hpp"
#include "doctest.h"

using namespace advenc;
namespace fs = std::filesystem;

namespace {

// Minutes-to-seconds scale: tiny data and networks, one seed.
ExperimentConfig tiny_config(const std::string& out_dir) {
  ExperimentConfig cfg;
  cfg.dataset.synthetic.num_classes = 2;
  cfg.dataset.synthetic.dim = 6;
  cfg.dataset.synthetic.samples_per_class = 60;
  cfg.dataset.synthetic.class_center_separation = 1.5;
  cfg.dataset.synthetic.noise_sigma = 0.08;
  cfg.test_fraction = 1.0 / 3.0;
  cfg.defender.baseline_epochs = 3;
  cfg.defender.train.epochs = 2;
  cfg.defender.train.batch_size = 16;
  cfg.defender.train.seed = 0;
  cfg.defender.train.arch.hidden = 8;
  cfg.defender.train.adam = AdamHyper{1e-3, 0.9, 0.999, 1e-8};
  cfg.attack.methods = {AttackMethod::Fgsm};
  cfg.attack.base.rho_max = 2;
  cfg.attack.base.hidden = 8;
  cfg.attack.base.substitute_passes = 2;
  cfg.attack.s0_size = 6;
  cfg.attack.eval_size = 12;
  cfg.seeds = {4};
  cfg.out_dir = out_dir;
  return cfg;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  REQUIRE(is.good());
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("config json round trip with defaults and overrides") {
  const nlohmann::json j = {
      {"dataset", {{"type", "synthetic"}, {"dim", 10}, {"samples_per_class", 50}}},
      {"defender", {{"epochs", 7}, {"cyc_weight", 4.0}, {"hidden", 16}}},
      {"attack", {{"methods", {"fgv", "gan"}}, {"rho_max", 3}, {"s0_size", 9}}},
      {"seeds", {11, 12}},
      {"out_dir", "x"},
  };
  const ExperimentConfig cfg = experiment_config_from_json(j);
  CHECK(cfg.dataset.synthetic.dim == 10);
  CHECK(cfg.dataset.synthetic.num_classes == 2);  // default survives
  CHECK(cfg.defender.train.epochs == 7);
  CHECK(cfg.defender.train.cyc_weight == 4.0);
  CHECK(cfg.attack.methods == std::vector<AttackMethod>{AttackMethod::Fgv, AttackMethod::Gan});
  CHECK(cfg.attack.base.rho_max == 3);
  CHECK(cfg.attack.s0_size == 9);
  CHECK(cfg.seeds == std::vector<std::uint64_t>{11, 12});

  const nlohmann::json echoed = experiment_config_to_json(cfg);
  const ExperimentConfig again = experiment_config_from_json(echoed);
  CHECK(experiment_config_hash(cfg) == experiment_config_hash(again));
}

TEST_CASE("config validation rejects bad values") {
  nlohmann::json j = {{"seeds", nlohmann::json::array()}};
  CHECK_THROWS_AS(experiment_config_from_json(j), ConfigError);
  j = {{"attack", {{"methods", nlohmann::json::array()}}}};
  CHECK_THROWS_AS(experiment_config_from_json(j), ConfigError);
  j = {{"test_fraction", 1.5}};
  CHECK_THROWS_AS(experiment_config_from_json(j), ConfigError);
  j = {{"attack", {{"methods", {"warp"}}}}};
  CHECK_THROWS_AS(experiment_config_from_json(j), ConfigError);
}

TEST_CASE("run_experiment: file layout and counting for 1 seed, 1 method, 2 conditions") {
  const fs::path dir = fs::temp_directory_path() / "advenc_tiny_run";
  fs::remove_all(dir);
  const ExperimentConfig cfg = tiny_config(dir.string());
  const SweepSummary summary = run_experiment(cfg);

  CHECK(summary.failures.empty());
  CHECK(summary.runs.size() == 2);
  CHECK(summary.efficiency.size() == 1);
  CHECK(fs::exists(dir / "runs" / "4" / "fgsm_unprotected.json"));
  CHECK(fs::exists(dir / "runs" / "4" / "fgsm_protected.json"));
  CHECK(fs::exists(dir / "efficiency.csv"));
  CHECK(fs::exists(dir / "summary_mean.csv"));
  CHECK(fs::exists(dir / "summary_max.csv"));
  CHECK(fs::exists(dir / "attack_epochs.csv"));
  CHECK(fs::exists(dir / "manifest.json"));

  std::size_t json_files = 0;
  for (const auto& f : fs::directory_iterator(dir / "runs" / "4")) {
    if (f.path().extension() == ".json") ++json_files;
  }
  CHECK(json_files == 2);
  fs::remove_all(dir);
}

TEST_CASE("run_experiment: rerun with the same config is byte identical") {
  const fs::path dir1 = fs::temp_directory_path() / "advenc_det_run1";
  const fs::path dir2 = fs::temp_directory_path() / "advenc_det_run2";
  fs::remove_all(dir1);
  fs::remove_all(dir2);
  ExperimentConfig cfg = tiny_config(dir1.string());
  run_experiment(cfg);
  cfg.out_dir = dir2.string();
  run_experiment(cfg);
  for (const char* name :
       {"efficiency.csv", "summary_mean.csv", "summary_max.csv", "attack_epochs.csv"}) {
    CHECK(slurp(dir1 / name) == slurp(dir2 / name));
  }
  CHECK(slurp(dir1 / "runs" / "4" / "fgsm_protected.json") ==
        slurp(dir2 / "runs" / "4" / "fgsm_protected.json"));
  fs::remove_all(dir1);
  fs::remove_all(dir2);
}

TEST_CASE("summarize: aggregates recompute exactly from the per-run artifacts") {
  const fs::path dir = fs::temp_directory_path() / "advenc_sum_run";
  fs::remove_all(dir);
  ExperimentConfig cfg = tiny_config(dir.string());
  cfg.seeds = {4, 5};
  const SweepSummary direct = run_experiment(cfg);
  const SweepSummary loaded = summarize(dir.string());
  REQUIRE(loaded.runs.size() == direct.runs.size());

  const auto mean = loaded.mean_success_per_epoch();
  // independent recompute from the raw JSON artifacts
  for (const auto& [key, values] : mean) {
    for (std::size_t e = 0; e < values.size(); ++e) {
      double sum = 0.0;
      std::size_t n = 0;
      for (const std::uint64_t seed : cfg.seeds) {
        const fs::path p = dir / "runs" / std::to_string(seed) /
                           (key.first + std::string("_") +
                            (key.second ? "protected" : "unprotected") + ".json");
        nlohmann::json j;
        std::ifstream is(p);
        is >> j;
        sum += j.at("success_rates_pct")[e].get<double>();
        ++n;
      }
      CHECK(values[e] == doctest::Approx(sum / static_cast<double>(n)).epsilon(1e-12));
    }
  }

  // max per seed equals the max over that run's epoch list
  for (const auto& [key, per_seed] : loaded.max_success_per_seed()) {
    for (const auto& [seed, mx] : per_seed) {
      const fs::path p = dir / "runs" / std::to_string(seed) /
                         (key.first + std::string("_") +
                          (key.second ? "protected" : "unprotected") + ".json");
      nlohmann::json j;
      std::ifstream is(p);
      is >> j;
      double best = 0.0;
      for (const auto& v : j.at("success_rates_pct")) best = std::max(best, v.get<double>());
      CHECK(mx == best);
    }
  }
  fs::remove_all(dir);
}

TEST_CASE("summarize: singleton mean equals the run itself") {
  const fs::path dir = fs::temp_directory_path() / "advenc_singleton";
  fs::remove_all(dir);
  const ExperimentConfig cfg = tiny_config(dir.string());
  run_experiment(cfg);
  const SweepSummary loaded = summarize(dir.string());
  const auto mean = loaded.mean_success_per_epoch();
  for (const auto& rec : loaded.runs) {
    const auto& m = mean.at({attack_method_name(rec.method), rec.is_protected});
    CHECK(m == rec.result.success_rates_pct);
  }
  fs::remove_all(dir);
}

TEST_CASE("summarize: empty or missing directories are errors") {
  const fs::path dir = fs::temp_directory_path() / "advenc_empty_sum";
  fs::remove_all(dir);
  CHECK_THROWS_AS(summarize(dir.string()), IoError);
  fs::create_directories(dir / "runs");
  CHECK_THROWS_AS(summarize(dir.string()), IoError);
  fs::remove_all(dir);
}

TEST_CASE("attack run record json round trip") {
  AttackRunRecord rec;
  rec.seed = 9;
  rec.method = AttackMethod::Fgv;
  rec.is_protected = true;
  rec.oracle_tag = "advenc-encrypted";
  rec.result.method = rec.method;
  rec.result.seed = 9;
  rec.result.success_rates_pct = {50.0, 62.5};
  rec.result.max_success_rate_pct = 62.5;
  rec.result.queries_total = 123;
  rec.result.queries_training = 100;
  rec.result.queries_eval = 23;
  rec.result.queries_cumulative_per_epoch = {60, 123};
  rec.result.attack_set_sizes = {20, 40};
  const AttackRunRecord back = attack_run_from_json(attack_run_to_json(rec));
  CHECK(back.seed == rec.seed);
  CHECK(back.method == rec.method);
  CHECK(back.is_protected == rec.is_protected);
  CHECK(back.result.success_rates_pct == rec.result.success_rates_pct);
  CHECK(back.result.queries_total == rec.result.queries_total);
  CHECK(back.result.attack_set_sizes == rec.result.attack_set_sizes);
}
