#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "advenc/attacks.hpp"
#include "nlohmann/json.hpp"

namespace advenc {

struct DatasetSource {
  bool is_csv = false;
  SyntheticSpec synthetic;
  std::string csv_path;
  std::string label_column;
};

struct DefenderConfig {
  int baseline_epochs = 60;
  TrainConfig train;  // epochs field budgets the adversarial phase
};

struct AttackSweepConfig {
  std::vector<AttackMethod> methods{AttackMethod::Jacobian, AttackMethod::Fgsm,
                                    AttackMethod::Fgv, AttackMethod::Gan};
  AttackConfig base;             // per-method seed/method fields are filled per run
  std::size_t s0_size = 50;      // attacker's initial eavesdropped slice
  std::size_t eval_size = 500;   // success-rate holdout, disjoint from s0
  bool plaintext_oracle = false; // query interface switch for the protected arm
};

struct ExperimentConfig {
  DatasetSource dataset;
  double test_fraction = 1.0 / 3.0;
  DefenderConfig defender;
  AttackSweepConfig attack;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::string out_dir = "runs_out";
  bool save_models = false;

  void validate() const;
};

ExperimentConfig experiment_config_from_json(const nlohmann::json& j);
ExperimentConfig load_experiment_config(const std::string& path);
nlohmann::json experiment_config_to_json(const ExperimentConfig& cfg);
std::string experiment_config_hash(const ExperimentConfig& cfg);

struct AttackRunRecord {
  std::uint64_t seed = 0;
  AttackMethod method = AttackMethod::Jacobian;
  bool is_protected = false;
  std::string oracle_tag;
  AttackResult result;
};

struct SeedEfficiency {
  std::uint64_t seed = 0;
  int fake_label = 0;
  EfficiencyReport report;
};

struct SeedFailure {
  std::uint64_t seed = 0;
  std::string message;
};

// All per-run artifacts of a sweep plus aggregates derived purely from them.
struct SweepSummary {
  std::vector<AttackRunRecord> runs;
  std::vector<SeedEfficiency> efficiency;
  std::vector<SeedFailure> failures;

  // mean success rate per epoch across seeds, keyed by (method, protected)
  std::map<std::pair<std::string, bool>, std::vector<double>> mean_success_per_epoch() const;
  // per-run maximum, keyed by (method, protected) -> (seed, max) ascending by seed
  std::map<std::pair<std::string, bool>, std::vector<std::pair<std::uint64_t, double>>>
  max_success_per_seed() const;
};

nlohmann::json attack_run_to_json(const AttackRunRecord& rec);
AttackRunRecord attack_run_from_json(const nlohmann::json& j);

// Full sweep: per seed, build data, train the defender pair, run every
// attack method against both oracles, then write per-run JSON and the
// aggregate CSVs. A failing seed is recorded and the others proceed.
SweepSummary run_experiment(const ExperimentConfig& cfg);

// Pure aggregation over an existing run directory; executes no models.
SweepSummary summarize(const std::string& run_dir);

// summary_mean.csv, summary_max.csv, efficiency.csv, attack_epochs.csv
void write_summary_csvs(const SweepSummary& summary, const std::string& out_dir);

// exact round-trip double formatting used in all CSV output
std::string format_double(double v);

}  // namespace advenc
