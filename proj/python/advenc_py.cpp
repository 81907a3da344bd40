// Python bindings for the AdvEncryption core: dataset construction, defender
// training, encrypt/decrypt, efficiency metrics, and the substitute-model
// attacks. Matrices cross the boundary as 2-D float64 numpy arrays.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "advenc/harness.hpp"
#include "advenc/serialize.hpp"

namespace py = pybind11;
using namespace advenc;

namespace {

Matrix matrix_from_numpy(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 2) throw ShapeError("expected a 2-D array");
  Matrix m(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)));
  std::memcpy(m.data(), a.data(), sizeof(double) * m.size());
  return m;
}

py::array_t<double> matrix_to_numpy(const Matrix& m) {
  py::array_t<double> a({m.rows(), m.cols()});
  std::memcpy(a.mutable_data(), m.data(), sizeof(double) * m.size());
  return a;
}

Dataset dataset_from_parts(const py::array_t<double>& features, const std::vector<int>& labels,
                           int num_classes) {
  Dataset ds;
  ds.features = matrix_from_numpy(features);
  ds.labels = labels;
  ds.num_classes = num_classes;
  ds.validate();
  return ds;
}

TrainConfig train_config_from_kwargs(int epochs, int batch_size, double learning_rate,
                                     double beta1, double cyc_weight, int fake_label,
                                     int disc_steps, std::uint64_t seed, std::size_t hidden,
                                     double dropout, double target_enc, double target_dec) {
  TrainConfig cfg;
  cfg.epochs = epochs;
  cfg.batch_size = batch_size;
  cfg.adam = AdamHyper{learning_rate, beta1, 0.999, 1e-8};
  cfg.cyc_weight = cyc_weight;
  cfg.fake_label = fake_label;
  cfg.disc_steps = disc_steps;
  cfg.seed = seed;
  cfg.arch.hidden = hidden;
  cfg.arch.dropout = dropout;
  cfg.target_enc_efficiency_pct = target_enc;
  cfg.target_dec_efficiency_pct = target_dec;
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "AdvEncryption: adversarial encoder/decoder defense and "
            "model-extraction attack harness";

  py::register_exception<Error>(m, "AdvencError");

  py::class_<Dataset>(m, "Dataset")
      .def(py::init(&dataset_from_parts), py::arg("features"), py::arg("labels"),
           py::arg("num_classes"))
      .def_property_readonly("features",
                             [](const Dataset& d) { return matrix_to_numpy(d.features); })
      .def_readonly("labels", &Dataset::labels)
      .def_readonly("num_classes", &Dataset::num_classes)
      .def("__len__", &Dataset::size)
      .def_property_readonly("dim", &Dataset::dim);

  py::class_<Network>(m, "Network")
      .def("save",
           [](const Network& net, const std::string& path) { save_network(net, path); },
           py::arg("path"))
      .def_static("load", &load_network, py::arg("path"))
      .def("predict",
           [](const Network& net, const py::array_t<double>& x) {
             return argmax_rows(net.forward_eval(matrix_from_numpy(x)).output());
           })
      .def("forward",
           [](const Network& net, const py::array_t<double>& x) {
             return matrix_to_numpy(net.forward_eval(matrix_from_numpy(x)).output());
           });

  py::class_<AdvEncModel>(m, "AdvEncModel")
      .def_readonly("fake_label", &AdvEncModel::fake_label)
      .def_readonly("cyc_weight", &AdvEncModel::cyc_weight)
      .def("save",
           [](const AdvEncModel& model, const std::string& dir) {
             save_model(model, dir, "", EfficiencyReport{});
           })
      .def_static("load", &load_model);

  py::class_<EfficiencyReport>(m, "EfficiencyReport")
      .def_readonly("encryption_efficiency_pct", &EfficiencyReport::encryption_efficiency_pct)
      .def_readonly("decryption_efficiency_pct", &EfficiencyReport::decryption_efficiency_pct)
      .def_readonly("baseline_train_acc_pct", &EfficiencyReport::baseline_train_acc_pct)
      .def_readonly("baseline_test_acc_pct", &EfficiencyReport::baseline_test_acc_pct)
      .def_readonly("pipeline_train_acc_pct", &EfficiencyReport::pipeline_train_acc_pct)
      .def_readonly("pipeline_test_acc_pct", &EfficiencyReport::pipeline_test_acc_pct)
      .def("__repr__", [](const EfficiencyReport& r) {
        char buf[256];
        std::snprintf(buf, sizeof buf,
                      "EfficiencyReport(enc=%.3f%%, dec=%.3f%%, baseline_test=%.3f%%, "
                      "pipeline_test=%.3f%%)",
                      r.encryption_efficiency_pct, r.decryption_efficiency_pct,
                      r.baseline_test_acc_pct, r.pipeline_test_acc_pct);
        return std::string(buf);
      });

  py::class_<Oracle>(m, "Oracle")
      .def("label",
           [](const Oracle& o, const py::array_t<double>& rows) {
             return o.label(matrix_from_numpy(rows));
           })
      .def_property_readonly("query_count", &Oracle::query_count)
      .def_property_readonly("tag", &Oracle::tag);

  py::class_<AttackResult>(m, "AttackResult")
      .def_property_readonly("method",
                             [](const AttackResult& r) { return attack_method_name(r.method); })
      .def_readonly("success_rates_pct", &AttackResult::success_rates_pct)
      .def_readonly("max_success_rate_pct", &AttackResult::max_success_rate_pct)
      .def_readonly("queries_total", &AttackResult::queries_total)
      .def_readonly("queries_training", &AttackResult::queries_training)
      .def_readonly("queries_eval", &AttackResult::queries_eval)
      .def_readonly("attack_set_sizes", &AttackResult::attack_set_sizes)
      .def_readonly("seed", &AttackResult::seed);

  m.def(
      "generate_synthetic",
      [](int num_classes, std::size_t dim, std::size_t samples_per_class, double separation,
         double noise_sigma, std::uint64_t seed) {
        SyntheticSpec spec;
        spec.num_classes = num_classes;
        spec.dim = dim;
        spec.samples_per_class = samples_per_class;
        spec.class_center_separation = separation;
        spec.noise_sigma = noise_sigma;
        return generate_synthetic(spec, seed);
      },
      py::arg("num_classes") = 2, py::arg("dim") = 20, py::arg("samples_per_class") = 1500,
      py::arg("separation") = 2.0, py::arg("noise_sigma") = 0.1, py::arg("seed") = 0);

  m.def(
      "load_csv",
      [](const std::string& path, const std::string& label_column) {
        CsvDataset csv = load_csv(path, label_column);
        return py::make_tuple(std::move(csv.dataset), csv.feature_names, csv.column_min,
                              csv.column_max);
      },
      py::arg("path"), py::arg("label_column"),
      "Returns (dataset, feature_names, column_min, column_max).");

  m.def("split", &split, py::arg("dataset"), py::arg("test_fraction"), py::arg("seed"));
  m.def("class_subset", &class_subset, py::arg("dataset"), py::arg("label"));

  m.def(
      "train_baseline",
      [](const Dataset& train, int epochs, int batch_size, double learning_rate, double beta1,
         std::uint64_t seed, std::size_t hidden, double dropout) {
        const TrainConfig cfg = train_config_from_kwargs(epochs, batch_size, learning_rate, beta1,
                                                         1.0, -1, 1, seed, hidden, dropout,
                                                         95.0, 90.0);
        BaselineResult res = train_baseline_classifier(train, cfg);
        return py::make_tuple(std::move(res.net), res.train_accuracy_pct);
      },
      py::arg("train"), py::arg("epochs") = 30, py::arg("batch_size") = 64,
      py::arg("learning_rate") = 1e-3, py::arg("beta1") = 0.9, py::arg("seed") = 0,
      py::arg("hidden") = 64, py::arg("dropout") = 0.2,
      "Returns (network, train_accuracy_pct).");

  m.def(
      "train_advenc",
      [](const Dataset& train, const Network& baseline, int epochs, int batch_size,
         double learning_rate, double beta1, double cyc_weight, int fake_label, int disc_steps,
         std::uint64_t seed, std::size_t hidden, double dropout, double target_enc,
         double target_dec) {
        const TrainConfig cfg =
            train_config_from_kwargs(epochs, batch_size, learning_rate, beta1, cyc_weight,
                                     fake_label, disc_steps, seed, hidden, dropout, target_enc,
                                     target_dec);
        AdvEncTrainResult res = train_advenc(train, cfg, baseline);
        return py::make_tuple(std::move(res.model), res.epochs_run, res.stopped_on_thresholds,
                              res.final_enc_efficiency_pct, res.final_dec_efficiency_pct);
      },
      py::arg("train"), py::arg("baseline"), py::arg("epochs") = 200, py::arg("batch_size") = 64,
      py::arg("learning_rate") = 1e-3, py::arg("beta1") = 0.5, py::arg("cyc_weight") = 1.0,
      py::arg("fake_label") = -1, py::arg("disc_steps") = 1, py::arg("seed") = 0,
      py::arg("hidden") = 64, py::arg("dropout") = 0.2, py::arg("target_enc") = 95.0,
      py::arg("target_dec") = 90.0,
      "Returns (model, epochs_run, stopped_on_thresholds, enc_eff_pct, dec_eff_pct).");

  m.def(
      "encrypt",
      [](const AdvEncModel& model, const py::array_t<double>& x) {
        return matrix_to_numpy(encrypt(model, matrix_from_numpy(x)));
      },
      py::arg("model"), py::arg("x"));
  m.def(
      "decrypt",
      [](const AdvEncModel& model, const py::array_t<double>& x_enc) {
        return matrix_to_numpy(decrypt(model, matrix_from_numpy(x_enc)));
      },
      py::arg("model"), py::arg("x_enc"));

  m.def("encryption_efficiency", &encryption_efficiency, py::arg("baseline"), py::arg("model"),
        py::arg("test"));
  m.def("decryption_efficiency", &decryption_efficiency, py::arg("model"), py::arg("test"));
  m.def("pipeline_accuracy", &pipeline_accuracy, py::arg("model"), py::arg("data"));
  m.def("accuracy", &accuracy, py::arg("net"), py::arg("data"));

  m.def("oracle_from_baseline", &oracle_from_baseline, py::arg("baseline"));
  m.def("oracle_from_advenc", &oracle_from_advenc, py::arg("model"));
  m.def("oracle_from_advenc_plaintext", &oracle_from_advenc_plaintext, py::arg("model"));

  m.def(
      "craft_augmentation",
      [](const Network& substitute, const py::array_t<double>& s,
         const std::vector<int>& oracle_labels, const std::string& method, double step_size) {
        return matrix_to_numpy(craft_augmentation(substitute, matrix_from_numpy(s), oracle_labels,
                                                  attack_method_from_name(method), step_size));
      },
      py::arg("substitute"), py::arg("s"), py::arg("oracle_labels"), py::arg("method"),
      py::arg("step_size"));

  auto attack_config = [](const std::string& method, int rho_max, double step_size,
                          int num_classes, std::size_t hidden, double dropout,
                          int substitute_passes, std::size_t gan_examples_per_class,
                          std::size_t latent_dim, std::uint64_t seed) {
    AttackConfig cfg;
    cfg.method = attack_method_from_name(method);
    cfg.rho_max = rho_max;
    cfg.step_size = step_size;
    cfg.num_classes = num_classes;
    cfg.hidden = hidden;
    cfg.dropout = dropout;
    cfg.substitute_passes = substitute_passes;
    cfg.gan_examples_per_class = gan_examples_per_class;
    cfg.latent_dim = latent_dim;
    cfg.seed = seed;
    return cfg;
  };

  m.def(
      "substitute_train_gradient",
      [attack_config](const Oracle& oracle, const py::array_t<double>& s0,
                      const py::array_t<double>& eval_set, const std::string& method, int rho_max,
                      double step_size, int num_classes, std::size_t hidden, double dropout,
                      int substitute_passes, std::uint64_t seed) {
        const AttackConfig cfg = attack_config(method, rho_max, step_size, num_classes, hidden,
                                               dropout, substitute_passes, 64, 0, seed);
        return substitute_train_gradient(oracle, matrix_from_numpy(s0), cfg,
                                         matrix_from_numpy(eval_set));
      },
      py::arg("oracle"), py::arg("s0"), py::arg("eval_set"), py::arg("method") = "jacobian",
      py::arg("rho_max") = 6, py::arg("step_size") = 0.1, py::arg("num_classes") = 2,
      py::arg("hidden") = 64, py::arg("dropout") = 0.2, py::arg("substitute_passes") = 10,
      py::arg("seed") = 0);

  m.def(
      "substitute_train_gan",
      [attack_config](const Oracle& oracle, const py::array_t<double>& s0,
                      const py::array_t<double>& eval_set, int rho_max, int num_classes,
                      std::size_t hidden, double dropout, int substitute_passes,
                      std::size_t gan_examples_per_class, std::size_t latent_dim,
                      std::uint64_t seed) {
        const AttackConfig cfg = attack_config("gan", rho_max, 0.1, num_classes, hidden, dropout,
                                               substitute_passes, gan_examples_per_class,
                                               latent_dim, seed);
        return substitute_train_gan(oracle, matrix_from_numpy(s0), cfg,
                                    matrix_from_numpy(eval_set));
      },
      py::arg("oracle"), py::arg("s0"), py::arg("eval_set"), py::arg("rho_max") = 6,
      py::arg("num_classes") = 2, py::arg("hidden") = 64, py::arg("dropout") = 0.2,
      py::arg("substitute_passes") = 10, py::arg("gan_examples_per_class") = 64,
      py::arg("latent_dim") = 0, py::arg("seed") = 0);

  m.def(
      "success_rate",
      [](const Network& substitute, const Oracle& oracle, const py::array_t<double>& eval_set) {
        return success_rate(substitute, oracle, matrix_from_numpy(eval_set));
      },
      py::arg("substitute"), py::arg("oracle"), py::arg("eval_set"));

  m.def(
      "run_experiment",
      [](const std::string& config_path, const std::string& out_dir) {
        ExperimentConfig cfg = load_experiment_config(config_path);
        if (!out_dir.empty()) cfg.out_dir = out_dir;
        const SweepSummary summary = run_experiment(cfg);
        py::dict out;
        out["completed_seeds"] = summary.efficiency.size();
        out["failed_seeds"] = summary.failures.size();
        out["runs"] = summary.runs.size();
        return out;
      },
      py::arg("config_path"), py::arg("out_dir") = "",
      "Run a full sweep from a JSON config; returns a small status dict.");

  m.def("derive_seed", &derive_seed, py::arg("master"), py::arg("stream_name"));
}
