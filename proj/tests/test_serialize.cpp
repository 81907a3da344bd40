#include <cstdio>
#include <filesystem>
#include <fstream>

#include "advenc/advenc.hpp"
#include "advenc/serialize.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace advenc;
using namespace advenc::testutil;

TEST_CASE("network round trip is bit exact, including adam state") {
  Rng rng(31);
  Network net = every_kind_network(4, rng);
  net.train();
  // take a few adam steps so moments are non-trivial
  Rng data_rng(32);
  for (int i = 0; i < 3; ++i) {
    const Matrix x = random_matrix(3, 4, data_rng, 0.0, 1.0);
    const ForwardTrace t = net.forward(x);
    const LossResult ce = loss_cross_entropy(t.output(), {0, 1, 2});
    net.adam_step(net.backward(t, ce.grad), AdamHyper{1e-3, 0.9, 0.999, 1e-8});
  }
  const auto path = (std::filesystem::temp_directory_path() / "advenc_net.bin").string();
  save_network(net, path);
  const Network loaded = load_network(path);
  std::remove(path.c_str());

  CHECK(loaded.params_equal(net));
  CHECK(loaded.adam_step_count() == net.adam_step_count());
  CHECK(loaded.mode() == net.mode());
  CHECK(loaded.seed_lineage() == net.seed_lineage());
  for (std::size_t i = 0; i < net.layer_count(); ++i) {
    CHECK(loaded.specs()[i].kind == net.specs()[i].kind);
    if (net.specs()[i].kind != LayerKind::Linear) continue;
    CHECK(loaded.adam_m(i, false) == net.adam_m(i, false));
    CHECK(loaded.adam_v(i, false) == net.adam_v(i, false));
    CHECK(loaded.adam_m(i, true) == net.adam_m(i, true));
    CHECK(loaded.adam_v(i, true) == net.adam_v(i, true));
  }

  // identical dropout stream state: train-mode forwards agree after reload
  Network a = net;
  Network b = loaded;
  a.train();
  b.train();
  const Matrix x = random_matrix(2, 4, data_rng, 0.0, 1.0);
  CHECK(a.forward(x).output() == b.forward(x).output());
}

TEST_CASE("loading garbage fails with a structured error") {
  const auto path = (std::filesystem::temp_directory_path() / "advenc_bad.bin").string();
  {
    std::ofstream os(path, std::ios::binary);
    os << "not a network";
  }
  CHECK_THROWS_AS(load_network(path), IoError);
  std::remove(path.c_str());
  CHECK_THROWS_AS(load_network("/nonexistent/advenc.bin"), IoError);
}

TEST_CASE("model save/load round trip with manifest") {
  Rng rng(8);
  AdvEncModel model;
  DefenderNetConfig arch{8, 0.1, 0.2};
  Rng r1(1), r2(2), r3(3), r4(4);
  model.encoder = Network(coder_arch(5, arch), r1, "t/enc");
  model.decoder = Network(coder_arch(5, arch), r2, "t/dec");
  model.discriminator = Network(discriminator_arch(5, arch), r3, "t/disc");
  model.classifier = Network(classifier_arch(5, 2, arch), r4, "t/clf");
  model.fake_label = 1;
  model.cyc_weight = 2.5;

  const auto dir = (std::filesystem::temp_directory_path() / "advenc_model_rt").string();
  EfficiencyReport report;
  report.encryption_efficiency_pct = 97.5;
  save_model(model, dir, "cafebabe", report);
  const AdvEncModel loaded = load_model(dir);
  std::filesystem::remove_all(dir);

  CHECK(loaded.fake_label == 1);
  CHECK(loaded.cyc_weight == 2.5);
  CHECK(loaded.encoder.params_equal(model.encoder));
  CHECK(loaded.decoder.params_equal(model.decoder));
  CHECK(loaded.discriminator.params_equal(model.discriminator));
  CHECK(loaded.classifier.params_equal(model.classifier));
}
