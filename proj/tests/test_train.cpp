#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "rgbdtrack/net/train.hpp"
#include "testutil.hpp"

using namespace rgbdtrack;
using namespace rgbdtrack::net;

namespace {

NetConfig small_config() {
  NetConfig cfg;
  cfg.channels = 16;
  cfg.heads = 2;
  cfg.ffn_width = 32;
  cfg.encoder_layers = 1;
  cfg.fusion_layers = 1;
  cfg.decoder_layers = 1;
  cfg.search_resolution = 64;    // 4x4 grid
  cfg.template_resolution = 32;  // 2x2 grid
  return cfg;
}

std::vector<TrainingPair> small_pairs(const NetConfig& cfg, int per_sequence = 2) {
  auto configs = synth::make_default_configs(2, 314);
  return make_training_pairs(configs, cfg, per_sequence, 515);
}

}  // namespace

TEST_CASE("training pairs are deterministic and well-formed") {
  const NetConfig cfg = small_config();
  const auto a = small_pairs(cfg);
  const auto b = small_pairs(cfg);
  REQUIRE(a.size() == 4);
  REQUIRE(b.size() == a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].rgb_search.shape() == std::vector<int>{3, 64, 64});
    CHECK(a[i].rgb_template.shape() == std::vector<int>{3, 32, 32});
    CHECK(a[i].target_box == b[i].target_box);
    for (std::int64_t j = 0; j < a[i].rgb_search.size(); ++j) {
      CHECK(a[i].rgb_search[j] == b[i].rgb_search[j]);
    }
    // target stays inside the crop and keeps positive extent
    CHECK(a[i].target_box[2] > 0.0);
    CHECK(a[i].target_box[3] > 0.0);
    CHECK(a[i].target_box[0] > -0.5);
    CHECK(a[i].target_box[0] + a[i].target_box[2] < 1.5);
  }
}

TEST_CASE("training_step returns a finite nonnegative loss and updates parameters") {
  TrackerModel model(small_config(), 27);
  const auto pairs = small_pairs(small_config());
  std::vector<nn::Var> params;
  for (const auto& [name, var] : model.params().all()) params.push_back(var);
  nn::Adam opt(params, {.lr = 1e-3});

  const nn::Tensor before = model.params().get("fusion.proj.w")->value;
  const double loss = training_step(model, pairs, opt);
  CHECK(std::isfinite(loss));
  CHECK(loss >= 0.0);
  const nn::Tensor& after = model.params().get("fusion.proj.w")->value;
  bool changed = false;
  for (std::int64_t i = 0; i < before.size(); ++i) changed = changed || before[i] != after[i];
  CHECK(changed);

  CHECK_THROWS_AS(training_step(model, {}, opt), InputError);
}

TEST_CASE("zero learning rate leaves every parameter unchanged") {
  TrackerModel model(small_config(), 29);
  const auto pairs = small_pairs(small_config());
  std::vector<nn::Var> params;
  std::vector<nn::Tensor> before;
  for (const auto& [name, var] : model.params().all()) {
    params.push_back(var);
    before.push_back(var->value);
  }
  nn::Adam opt(params, {.lr = 0.0});
  training_step(model, pairs, opt);
  std::size_t k = 0;
  for (const auto& [name, var] : model.params().all()) {
    for (std::int64_t i = 0; i < var->value.size(); ++i) {
      REQUIRE(var->value[i] == before[k][i]);
    }
    ++k;
  }
}

TEST_CASE("a few steps reduce the loss") {
  TrackerModel model(small_config(), 31);
  const auto pairs = small_pairs(small_config());
  const auto report = fit(model, pairs, 30, {.lr = 2e-3});
  REQUIRE(report.losses.size() == 30);
  CHECK(report.losses.back() < report.losses.front());
  CHECK(std::isfinite(report.mean_iou));
}

TEST_CASE("default learning rates per profile") {
  CHECK(default_learning_rate(Profile::Paper) == doctest::Approx(1e-5));
  CHECK(default_learning_rate(Profile::Toy) == doctest::Approx(1e-3));
}
