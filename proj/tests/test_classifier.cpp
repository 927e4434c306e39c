#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "dfta/augment.hpp"
#include "dfta/classifier.hpp"
#include "test_util.hpp"

using namespace dfta;
using namespace dfta::classifier;

TEST_CASE("training separates the toy set") {
  Rng rng(100);
  auto ds = testutil::toy_separable(20, 16, rng);
  REQUIRE(testutil::linearly_separable_by_mean(ds));  // the probe oracle first

  auto model = build(testutil::tiny_hp(), 1);
  auto log = train(model, ds, 10, 8, 2);
  REQUIRE(log.size() == 10);
  CHECK(log.back().accuracy >= 0.95);
}

TEST_CASE("zero epochs is a no-op") {
  auto model = build(testutil::tiny_hp(), 3);
  std::vector<float> before;
  for (auto* p : model.net.params()) before.insert(before.end(), p->data.begin(), p->data.end());
  Rng rng(4);
  auto ds = testutil::toy_separable(4, 16, rng);
  auto log = train(model, ds, 0, 8, 5);
  CHECK(log.empty());
  std::vector<float> after;
  for (auto* p : model.net.params()) after.insert(after.end(), p->data.begin(), p->data.end());
  CHECK(before == after);
}

TEST_CASE("training is deterministic in the seed") {
  Rng rng(6);
  auto ds = testutil::toy_separable(10, 16, rng);
  auto run = [&](std::uint64_t seed) {
    auto model = build(testutil::tiny_hp(), 7);
    return train(model, ds, 5, 8, seed);
  };
  auto a = run(42), b = run(42), c = run(43);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].mean_loss == b[i].mean_loss);
    CHECK(a[i].accuracy == b[i].accuracy);
  }
  bool any_diff = false;
  for (std::size_t i = 0; i < a.size(); ++i) any_diff |= a[i].mean_loss != c[i].mean_loss;
  CHECK(any_diff);
}

TEST_CASE("single-class and malformed datasets are rejected") {
  auto model = build(testutil::tiny_hp(), 8);
  Rng rng(9);
  auto ds = testutil::toy_separable(5, 16, rng);
  std::vector<LabeledImage> one_class(ds.begin(), ds.begin() + 5);
  CHECK_THROWS_AS(train(model, one_class, 3, 4, 1), std::invalid_argument);
  CHECK_THROWS_AS(train(model, {}, 3, 4, 1), std::invalid_argument);
}

TEST_CASE("predict_proba is a softmax over the two logits") {
  auto model = build(testutil::tiny_hp(), 10);
  Rng rng(11);
  auto ds = testutil::toy_separable(3, 16, rng);

  // zeroed final dense layer -> symmetric logits -> 0.5 everywhere
  auto params = model.net.params();
  params[params.size() - 2]->fill(0.0f);
  params[params.size() - 1]->fill(0.0f);
  for (const auto& li : ds) CHECK(predict_proba(model, li.image) == doctest::Approx(0.5));

  auto model2 = build(testutil::tiny_hp(), 12);
  for (const auto& li : ds) {
    auto ev = evaluate_image(model2, li.image);
    double p_fake = ev.prob_fake;
    CHECK(p_fake >= 0.0);
    CHECK(p_fake <= 1.0);
    // independent recomputation from the logits
    double z0 = ev.logits[0], z1 = ev.logits[1];
    double m = std::max(z0, z1);
    double e0 = std::exp(z0 - m), e1 = std::exp(z1 - m);
    CHECK(p_fake == doctest::Approx(e1 / (e0 + e1)).epsilon(1e-9));
    CHECK(p_fake + e0 / (e0 + e1) == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("feature map contract") {
  auto hp = testutil::tiny_hp(16, 24);
  auto model = build(hp, 13);
  Rng rng(14);
  auto ds = testutil::toy_separable(2, 16, rng);
  auto f = feature_map(model, ds[0].image);
  CHECK(f.size() == 24);
  for (float v : f) CHECK(v >= 0.0f);  // post-relu
  CHECK(feature_map(model, ds[0].image) == f);

  // identity augmentation cannot move the feature map
  auto same = augment::apply({augment::Op::identity, 0.0}, ds[0].image);
  CHECK(feature_map(model, same) == f);

  Image wrong(8, 8, 3);
  CHECK_THROWS_WITH_AS(feature_map(model, wrong), doctest::Contains("does not match"),
                       std::invalid_argument);
}

TEST_CASE("loss_of matches cross entropy of the forward logits") {
  auto model = build(testutil::tiny_hp(), 15);
  Rng rng(16);
  auto ds = testutil::toy_separable(4, 16, rng);
  for (const auto& li : ds) {
    double l = loss_of(model, li);
    CHECK(l >= 0.0);
    auto ev = evaluate_image(model, li.image);
    CHECK(l == nn::cross_entropy(ev.logits, li.label));
  }

  // symmetric logits -> ln 2
  auto params = model.net.params();
  params[params.size() - 2]->fill(0.0f);
  params[params.size() - 1]->fill(0.0f);
  CHECK(loss_of(model, ds[0]) == doctest::Approx(std::log(2.0)).epsilon(1e-9));
}

TEST_CASE("training loss is non-increasing on the separable set for most seeds") {
  int ok = 0;
  const int n_seeds = 10;
  for (int seed = 0; seed < n_seeds; ++seed) {
    Rng rng(200 + static_cast<std::uint64_t>(seed));
    auto ds = testutil::toy_separable(12, 16, rng);
    auto model = build(testutil::tiny_hp(), 300 + static_cast<std::uint64_t>(seed));
    auto log = train(model, ds, 6, 12, 400 + static_cast<std::uint64_t>(seed));
    bool monotone = true;
    for (std::size_t i = 1; i < log.size(); ++i)
      monotone &= log[i].mean_loss <= log[i - 1].mean_loss + 1e-9;
    ok += monotone;
  }
  CHECK(ok >= 8);  // 80% of seeds
}

TEST_CASE("classifier checkpoints round-trip") {
  Rng rng(17);
  auto ds = testutil::toy_separable(6, 16, rng);
  auto model = build(testutil::tiny_hp(), 18);
  train(model, ds, 2, 4, 19);
  save(model, "test_classifier.agp");
  auto back = load("test_classifier.agp");
  CHECK(back.hp.feature_dim == model.hp.feature_dim);
  CHECK(back.train_steps == model.train_steps);
  for (const auto& li : ds) {
    CHECK(predict_proba(back, li.image) == predict_proba(model, li.image));
    CHECK(feature_map(back, li.image) == feature_map(model, li.image));
  }
  std::filesystem::remove("test_classifier.agp");
}

TEST_CASE("training log csv shape") {
  std::vector<EpochLog> log = {{0, 0.5, 0.75}, {1, 0.25, 0.9}};
  auto csv = training_log_csv(log);
  CHECK(csv.find("epoch,mean_loss,accuracy\n") == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
}
