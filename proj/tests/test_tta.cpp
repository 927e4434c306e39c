#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "dfta/tta.hpp"
#include "test_util.hpp"

using namespace dfta;
using namespace dfta::tta;

TEST_CASE("select_top_k ordering and tie-break") {
  CHECK(select_top_k({0.1f, 0.9f, 0.5f, 0.7f}, 2) == std::vector<int>{1, 3});
  CHECK(select_top_k({0.5f, 0.5f, 0.5f, 0.5f}, 3) == std::vector<int>{0, 1, 2});

  auto all = select_top_k({0.3f, 0.1f, 0.9f, 0.2f}, 4);
  std::vector<int> sorted_all = all;
  std::sort(sorted_all.begin(), sorted_all.end());
  CHECK(sorted_all == std::vector<int>{0, 1, 2, 3});

  CHECK_THROWS_AS(select_top_k({0.1f, 0.2f}, 0), std::invalid_argument);
  CHECK_THROWS_AS(select_top_k({0.1f, 0.2f}, 3), std::invalid_argument);
}

TEST_CASE("select_top_k is invariant under strictly increasing transforms") {
  Rng rng(50);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<float> scores;
    for (int i = 0; i < 10; ++i)
      scores.push_back(static_cast<float>(std::round(rng.uniform(-2.0, 2.0) * 4.0) / 4.0));
    for (int k : {1, 3, 10}) {
      auto base = select_top_k(scores, k);
      auto warped = scores;
      for (auto& v : warped) v = std::exp(0.5f * v) + 3.0f;
      CHECK(select_top_k(warped, k) == base);
    }
  }
}

TEST_CASE("classify_with_tta equals a brute-force recomputation") {
  Rng rng(51);
  auto hp = testutil::tiny_hp();
  auto model = classifier::build(hp, 52);
  auto ds = testutil::toy_separable(6, hp.input_w, rng);
  classifier::train(model, ds, 3, 4, 53);

  auto bank = augment::default_bank();
  std::vector<float> planted(bank.size());
  for (std::size_t i = 0; i < planted.size(); ++i)
    planted[i] = static_cast<float>(rng.uniform(-1.0, 1.0));
  auto agent = testutil::planted_dqn(hp.feature_dim, planted);

  TTAConfig cfg;
  cfg.k = 3;
  for (const auto& li : ds) {
    auto res = classify_with_tta(model, agent, li.image, cfg, bank);
    CHECK(res.fused >= 0.0);
    CHECK(res.fused <= 1.0);
    REQUIRE(res.actions.size() == 3);

    // independent recomputation: re-rank, re-apply, re-average
    auto expect_actions = select_top_k(planted, 3);
    CHECK(res.actions == expect_actions);
    double sum = 0.0;
    for (int a : expect_actions) {
      Image augmented = augment::apply(bank[static_cast<std::size_t>(a)], li.image);
      sum += classifier::predict_proba(model, augmented);
    }
    CHECK(res.fused == doctest::Approx(sum / 3.0).epsilon(1e-12));

    // determinism
    auto again = classify_with_tta(model, agent, li.image, cfg, bank);
    CHECK(again.fused == res.fused);
    CHECK(again.actions == res.actions);
  }
}

TEST_CASE("k=1 with identity ranked first reduces to predict_proba") {
  Rng rng(54);
  auto hp = testutil::tiny_hp();
  auto model = classifier::build(hp, 55);
  auto ds = testutil::toy_separable(3, hp.input_w, rng);

  auto bank = augment::default_bank();
  std::vector<float> planted(bank.size(), 0.0f);
  planted[0] = 1.0f;  // identity wins
  auto agent = testutil::planted_dqn(hp.feature_dim, planted);

  TTAConfig cfg;
  cfg.k = 1;
  for (const auto& li : ds) {
    auto res = classify_with_tta(model, agent, li.image, cfg, bank);
    CHECK(res.actions == std::vector<int>{0});
    CHECK(res.fused == classifier::predict_proba(model, li.image));
  }
}

TEST_CASE("include_original mixes the unaugmented score into the mean") {
  Rng rng(56);
  auto hp = testutil::tiny_hp();
  auto model = classifier::build(hp, 57);
  auto ds = testutil::toy_separable(2, hp.input_w, rng);

  auto bank = augment::default_bank();
  std::vector<float> planted(bank.size(), 0.0f);
  planted[3] = 2.0f;  // rotate
  planted[4] = 1.0f;  // solarize
  auto agent = testutil::planted_dqn(hp.feature_dim, planted);

  TTAConfig cfg;
  cfg.k = 2;
  cfg.include_original = true;
  for (const auto& li : ds) {
    auto res = classify_with_tta(model, agent, li.image, cfg, bank);
    double expect = 0.0;
    for (int a : {3, 4})
      expect += classifier::predict_proba(
          model, augment::apply(bank[static_cast<std::size_t>(a)], li.image));
    expect = (expect + classifier::predict_proba(model, li.image)) / 3.0;
    CHECK(res.fused == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("fusion is the arithmetic mean and therefore monotone") {
  Rng rng(60);
  auto hp = testutil::tiny_hp();
  auto model = classifier::build(hp, 61);
  auto ds = testutil::toy_separable(3, hp.input_w, rng);
  auto bank = augment::default_bank();
  std::vector<float> planted(bank.size(), 0.0f);
  planted[1] = 3.0f;
  planted[9] = 2.0f;
  planted[6] = 1.0f;
  auto agent = testutil::planted_dqn(hp.feature_dim, planted);

  for (const auto& li : ds) {
    auto res = classify_with_tta(model, agent, li.image, {3, false}, bank);
    REQUIRE(res.per_action_probs.size() == 3);
    double m = (res.per_action_probs[0] + res.per_action_probs[1] + res.per_action_probs[2]) / 3.0;
    CHECK(res.fused == doctest::Approx(m).epsilon(1e-12));
    // raising every per-augmentation probability raises the fused score
    double bumped = 0.0;
    for (double p : res.per_action_probs) bumped += std::min(1.0, p + 0.05);
    CHECK(bumped / 3.0 > res.fused);
  }
}

TEST_CASE("audit record is one well-formed json line") {
  Rng rng(58);
  auto hp = testutil::tiny_hp();
  auto model = classifier::build(hp, 59);
  auto ds = testutil::toy_separable(1, hp.input_w, rng);
  auto bank = augment::default_bank();
  auto agent = testutil::planted_dqn(hp.feature_dim, std::vector<float>(bank.size(), 0.0f));

  auto state = classifier::feature_map(model, ds[0].image);
  auto scores = agent.action_scores(state);
  auto res = classify_with_tta(model, agent, ds[0].image, {3, false}, bank);
  auto line = audit_record("img_00000", res, scores, bank, ds[0].label);
  CHECK(line.front() == '{');
  CHECK(line.back() == '}');
  CHECK(line.find("\"image\":\"img_00000\"") != std::string::npos);
  CHECK(line.find("\"actions\":[\"identity\"") != std::string::npos);
  CHECK(line.find("\"fused\":") != std::string::npos);
  CHECK(line.find('\n') == std::string::npos);
}
