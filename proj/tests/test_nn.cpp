#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "dfta/nn.hpp"
#include "gradcheck.hpp"

using namespace dfta::nn;
using dfta::Rng;

TEST_CASE("dense identity map") {
  Network<float> net({3});
  auto* d = net.add<Dense<float>>(3, 3);
  for (int i = 0; i < 3; ++i) d->w[static_cast<std::size_t>(i * 3 + i)] = 1.0f;
  Tensor<float> in({1, 3}, {1.0f, 2.0f, 3.0f});
  auto out = net.forward(in, false);
  CHECK(out[0] == doctest::Approx(1.0f));
  CHECK(out[1] == doctest::Approx(2.0f));
  CHECK(out[2] == doctest::Approx(3.0f));
}

TEST_CASE("relu clamps negatives") {
  Relu<float> relu;
  Tensor<float> in({1, 3}, {-1.0f, 0.0f, 2.0f});
  auto out = relu.forward(in, false, nullptr);
  CHECK(out[0] == 0.0f);
  CHECK(out[1] == 0.0f);
  CHECK(out[2] == 2.0f);
}

TEST_CASE("softmax of equal logits is uniform") {
  Softmax<float> sm;
  Tensor<float> in({1, 2}, {0.0f, 0.0f});
  auto out = sm.forward(in, false, nullptr);
  CHECK(out[0] == doctest::Approx(0.5));
  CHECK(out[1] == doctest::Approx(0.5));
}

TEST_CASE("softmax outputs a probability vector") {
  Rng rng(11);
  Softmax<float> sm;
  for (int trial = 0; trial < 50; ++trial) {
    Tensor<float> in({1, 7});
    for (auto& v : in.data) v = static_cast<float>(rng.uniform(-8.0, 8.0));
    auto out = sm.forward(in, false, nullptr);
    double sum = 0.0;
    for (auto v : out.data) {
      CHECK(v >= 0.0f);
      sum += v;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("cross entropy examples") {
  Tensor<float> uniform({2}, {0.0f, 0.0f});
  CHECK(cross_entropy(uniform, 0) == doctest::Approx(std::log(2.0)).epsilon(1e-9));

  Tensor<float> confident({2}, {20.0f, -20.0f});
  CHECK(cross_entropy(confident, 0) < 1e-8);

  // independent softmax-then-log evaluation
  Tensor<float> logits({2}, {1.0f, 0.3f});
  double p1 = std::exp(0.3) / (std::exp(1.0) + std::exp(0.3));
  CHECK(cross_entropy(logits, 1) == doctest::Approx(-std::log(p1)).epsilon(1e-6));

  CHECK_THROWS_AS(cross_entropy(logits, 2), std::invalid_argument);
  CHECK_THROWS_AS(cross_entropy(logits, -1), std::invalid_argument);
  CHECK(cross_entropy(logits, 0) >= 0.0);
}

TEST_CASE("cross entropy batch gradient sums to zero per row") {
  Rng rng(5);
  Tensor<float> logits({4, 3});
  for (auto& v : logits.data) v = static_cast<float>(rng.uniform(-2.0, 2.0));
  Tensor<float> grad;
  double loss = cross_entropy_batch(logits, {0, 2, 1, 1}, &grad);
  CHECK(loss >= 0.0);
  for (int i = 0; i < 4; ++i) {
    float row = 0.0f;
    for (int j = 0; j < 3; ++j) row += grad[static_cast<std::size_t>(i * 3 + j)];
    CHECK(row == doctest::Approx(0.0f).epsilon(1e-6));
  }
}

TEST_CASE("forward rejects shape mismatch naming the layer") {
  Network<float> net({4});
  net.add<Dense<float>>(4, 2);
  Tensor<float> bad({1, 5});
  CHECK_THROWS_WITH_AS(net.forward(bad, false), doctest::Contains("network input"),
                       std::invalid_argument);

  Network<float> net2({4});
  net2.add<Dense<float>>(3, 2);  // declared input does not match first layer
  Tensor<float> in({1, 4});
  CHECK_THROWS_WITH_AS(net2.forward(in, false), doctest::Contains("dense(3->2)"),
                       std::invalid_argument);
}

TEST_CASE("backward rejects a stale or missing cache") {
  Network<float> net({3});
  net.add<Dense<float>>(3, 2);
  Rng rng(1);
  init_network(net, rng);
  Tensor<float> in({1, 3}, {0.1f, 0.2f, 0.3f});

  std::vector<LayerCache<float>> caches;
  net.forward(in, /*train=*/false, &caches);  // infer-mode cache is not enough
  Tensor<float> g({1, 2}, {1.0f, 0.0f});
  CHECK_THROWS_AS(net.backward(g, caches), std::invalid_argument);

  std::vector<LayerCache<float>> empty;
  CHECK_THROWS_AS(net.backward(g, empty), std::invalid_argument);
}

TEST_CASE("zero upstream gradient produces zero parameter gradients") {
  Network<float> net({4});
  net.add<Dense<float>>(4, 6);
  net.add<Relu<float>>();
  net.add<Dense<float>>(6, 2);
  Rng rng(3);
  init_network(net, rng);

  Tensor<float> in({2, 4});
  for (auto& v : in.data) v = static_cast<float>(rng.uniform(-1.0, 1.0));
  std::vector<LayerCache<float>> caches;
  net.forward(in, true, &caches);
  net.zero_grad();
  net.backward(Tensor<float>({2, 2}), caches);
  for (auto* g : net.grads())
    for (auto v : g->data) CHECK(v == 0.0f);
}

TEST_CASE("identical seeded passes give bit-identical gradients") {
  auto run = [] {
    Rng rng(42);
    Network<float> net({1, 8, 8});
    net.add<Conv2d<float>>(1, 2, 3, 1, 1);
    net.add<Relu<float>>();
    net.add<MaxPool2d<float>>(2);
    net.add<Dense<float>>(2 * 4 * 4, 2);
    init_network(net, rng);
    Tensor<float> in({2, 1, 8, 8});
    for (auto& v : in.data) v = static_cast<float>(rng.uniform(0.0, 1.0));
    std::vector<LayerCache<float>> caches;
    auto logits = net.forward(in, true, &caches);
    Tensor<float> dlogits;
    cross_entropy_batch(logits, {0, 1}, &dlogits);
    net.zero_grad();
    net.backward(dlogits, caches);
    std::vector<float> flat;
    for (auto* g : net.grads()) flat.insert(flat.end(), g->data.begin(), g->data.end());
    return flat;
  };
  auto a = run();
  auto b = run();
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("gradients match finite differences per layer kind") {
  const LayerKind kinds[] = {LayerKind::dense,     LayerKind::conv2d,
                             LayerKind::relu,      LayerKind::maxpool2d,
                             LayerKind::batchnorm, LayerKind::softmax};
  for (auto kind : kinds) {
    CAPTURE(to_string(kind));
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      auto rep = gradcheck::check_kind<double>(kind, 1000 + seed, 1e-5);
      CHECK(rep.checked > 0);
      CHECK(rep.max_rel_err < 1e-3);
    }
  }
}

TEST_CASE("full stack gradient check with cross-entropy loss") {
  Rng rng(77);
  Network<double> net({2, 8, 8});
  net.add<Conv2d<double>>(2, 3, 3, 1, 1);
  net.add<Relu<double>>();
  net.add<MaxPool2d<double>>(2);
  net.add<BatchNorm<double>>(3 * 4 * 4);
  net.add<Dense<double>>(3 * 4 * 4, 5);
  net.add<Relu<double>>();
  net.add<Dense<double>>(5, 2);
  init_network(net, rng);

  auto input = gradcheck::kink_safe_input<double>({4, 2, 8, 8}, rng);
  std::vector<int> labels = {0, 1, 1, 0};
  std::vector<LayerCache<double>> caches;
  auto logits = net.forward(input, true, &caches);
  Tensor<double> dlogits;
  cross_entropy_batch(logits, labels, &dlogits);
  net.zero_grad();
  net.backward(dlogits, caches);

  auto eval = [&] { return cross_entropy_batch(net.forward(input, true, nullptr), labels); };
  double h = 1e-5, max_err = 0.0;
  auto ps = net.params();
  auto gs = net.grads();
  for (std::size_t k = 0; k < ps.size(); ++k) {
    for (std::size_t i = 0; i < ps[k]->size(); ++i) {
      double keep = (*ps[k])[i];
      (*ps[k])[i] = keep + h;
      double lp = eval();
      (*ps[k])[i] = keep - h;
      double lm = eval();
      (*ps[k])[i] = keep;
      max_err = std::max(max_err, gradcheck::rel_err((*gs[k])[i], (lp - lm) / (2 * h)));
    }
  }
  CHECK(max_err < 1e-3);
}

TEST_CASE("adam fixed point and step counting") {
  Tensor<float> p({3}, {1.0f, -2.0f, 0.5f});
  Tensor<float> g({3});
  AdamState<float> st;
  st.weight_decay = 0.0f;
  auto before = p.data;
  adam_step(st, {&p}, {&g});
  CHECK(p.data == before);  // zero gradient, zero decay
  CHECK(st.step == 1);

  st.step = 5;
  adam_step(st, {&p}, {&g});
  CHECK(st.step == 6);
}

TEST_CASE("adam single-parameter first step matches hand-rolled oracle") {
  for (double gv : {0.3, -1.7, 42.0}) {
    Tensor<float> p({1}, {2.0f});
    Tensor<float> g({1}, {static_cast<float>(gv)});
    AdamState<float> st;
    st.weight_decay = 0.0f;

    // one-step Adam by hand
    double m = (1 - 0.9) * gv, v = (1 - 0.999) * gv * gv;
    double mhat = m / (1 - 0.9), vhat = v / (1 - 0.999);
    double expect = 2.0 - 0.001 * mhat / (std::sqrt(vhat) + 1e-8);

    adam_step(st, {&p}, {&g});
    CHECK(p[0] == doctest::Approx(expect).epsilon(1e-6));
    CHECK(std::abs(2.0f - p[0]) == doctest::Approx(0.001).epsilon(1e-3));
  }
}

TEST_CASE("adam rejects non-finite gradients") {
  Tensor<float> p({2}, {1.0f, 1.0f});
  Tensor<float> g({2}, {0.0f, std::numeric_limits<float>::quiet_NaN()});
  AdamState<float> st;
  CHECK_THROWS_AS(adam_step(st, {&p}, {&g}), std::invalid_argument);
}

TEST_CASE("adam decoupled weight decay shrinks parameters") {
  Tensor<float> p({1}, {1.0f});
  Tensor<float> g({1});
  AdamState<float> st;
  st.weight_decay = 0.01f;
  adam_step(st, {&p}, {&g});
  CHECK(p[0] == doctest::Approx(1.0f - 0.001f * 0.01f));
}

TEST_CASE("checkpoint round-trips networks, meta, and step counter") {
  Rng rng(9);
  Network<float> net({1, 8, 8});
  net.add<Conv2d<float>>(1, 2, 3, 1, 1);
  net.add<Relu<float>>();
  net.add<MaxPool2d<float>>(2);
  net.add<BatchNorm<float>>(2 * 4 * 4);
  net.add<Dense<float>>(2 * 4 * 4, 2);
  init_network(net, rng);
  for (auto* s : net.state())
    for (auto& v : s->data) v = static_cast<float>(rng.uniform(0.0, 1.0));

  CheckpointHeader hdr;
  hdr.kind = 0;
  hdr.step = 12345;
  hdr.meta["feature_dim"] = 64;
  std::string path = "test_nn_ckpt.agp";
  save_checkpoint<float>(path, hdr, {&net});

  CheckpointHeader back;
  auto nets = load_checkpoint<float>(path, &back);
  REQUIRE(nets.size() == 1);
  CHECK(back.step == 12345);
  CHECK(back.kind == 0);
  CHECK(back.meta.at("feature_dim") == 64);

  auto orig_p = net.params();
  auto load_p = nets[0].params();
  REQUIRE(orig_p.size() == load_p.size());
  for (std::size_t i = 0; i < orig_p.size(); ++i) CHECK(orig_p[i]->data == load_p[i]->data);
  auto orig_s = net.state();
  auto load_s = nets[0].state();
  for (std::size_t i = 0; i < orig_s.size(); ++i) CHECK(orig_s[i]->data == load_s[i]->data);

  // inference agrees after reload
  Tensor<float> in({1, 1, 8, 8});
  for (auto& v : in.data) v = static_cast<float>(rng.uniform(0.0, 1.0));
  auto a = net.forward(in, false);
  auto b = nets[0].forward(in, false);
  CHECK(a.data == b.data);
  std::filesystem::remove(path);
}

TEST_CASE("checkpoint loader rejects corrupt input") {
  std::string path = "test_nn_bad.agp";
  {
    std::ofstream os(path, std::ios::binary);
    os << "NOPE";
  }
  CHECK_THROWS_WITH_AS(load_checkpoint<float>(path, nullptr), doctest::Contains("magic"),
                       std::runtime_error);
  {
    std::ofstream os(path, std::ios::binary);
    os << "AGP1";  // header cut short
  }
  CHECK_THROWS_WITH_AS(load_checkpoint<float>(path, nullptr), doctest::Contains("truncated"),
                       std::runtime_error);
  std::filesystem::remove(path);
}
