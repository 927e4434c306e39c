#pragma once

// Central finite-difference gradient oracle. Lives in test code only; it
// never looks at the analytic backward path it is checking.

#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "dfta/nn.hpp"
#include "dfta/rng.hpp"

namespace gradcheck {

using dfta::Rng;

// Draw inputs away from relu/maxpool kinks so the finite difference never
// crosses a non-differentiable point.
template <typename T>
dfta::nn::Tensor<T> kink_safe_input(const std::vector<int>& shape, Rng& rng) {
  dfta::nn::Tensor<T> t(shape);
  for (auto& v : t.data) {
    double x = rng.uniform(-1.0, 1.0);
    if (std::abs(x) < 6e-3) x += (x < 0 ? -1.0 : 1.0) * 2e-2;
    v = static_cast<T>(x);
  }
  return t;
}

// Weighted-sum scalar loss over the flattened network output.
template <typename T>
struct LinearLoss {
  std::vector<double> w;
  explicit LinearLoss(std::size_t n, Rng& rng) {
    w.resize(n);
    for (auto& x : w) x = rng.uniform(-1.0, 1.0);
  }
  double value(const dfta::nn::Tensor<T>& out) const {
    double s = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) s += w[i] * static_cast<double>(out[i]);
    return s;
  }
  dfta::nn::Tensor<T> grad(const std::vector<int>& shape) const {
    dfta::nn::Tensor<T> g(shape);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = static_cast<T>(w[i]);
    return g;
  }
};

struct Report {
  double max_rel_err = 0.0;
  std::size_t checked = 0;
};

inline double rel_err(double a, double n) {
  double denom = std::max({std::abs(a), std::abs(n), 1e-6});
  return std::abs(a - n) / denom;
}

// Checks every parameter gradient and every input gradient of `net` against
// central finite differences of the weighted-sum loss.
template <typename T>
Report check_network(dfta::nn::Network<T>& net, const std::vector<int>& batch_shape,
                     Rng& rng, double h) {
  using dfta::nn::LayerCache;
  using dfta::nn::Tensor;

  Tensor<T> input = kink_safe_input<T>(batch_shape, rng);
  std::vector<LayerCache<T>> caches;
  Tensor<T> out = net.forward(input, /*train=*/true, &caches);
  LinearLoss<T> loss(out.size(), rng);

  net.zero_grad();
  Tensor<T> din = net.backward(loss.grad(out.shape), caches);

  auto eval = [&]() {
    return loss.value(net.forward(input, /*train=*/true, nullptr));
  };

  Report rep;
  for (auto* p : net.params()) {
    auto* g = static_cast<Tensor<T>*>(nullptr);
    // locate the matching grad tensor by position
    auto ps = net.params();
    auto gs = net.grads();
    for (std::size_t i = 0; i < ps.size(); ++i)
      if (ps[i] == p) g = gs[i];
    for (std::size_t i = 0; i < p->size(); ++i) {
      T keep = (*p)[i];
      (*p)[i] = keep + static_cast<T>(h);
      double lp = eval();
      (*p)[i] = keep - static_cast<T>(h);
      double lm = eval();
      (*p)[i] = keep;
      double fd = (lp - lm) / (2.0 * h);
      rep.max_rel_err = std::max(rep.max_rel_err, rel_err(static_cast<double>((*g)[i]), fd));
      rep.checked++;
    }
  }
  for (std::size_t i = 0; i < input.size(); ++i) {
    T keep = input[i];
    input[i] = keep + static_cast<T>(h);
    double lp = eval();
    input[i] = keep - static_cast<T>(h);
    double lm = eval();
    input[i] = keep;
    double fd = (lp - lm) / (2.0 * h);
    rep.max_rel_err = std::max(rep.max_rel_err, rel_err(static_cast<double>(din[i]), fd));
    rep.checked++;
  }
  return rep;
}

// One small network per layer kind; each contains the kind under test plus
// enough surrounding structure to give it parameters upstream/downstream.
template <typename T>
std::pair<dfta::nn::Network<T>, std::vector<int>> net_for_kind(dfta::nn::LayerKind kind,
                                                               Rng& rng) {
  using namespace dfta::nn;
  Network<T> net;
  std::vector<int> batch_shape;
  switch (kind) {
    case LayerKind::dense:
      net = Network<T>({7});
      net.template add<Dense<T>>(7, 5);
      batch_shape = {3, 7};
      break;
    case LayerKind::conv2d:
      net = Network<T>({2, 6, 6});
      net.template add<Conv2d<T>>(2, 3, 3, 1, 1);
      batch_shape = {2, 2, 6, 6};
      break;
    case LayerKind::relu:
      net = Network<T>({6});
      net.template add<Dense<T>>(6, 8);
      net.template add<Relu<T>>();
      net.template add<Dense<T>>(8, 4);
      batch_shape = {3, 6};
      break;
    case LayerKind::maxpool2d:
      net = Network<T>({1, 6, 6});
      net.template add<Conv2d<T>>(1, 2, 3, 1, 1);
      net.template add<MaxPool2d<T>>(2);
      batch_shape = {2, 1, 6, 6};
      break;
    case LayerKind::batchnorm:
      net = Network<T>({5});
      net.template add<Dense<T>>(5, 6);
      net.template add<BatchNorm<T>>(6);
      net.template add<Dense<T>>(6, 3);
      batch_shape = {4, 5};
      break;
    case LayerKind::softmax:
      net = Network<T>({5});
      net.template add<Dense<T>>(5, 4);
      net.template add<Softmax<T>>();
      batch_shape = {3, 5};
      break;
  }
  init_network(net, rng);
  return {std::move(net), batch_shape};
}

template <typename T>
Report check_kind(dfta::nn::LayerKind kind, std::uint64_t seed, double h) {
  Rng rng(seed);
  auto [net, shape] = net_for_kind<T>(kind, rng);
  return check_network<T>(net, shape, rng, h);
}

}  // namespace gradcheck
