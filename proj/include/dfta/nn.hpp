#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <memory>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dfta/rng.hpp"

// Minimal dense/conv tensor core with reverse-mode gradients.
//
// Templated on the scalar type: the production networks use float, the
// gradient-check tests instantiate the identical code with double so that
// finite differences are not drowned by single-precision rounding.
// Per-sample losses are always accumulated in double.

namespace dfta::nn {

template <typename T>
struct Tensor {
  std::vector<int> shape;
  std::vector<T> data;

  Tensor() = default;
  explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
    data.assign(count(shape), T(0));
  }
  Tensor(std::vector<int> s, std::vector<T> d) : shape(std::move(s)), data(std::move(d)) {
    if (data.size() != count(shape)) throw std::invalid_argument("tensor: shape/data size mismatch");
  }

  static std::size_t count(const std::vector<int>& s) {
    std::size_t n = 1;
    for (int d : s) {
      if (d <= 0) throw std::invalid_argument("tensor: non-positive dimension");
      n *= static_cast<std::size_t>(d);
    }
    return n;
  }

  std::size_t size() const { return data.size(); }
  int dim(std::size_t i) const { return shape.at(i); }
  T& operator[](std::size_t i) { return data[i]; }
  const T& operator[](std::size_t i) const { return data[i]; }
  bool same_shape(const Tensor& o) const { return shape == o.shape; }

  void fill(T v) { std::fill(data.begin(), data.end(), v); }
};

template <typename T>
bool all_finite(const Tensor<T>& t) {
  for (T v : t.data)
    if (!std::isfinite(static_cast<double>(v))) return false;
  return true;
}

inline std::string shape_str(const std::vector<int>& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

enum class LayerKind : std::uint8_t {
  dense = 0,
  conv2d = 1,
  relu = 2,
  maxpool2d = 3,
  batchnorm = 4,
  softmax = 5,
};

inline const char* to_string(LayerKind k) {
  switch (k) {
    case LayerKind::dense: return "dense";
    case LayerKind::conv2d: return "conv2d";
    case LayerKind::relu: return "relu";
    case LayerKind::maxpool2d: return "maxpool2d";
    case LayerKind::batchnorm: return "batchnorm";
    case LayerKind::softmax: return "softmax";
  }
  return "?";
}

// Everything a layer needs to replay its forward pass in reverse. Caches are
// owned by the caller, so a frozen network can serve many threads at once.
template <typename T>
struct LayerCache {
  bool valid = false;
  bool train_mode = false;
  Tensor<T> input;
  Tensor<T> output;            // softmax
  std::vector<int> pool_arg;   // maxpool argmax (flat input index per output)
  Tensor<T> x_hat;             // batchnorm normalized input
  std::vector<T> inv_std;      // batchnorm 1/sqrt(var+eps) per feature
};

template <typename T>
class Layer {
 public:
  virtual ~Layer() = default;
  virtual LayerKind kind() const = 0;
  virtual std::string describe() const = 0;
  // per-sample output shape given per-sample input shape
  virtual std::vector<int> output_shape(const std::vector<int>& in) const = 0;
  virtual Tensor<T> forward(const Tensor<T>& in, bool train, LayerCache<T>* cache) = 0;
  // returns grad wrt input; accumulates into parameter grads
  virtual Tensor<T> backward(const Tensor<T>& grad_out, const LayerCache<T>& cache) = 0;
  virtual std::vector<Tensor<T>*> params() { return {}; }
  virtual std::vector<Tensor<T>*> grads() { return {}; }
  virtual std::vector<Tensor<T>*> state() { return {}; }  // serialized, not optimized
  virtual std::vector<int> config() const { return {}; }

  void zero_grad() {
    for (auto* g : grads()) g->fill(T(0));
  }

 protected:
  [[noreturn]] void reject(const std::string& msg) const {
    throw std::invalid_argument(describe() + ": " + msg);
  }
  void check_cache(const LayerCache<T>& c) const {
    if (!c.valid || !c.train_mode) reject("backward needs a cache from a train-mode forward");
  }
};

// ---------------------------------------------------------------------------

template <typename T>
class Dense : public Layer<T> {
 public:
  Tensor<T> w, b, gw, gb;
  int in_features, out_features;

  Dense(int in_f, int out_f)
      : w({out_f, in_f}), b({out_f}), gw({out_f, in_f}), gb({out_f}),
        in_features(in_f), out_features(out_f) {}

  LayerKind kind() const override { return LayerKind::dense; }
  std::string describe() const override {
    return "dense(" + std::to_string(in_features) + "->" + std::to_string(out_features) + ")";
  }
  std::vector<int> output_shape(const std::vector<int>& in) const override {
    std::size_t flat = Tensor<T>::count(in);
    if (static_cast<int>(flat) != in_features)
      this->reject("expected " + std::to_string(in_features) + " input features, got " + shape_str(in));
    return {out_features};
  }

  // input [N, ...] is flattened to [N, in_features]
  Tensor<T> forward(const Tensor<T>& in, bool train, LayerCache<T>* cache) override {
    int n = in.dim(0);
    if (in.size() != static_cast<std::size_t>(n) * in_features)
      this->reject("input " + shape_str(in.shape) + " does not flatten to " + std::to_string(in_features));
    Tensor<T> out({n, out_features});
    for (int i = 0; i < n; ++i) {
      const T* x = in.data.data() + static_cast<std::size_t>(i) * in_features;
      T* y = out.data.data() + static_cast<std::size_t>(i) * out_features;
      for (int o = 0; o < out_features; ++o) {
        const T* wr = w.data.data() + static_cast<std::size_t>(o) * in_features;
        T acc = b[static_cast<std::size_t>(o)];
        for (int k = 0; k < in_features; ++k) acc += wr[k] * x[k];
        y[o] = acc;
      }
    }
    if (cache) {
      cache->valid = true;
      cache->train_mode = train;
      cache->input = in;
    }
    return out;
  }

  Tensor<T> backward(const Tensor<T>& grad_out, const LayerCache<T>& cache) override {
    this->check_cache(cache);
    const Tensor<T>& in = cache.input;
    int n = in.dim(0);
    if (grad_out.size() != static_cast<std::size_t>(n) * out_features)
      this->reject("grad shape mismatch in backward");
    Tensor<T> din(in.shape);
    for (int i = 0; i < n; ++i) {
      const T* x = in.data.data() + static_cast<std::size_t>(i) * in_features;
      const T* gy = grad_out.data.data() + static_cast<std::size_t>(i) * out_features;
      T* gx = din.data.data() + static_cast<std::size_t>(i) * in_features;
      for (int o = 0; o < out_features; ++o) {
        T g = gy[o];
        gb[static_cast<std::size_t>(o)] += g;
        T* gwr = gw.data.data() + static_cast<std::size_t>(o) * in_features;
        const T* wr = w.data.data() + static_cast<std::size_t>(o) * in_features;
        for (int k = 0; k < in_features; ++k) {
          gwr[k] += g * x[k];
          gx[k] += g * wr[k];
        }
      }
    }
    return din;
  }

  std::vector<Tensor<T>*> params() override { return {&w, &b}; }
  std::vector<Tensor<T>*> grads() override { return {&gw, &gb}; }
  std::vector<int> config() const override { return {in_features, out_features}; }
};

template <typename T>
class Conv2d : public Layer<T> {
 public:
  Tensor<T> w, b, gw, gb;  // w [out_c, in_c, k, k]
  int in_ch, out_ch, ksize, stride, pad;

  Conv2d(int in_c, int out_c, int k, int s = 1, int p = 0)
      : w({out_c, in_c, k, k}), b({out_c}), gw({out_c, in_c, k, k}), gb({out_c}),
        in_ch(in_c), out_ch(out_c), ksize(k), stride(s), pad(p) {}

  LayerKind kind() const override { return LayerKind::conv2d; }
  std::string describe() const override {
    return "conv2d(" + std::to_string(in_ch) + "->" + std::to_string(out_ch) + ", k" +
           std::to_string(ksize) + ")";
  }
  std::vector<int> output_shape(const std::vector<int>& in) const override {
    if (in.size() != 3 || in[0] != in_ch)
      this->reject("expected input [" + std::to_string(in_ch) + ",H,W], got " + shape_str(in));
    int oh = (in[1] + 2 * pad - ksize) / stride + 1;
    int ow = (in[2] + 2 * pad - ksize) / stride + 1;
    if (oh <= 0 || ow <= 0) this->reject("input spatially smaller than kernel");
    return {out_ch, oh, ow};
  }

  Tensor<T> forward(const Tensor<T>& in, bool train, LayerCache<T>* cache) override {
    if (in.shape.size() != 4 || in.dim(1) != in_ch)
      this->reject("expected input [N," + std::to_string(in_ch) + ",H,W], got " + shape_str(in.shape));
    int n = in.dim(0), h = in.dim(2), wI = in.dim(3);
    int oh = (h + 2 * pad - ksize) / stride + 1;
    int ow = (wI + 2 * pad - ksize) / stride + 1;
    if (oh <= 0 || ow <= 0) this->reject("input spatially smaller than kernel");
    Tensor<T> out({n, out_ch, oh, ow});
    const std::size_t in_plane = static_cast<std::size_t>(h) * wI;
    for (int i = 0; i < n; ++i) {
      const T* xi = in.data.data() + static_cast<std::size_t>(i) * in_ch * in_plane;
      for (int oc = 0; oc < out_ch; ++oc) {
        T* yo = out.data.data() +
                ((static_cast<std::size_t>(i) * out_ch + oc) * oh) * ow;
        const T* wk = w.data.data() + static_cast<std::size_t>(oc) * in_ch * ksize * ksize;
        for (int oy = 0; oy < oh; ++oy) {
          for (int ox = 0; ox < ow; ++ox) {
            T acc = b[static_cast<std::size_t>(oc)];
            for (int ic = 0; ic < in_ch; ++ic) {
              const T* xc = xi + static_cast<std::size_t>(ic) * in_plane;
              const T* wc = wk + static_cast<std::size_t>(ic) * ksize * ksize;
              for (int ky = 0; ky < ksize; ++ky) {
                int sy = oy * stride + ky - pad;
                if (sy < 0 || sy >= h) continue;
                for (int kx = 0; kx < ksize; ++kx) {
                  int sx = ox * stride + kx - pad;
                  if (sx < 0 || sx >= wI) continue;
                  acc += wc[ky * ksize + kx] * xc[static_cast<std::size_t>(sy) * wI + sx];
                }
              }
            }
            yo[static_cast<std::size_t>(oy) * ow + ox] = acc;
          }
        }
      }
    }
    if (cache) {
      cache->valid = true;
      cache->train_mode = train;
      cache->input = in;
    }
    return out;
  }

  Tensor<T> backward(const Tensor<T>& grad_out, const LayerCache<T>& cache) override {
    this->check_cache(cache);
    const Tensor<T>& in = cache.input;
    int n = in.dim(0), h = in.dim(2), wI = in.dim(3);
    int oh = grad_out.dim(2), ow = grad_out.dim(3);
    Tensor<T> din(in.shape);
    const std::size_t in_plane = static_cast<std::size_t>(h) * wI;
    for (int i = 0; i < n; ++i) {
      const T* xi = in.data.data() + static_cast<std::size_t>(i) * in_ch * in_plane;
      T* gxi = din.data.data() + static_cast<std::size_t>(i) * in_ch * in_plane;
      for (int oc = 0; oc < out_ch; ++oc) {
        const T* gy = grad_out.data.data() +
                      ((static_cast<std::size_t>(i) * out_ch + oc) * oh) * ow;
        const T* wk = w.data.data() + static_cast<std::size_t>(oc) * in_ch * ksize * ksize;
        T* gwk = gw.data.data() + static_cast<std::size_t>(oc) * in_ch * ksize * ksize;
        for (int oy = 0; oy < oh; ++oy) {
          for (int ox = 0; ox < ow; ++ox) {
            T g = gy[static_cast<std::size_t>(oy) * ow + ox];
            gb[static_cast<std::size_t>(oc)] += g;
            for (int ic = 0; ic < in_ch; ++ic) {
              const T* xc = xi + static_cast<std::size_t>(ic) * in_plane;
              T* gxc = gxi + static_cast<std::size_t>(ic) * in_plane;
              const T* wc = wk + static_cast<std::size_t>(ic) * ksize * ksize;
              T* gwc = gwk + static_cast<std::size_t>(ic) * ksize * ksize;
              for (int ky = 0; ky < ksize; ++ky) {
                int sy = oy * stride + ky - pad;
                if (sy < 0 || sy >= h) continue;
                for (int kx = 0; kx < ksize; ++kx) {
                  int sx = ox * stride + kx - pad;
                  if (sx < 0 || sx >= wI) continue;
                  std::size_t xin = static_cast<std::size_t>(sy) * wI + sx;
                  gwc[ky * ksize + kx] += g * xc[xin];
                  gxc[xin] += g * wc[ky * ksize + kx];
                }
              }
            }
          }
        }
      }
    }
    return din;
  }

  std::vector<Tensor<T>*> params() override { return {&w, &b}; }
  std::vector<Tensor<T>*> grads() override { return {&gw, &gb}; }
  std::vector<int> config() const override { return {in_ch, out_ch, ksize, stride, pad}; }
};

template <typename T>
class Relu : public Layer<T> {
 public:
  LayerKind kind() const override { return LayerKind::relu; }
  std::string describe() const override { return "relu"; }
  std::vector<int> output_shape(const std::vector<int>& in) const override { return in; }

  Tensor<T> forward(const Tensor<T>& in, bool train, LayerCache<T>* cache) override {
    Tensor<T> out(in.shape);
    for (std::size_t i = 0; i < in.size(); ++i) out[i] = in[i] > T(0) ? in[i] : T(0);
    if (cache) {
      cache->valid = true;
      cache->train_mode = train;
      cache->input = in;
    }
    return out;
  }

  Tensor<T> backward(const Tensor<T>& grad_out, const LayerCache<T>& cache) override {
    this->check_cache(cache);
    if (!grad_out.same_shape(cache.input)) this->reject("grad shape mismatch in backward");
    Tensor<T> din(grad_out.shape);
    for (std::size_t i = 0; i < din.size(); ++i)
      din[i] = cache.input[i] > T(0) ? grad_out[i] : T(0);
    return din;
  }
};

template <typename T>
class MaxPool2d : public Layer<T> {
 public:
  int ksize;

  explicit MaxPool2d(int k) : ksize(k) {}

  LayerKind kind() const override { return LayerKind::maxpool2d; }
  std::string describe() const override { return "maxpool2d(k" + std::to_string(ksize) + ")"; }
  std::vector<int> output_shape(const std::vector<int>& in) const override {
    if (in.size() != 3) this->reject("expected input [C,H,W], got " + shape_str(in));
    if (in[1] < ksize || in[2] < ksize) this->reject("input spatially smaller than pool window");
    return {in[0], in[1] / ksize, in[2] / ksize};
  }

  Tensor<T> forward(const Tensor<T>& in, bool train, LayerCache<T>* cache) override {
    if (in.shape.size() != 4) this->reject("expected input [N,C,H,W], got " + shape_str(in.shape));
    int n = in.dim(0), c = in.dim(1), h = in.dim(2), wI = in.dim(3);
    int oh = h / ksize, ow = wI / ksize;
    if (oh == 0 || ow == 0) this->reject("input spatially smaller than pool window");
    Tensor<T> out({n, c, oh, ow});
    std::vector<int> arg(out.size());
    const std::size_t plane = static_cast<std::size_t>(h) * wI;
    std::size_t oidx = 0;
    for (int i = 0; i < n; ++i) {
      for (int ch = 0; ch < c; ++ch) {
        const T* x = in.data.data() + (static_cast<std::size_t>(i) * c + ch) * plane;
        for (int oy = 0; oy < oh; ++oy) {
          for (int ox = 0; ox < ow; ++ox, ++oidx) {
            int best = oy * ksize * wI + ox * ksize;
            T bv = x[best];
            for (int ky = 0; ky < ksize; ++ky) {
              for (int kx = 0; kx < ksize; ++kx) {
                int idx = (oy * ksize + ky) * wI + (ox * ksize + kx);
                if (x[idx] > bv) {
                  bv = x[idx];
                  best = idx;
                }
              }
            }
            out[oidx] = bv;
            arg[oidx] = static_cast<int>((static_cast<std::size_t>(i) * c + ch) * plane) + best;
          }
        }
      }
    }
    if (cache) {
      cache->valid = true;
      cache->train_mode = train;
      cache->input = in;
      cache->pool_arg = std::move(arg);
    }
    return out;
  }

  Tensor<T> backward(const Tensor<T>& grad_out, const LayerCache<T>& cache) override {
    this->check_cache(cache);
    if (grad_out.size() != cache.pool_arg.size()) this->reject("grad shape mismatch in backward");
    Tensor<T> din(cache.input.shape);
    for (std::size_t i = 0; i < grad_out.size(); ++i)
      din[static_cast<std::size_t>(cache.pool_arg[i])] += grad_out[i];
    return din;
  }

  std::vector<int> config() const override { return {ksize}; }
};

// 1-D batchnorm over [N, F]. Train mode normalizes with batch statistics
// (biased variance) and updates the running estimates; inference uses the
// frozen running statistics and never mutates anything.
template <typename T>
class BatchNorm : public Layer<T> {
 public:
  Tensor<T> gamma, beta, g_gamma, g_beta;
  Tensor<T> running_mean, running_var;
  int features;
  T momentum = T(0.9);
  T eps = T(1e-5);

  explicit BatchNorm(int f)
      : gamma({f}), beta({f}), g_gamma({f}), g_beta({f}),
        running_mean({f}), running_var({f}), features(f) {
    gamma.fill(T(1));
    running_var.fill(T(1));
  }

  LayerKind kind() const override { return LayerKind::batchnorm; }
  std::string describe() const override { return "batchnorm(" + std::to_string(features) + ")"; }
  std::vector<int> output_shape(const std::vector<int>& in) const override {
    std::size_t flat = Tensor<T>::count(in);
    if (static_cast<int>(flat) != features)
      this->reject("expected " + std::to_string(features) + " features, got " + shape_str(in));
    return {features};
  }

  Tensor<T> forward(const Tensor<T>& in, bool train, LayerCache<T>* cache) override {
    int n = in.dim(0);
    if (in.size() != static_cast<std::size_t>(n) * features)
      this->reject("input " + shape_str(in.shape) + " does not flatten to " + std::to_string(features));
    Tensor<T> out({n, features});
    if (train) {
      std::vector<T> mean(features, T(0)), var(features, T(0)), inv_std(features);
      for (int i = 0; i < n; ++i)
        for (int f = 0; f < features; ++f)
          mean[static_cast<std::size_t>(f)] += in[static_cast<std::size_t>(i) * features + f];
      for (int f = 0; f < features; ++f) mean[static_cast<std::size_t>(f)] /= T(n);
      for (int i = 0; i < n; ++i)
        for (int f = 0; f < features; ++f) {
          T d = in[static_cast<std::size_t>(i) * features + f] - mean[static_cast<std::size_t>(f)];
          var[static_cast<std::size_t>(f)] += d * d;
        }
      for (int f = 0; f < features; ++f) var[static_cast<std::size_t>(f)] /= T(n);
      for (int f = 0; f < features; ++f)
        inv_std[static_cast<std::size_t>(f)] = T(1) / std::sqrt(var[static_cast<std::size_t>(f)] + eps);
      Tensor<T> x_hat({n, features});
      for (int i = 0; i < n; ++i)
        for (int f = 0; f < features; ++f) {
          std::size_t idx = static_cast<std::size_t>(i) * features + f;
          x_hat[idx] = (in[idx] - mean[static_cast<std::size_t>(f)]) * inv_std[static_cast<std::size_t>(f)];
          out[idx] = gamma[static_cast<std::size_t>(f)] * x_hat[idx] + beta[static_cast<std::size_t>(f)];
        }
      for (int f = 0; f < features; ++f) {
        std::size_t sf = static_cast<std::size_t>(f);
        running_mean[sf] = momentum * running_mean[sf] + (T(1) - momentum) * mean[sf];
        running_var[sf] = momentum * running_var[sf] + (T(1) - momentum) * var[sf];
      }
      if (cache) {
        cache->valid = true;
        cache->train_mode = true;
        cache->input = in;
        cache->x_hat = std::move(x_hat);
        cache->inv_std = std::move(inv_std);
      }
    } else {
      for (int i = 0; i < n; ++i)
        for (int f = 0; f < features; ++f) {
          std::size_t idx = static_cast<std::size_t>(i) * features + f;
          std::size_t sf = static_cast<std::size_t>(f);
          out[idx] = gamma[sf] * (in[idx] - running_mean[sf]) /
                         std::sqrt(running_var[sf] + eps) + beta[sf];
        }
      if (cache) {
        cache->valid = true;
        cache->train_mode = false;
        cache->input = in;
      }
    }
    return out;
  }

  Tensor<T> backward(const Tensor<T>& grad_out, const LayerCache<T>& cache) override {
    this->check_cache(cache);
    int n = cache.input.dim(0);
    if (grad_out.size() != static_cast<std::size_t>(n) * features)
      this->reject("grad shape mismatch in backward");
    Tensor<T> din({n, features});
    for (int f = 0; f < features; ++f) {
      std::size_t sf = static_cast<std::size_t>(f);
      T sum_dy = T(0), sum_dy_xhat = T(0);
      for (int i = 0; i < n; ++i) {
        std::size_t idx = static_cast<std::size_t>(i) * features + f;
        sum_dy += grad_out[idx];
        sum_dy_xhat += grad_out[idx] * cache.x_hat[idx];
      }
      g_beta[sf] += sum_dy;
      g_gamma[sf] += sum_dy_xhat;
      T scale = gamma[sf] * cache.inv_std[sf] / T(n);
      for (int i = 0; i < n; ++i) {
        std::size_t idx = static_cast<std::size_t>(i) * features + f;
        din[idx] = scale * (T(n) * grad_out[idx] - sum_dy - cache.x_hat[idx] * sum_dy_xhat);
      }
    }
    return din;
  }

  std::vector<Tensor<T>*> params() override { return {&gamma, &beta}; }
  std::vector<Tensor<T>*> grads() override { return {&g_gamma, &g_beta}; }
  std::vector<Tensor<T>*> state() override { return {&running_mean, &running_var}; }
  std::vector<int> config() const override { return {features}; }
};

// Softmax over the trailing dimension.
template <typename T>
class Softmax : public Layer<T> {
 public:
  LayerKind kind() const override { return LayerKind::softmax; }
  std::string describe() const override { return "softmax"; }
  std::vector<int> output_shape(const std::vector<int>& in) const override { return in; }

  Tensor<T> forward(const Tensor<T>& in, bool train, LayerCache<T>* cache) override {
    if (in.shape.empty()) this->reject("empty input");
    int c = in.shape.back();
    std::size_t rows = in.size() / static_cast<std::size_t>(c);
    Tensor<T> out(in.shape);
    for (std::size_t r = 0; r < rows; ++r) {
      const T* x = in.data.data() + r * c;
      T* y = out.data.data() + r * c;
      T m = x[0];
      for (int j = 1; j < c; ++j) m = std::max(m, x[j]);
      T sum = T(0);
      for (int j = 0; j < c; ++j) {
        y[j] = std::exp(x[j] - m);
        sum += y[j];
      }
      for (int j = 0; j < c; ++j) y[j] /= sum;
    }
    if (cache) {
      cache->valid = true;
      cache->train_mode = train;
      cache->input = in;
      cache->output = out;
    }
    return out;
  }

  Tensor<T> backward(const Tensor<T>& grad_out, const LayerCache<T>& cache) override {
    this->check_cache(cache);
    const Tensor<T>& y = cache.output;
    if (!grad_out.same_shape(y)) this->reject("grad shape mismatch in backward");
    int c = y.shape.back();
    std::size_t rows = y.size() / static_cast<std::size_t>(c);
    Tensor<T> din(y.shape);
    for (std::size_t r = 0; r < rows; ++r) {
      const T* yr = y.data.data() + r * c;
      const T* gy = grad_out.data.data() + r * c;
      T* gx = din.data.data() + r * c;
      T dot = T(0);
      for (int j = 0; j < c; ++j) dot += gy[j] * yr[j];
      for (int j = 0; j < c; ++j) gx[j] = yr[j] * (gy[j] - dot);
    }
    return din;
  }
};

// ---------------------------------------------------------------------------

template <typename T>
std::unique_ptr<Layer<T>> make_layer(LayerKind kind, const std::vector<int>& cfg) {
  switch (kind) {
    case LayerKind::dense:
      if (cfg.size() != 2) break;
      return std::make_unique<Dense<T>>(cfg[0], cfg[1]);
    case LayerKind::conv2d:
      if (cfg.size() != 5) break;
      return std::make_unique<Conv2d<T>>(cfg[0], cfg[1], cfg[2], cfg[3], cfg[4]);
    case LayerKind::relu:
      return std::make_unique<Relu<T>>();
    case LayerKind::maxpool2d:
      if (cfg.size() != 1) break;
      return std::make_unique<MaxPool2d<T>>(cfg[0]);
    case LayerKind::batchnorm:
      if (cfg.size() != 1) break;
      return std::make_unique<BatchNorm<T>>(cfg[0]);
    case LayerKind::softmax:
      return std::make_unique<Softmax<T>>();
  }
  throw std::runtime_error("bad layer manifest entry for kind " + std::string(to_string(kind)));
}

template <typename T>
class Network {
 public:
  std::vector<std::unique_ptr<Layer<T>>> layers;
  std::vector<int> input_shape;  // per-sample

  Network() = default;
  explicit Network(std::vector<int> in_shape) : input_shape(std::move(in_shape)) {}
  Network(Network&&) noexcept = default;
  Network& operator=(Network&&) noexcept = default;

  template <typename L, typename... Args>
  L* add(Args&&... args) {
    auto l = std::make_unique<L>(std::forward<Args>(args)...);
    L* raw = l.get();
    layers.push_back(std::move(l));
    return raw;
  }

  // input carries a leading batch dimension on top of input_shape
  Tensor<T> forward(const Tensor<T>& input, bool train,
                    std::vector<LayerCache<T>>* caches = nullptr) {
    check_input(input);
    if (caches) caches->assign(layers.size(), LayerCache<T>{});
    Tensor<T> x = input;
    for (std::size_t i = 0; i < layers.size(); ++i)
      x = layers[i]->forward(x, train, caches ? &(*caches)[i] : nullptr);
    if (!all_finite(x)) throw std::runtime_error("forward produced non-finite values");
    return x;
  }

  Tensor<T> backward(const Tensor<T>& grad_logits, const std::vector<LayerCache<T>>& caches) {
    if (caches.size() != layers.size())
      throw std::invalid_argument("backward: cache does not match network");
    Tensor<T> g = grad_logits;
    for (std::size_t i = layers.size(); i-- > 0;) g = layers[i]->backward(g, caches[i]);
    return g;
  }

  std::vector<Tensor<T>*> params() {
    std::vector<Tensor<T>*> out;
    for (auto& l : layers)
      for (auto* p : l->params()) out.push_back(p);
    return out;
  }
  std::vector<Tensor<T>*> grads() {
    std::vector<Tensor<T>*> out;
    for (auto& l : layers)
      for (auto* g : l->grads()) out.push_back(g);
    return out;
  }
  std::vector<Tensor<T>*> state() {
    std::vector<Tensor<T>*> out;
    for (auto& l : layers)
      for (auto* s : l->state()) out.push_back(s);
    return out;
  }

  std::size_t param_count() {
    std::size_t n = 0;
    for (auto* p : params()) n += p->size();
    return n;
  }

  void zero_grad() {
    for (auto& l : layers) l->zero_grad();
  }

  void copy_from(Network& other) {
    auto dst_p = params(), src_p = other.params();
    auto dst_s = state(), src_s = other.state();
    if (dst_p.size() != src_p.size() || dst_s.size() != src_s.size())
      throw std::invalid_argument("copy_from: incompatible networks");
    for (std::size_t i = 0; i < dst_p.size(); ++i) dst_p[i]->data = src_p[i]->data;
    for (std::size_t i = 0; i < dst_s.size(); ++i) dst_s[i]->data = src_s[i]->data;
  }

  std::vector<int> output_shape() const {
    std::vector<int> s = input_shape;
    for (const auto& l : layers) s = l->output_shape(s);
    return s;
  }

 private:
  void check_input(const Tensor<T>& input) const {
    bool ok = input.shape.size() == input_shape.size() + 1;
    for (std::size_t i = 0; ok && i < input_shape.size(); ++i)
      ok = input.shape[i + 1] == input_shape[i];
    if (!ok)
      throw std::invalid_argument("network input " + shape_str(input.shape) +
                                  " does not match declared shape [N]+" + shape_str(input_shape));
  }
};

// ---------------------------------------------------------------------------
// cross-entropy; losses always in double

template <typename T>
double log_sum_exp(const T* logits, int c) {
  double m = static_cast<double>(logits[0]);
  for (int j = 1; j < c; ++j) m = std::max(m, static_cast<double>(logits[j]));
  double sum = 0.0;
  for (int j = 0; j < c; ++j) sum += std::exp(static_cast<double>(logits[j]) - m);
  return m + std::log(sum);
}

// logits [C] or [1,C]
template <typename T>
double cross_entropy(const Tensor<T>& logits, int label) {
  int c = logits.shape.back();
  if (logits.size() != static_cast<std::size_t>(c))
    throw std::invalid_argument("cross_entropy: expected a single logit row");
  if (label < 0 || label >= c) throw std::invalid_argument("cross_entropy: label out of range");
  if (!all_finite(logits)) throw std::invalid_argument("cross_entropy: non-finite logits");
  double loss = log_sum_exp(logits.data.data(), c) - static_cast<double>(logits.data[static_cast<std::size_t>(label)]);
  return loss < 0.0 ? 0.0 : loss;
}

// mean loss over [N,C] logits; writes d(mean loss)/d(logits) if grad != nullptr
template <typename T>
double cross_entropy_batch(const Tensor<T>& logits, const std::vector<int>& labels,
                           Tensor<T>* grad = nullptr) {
  if (logits.shape.size() != 2) throw std::invalid_argument("cross_entropy_batch: expected [N,C]");
  int n = logits.dim(0), c = logits.dim(1);
  if (static_cast<int>(labels.size()) != n)
    throw std::invalid_argument("cross_entropy_batch: label count mismatch");
  if (grad) *grad = Tensor<T>(logits.shape);
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    int y = labels[static_cast<std::size_t>(i)];
    if (y < 0 || y >= c) throw std::invalid_argument("cross_entropy_batch: label out of range");
    const T* row = logits.data.data() + static_cast<std::size_t>(i) * c;
    double lse = log_sum_exp(row, c);
    total += lse - static_cast<double>(row[y]);
    if (grad) {
      T* g = grad->data.data() + static_cast<std::size_t>(i) * c;
      for (int j = 0; j < c; ++j)
        g[j] = static_cast<T>(std::exp(static_cast<double>(row[j]) - lse) / n);
      g[y] -= static_cast<T>(1.0 / n);
    }
  }
  return total / n;
}

// softmax of one logit row, in double
template <typename T>
std::vector<double> softmax_row(const Tensor<T>& logits) {
  int c = logits.shape.back();
  if (logits.size() != static_cast<std::size_t>(c))
    throw std::invalid_argument("softmax_row: expected a single logit row");
  double lse = log_sum_exp(logits.data.data(), c);
  std::vector<double> p(static_cast<std::size_t>(c));
  for (int j = 0; j < c; ++j)
    p[static_cast<std::size_t>(j)] = std::exp(static_cast<double>(logits.data[static_cast<std::size_t>(j)]) - lse);
  return p;
}

// ---------------------------------------------------------------------------
// Adam with bias correction followed by decoupled weight decay

template <typename T>
struct AdamState {
  std::int64_t step = 0;
  T lr = T(0.001);
  T beta1 = T(0.9);
  T beta2 = T(0.999);
  T eps = T(1e-8);
  T weight_decay = T(1e-6);
  std::vector<Tensor<T>> m, v;

  void init(const std::vector<Tensor<T>*>& params) {
    m.clear();
    v.clear();
    for (auto* p : params) {
      m.emplace_back(p->shape);
      v.emplace_back(p->shape);
    }
  }
};

template <typename T>
void adam_step(AdamState<T>& st, const std::vector<Tensor<T>*>& params,
               const std::vector<Tensor<T>*>& grads) {
  if (params.size() != grads.size())
    throw std::invalid_argument("adam_step: params/grads count mismatch");
  if (st.m.size() != params.size()) st.init(params);
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (!params[k]->same_shape(*grads[k]) || !st.m[k].same_shape(*params[k]))
      throw std::invalid_argument("adam_step: shape mismatch at parameter " + std::to_string(k));
    if (!all_finite(*grads[k]))
      throw std::invalid_argument("adam_step: non-finite gradient at parameter " + std::to_string(k));
  }
  st.step += 1;
  T bc1 = T(1) - static_cast<T>(std::pow(static_cast<double>(st.beta1), static_cast<double>(st.step)));
  T bc2 = T(1) - static_cast<T>(std::pow(static_cast<double>(st.beta2), static_cast<double>(st.step)));
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor<T>& p = *params[k];
    const Tensor<T>& g = *grads[k];
    Tensor<T>& m = st.m[k];
    Tensor<T>& v = st.v[k];
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = st.beta1 * m[i] + (T(1) - st.beta1) * g[i];
      v[i] = st.beta2 * v[i] + (T(1) - st.beta2) * g[i] * g[i];
      T mhat = m[i] / bc1;
      T vhat = v[i] / bc2;
      p[i] -= st.lr * mhat / (std::sqrt(vhat) + st.eps);
      p[i] -= st.lr * st.weight_decay * p[i];
    }
  }
}

// ---------------------------------------------------------------------------
// initialization

template <typename T>
void he_init(Tensor<T>& w, int fan_in, Rng& rng) {
  double std_dev = std::sqrt(2.0 / fan_in);
  for (auto& v : w.data) v = static_cast<T>(rng.normal() * std_dev);
}

template <typename T>
void init_network(Network<T>& net, Rng& rng) {
  for (auto& l : net.layers) {
    if (auto* d = dynamic_cast<Dense<T>*>(l.get())) {
      he_init(d->w, d->in_features, rng);
      d->b.fill(T(0));
    } else if (auto* c = dynamic_cast<Conv2d<T>*>(l.get())) {
      he_init(c->w, c->in_ch * c->ksize * c->ksize, rng);
      c->b.fill(T(0));
    }
  }
}

// ---------------------------------------------------------------------------
// checkpoint format: magic "AGP1", version, kind byte, layer manifests,
// parameters as little-endian 32-bit floats, 64-bit step counter

namespace detail {

inline void put_bytes(std::ostream& os, const void* p, std::size_t n) {
  os.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}
inline void put_u16(std::ostream& os, std::uint16_t v) {
  unsigned char b[2] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8)};
  put_bytes(os, b, 2);
}
inline void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  put_bytes(os, b, 4);
}
inline void put_u64(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  put_bytes(os, b, 8);
}
inline void put_i32(std::ostream& os, std::int32_t v) { put_u32(os, static_cast<std::uint32_t>(v)); }
inline void put_f32(std::ostream& os, float v) {
  std::uint32_t u;
  std::memcpy(&u, &v, 4);
  put_u32(os, u);
}

[[noreturn]] inline void truncated() { throw std::runtime_error("checkpoint: truncated file"); }

inline void get_bytes(std::istream& is, void* p, std::size_t n) {
  is.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(is.gcount()) != n) truncated();
}
inline std::uint16_t get_u16(std::istream& is) {
  unsigned char b[2];
  get_bytes(is, b, 2);
  return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}
inline std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  get_bytes(is, b, 4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}
inline std::uint64_t get_u64(std::istream& is) {
  unsigned char b[8];
  get_bytes(is, b, 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}
inline std::int32_t get_i32(std::istream& is) { return static_cast<std::int32_t>(get_u32(is)); }
inline float get_f32(std::istream& is) {
  std::uint32_t u = get_u32(is);
  float v;
  std::memcpy(&v, &u, 4);
  return v;
}

}  // namespace detail

struct CheckpointHeader {
  std::uint8_t kind = 0;  // 0 classifier, 1 dqn agent, 2 ppo agent
  std::uint64_t step = 0;
  std::map<std::string, std::int64_t> meta;
};

inline constexpr char kCheckpointMagic[4] = {'A', 'G', 'P', '1'};
inline constexpr std::uint16_t kCheckpointVersion = 1;

template <typename T>
void save_network(std::ostream& os, Network<T>& net) {
  using namespace detail;
  put_u32(os, static_cast<std::uint32_t>(net.input_shape.size()));
  for (int d : net.input_shape) put_i32(os, d);
  put_u32(os, static_cast<std::uint32_t>(net.layers.size()));
  for (auto& l : net.layers) {
    put_bytes(os, "\x4c", 1);  // per-layer marker
    unsigned char k = static_cast<unsigned char>(l->kind());
    put_bytes(os, &k, 1);
    auto cfg = l->config();
    put_u32(os, static_cast<std::uint32_t>(cfg.size()));
    for (int c : cfg) put_i32(os, c);
  }
  auto write_tensors = [&](std::vector<Tensor<T>*> ts) {
    for (auto* t : ts) {
      put_u32(os, static_cast<std::uint32_t>(t->shape.size()));
      for (int d : t->shape) put_i32(os, d);
      for (T v : t->data) put_f32(os, static_cast<float>(v));
    }
  };
  write_tensors(net.params());
  write_tensors(net.state());
}

template <typename T>
Network<T> load_network(std::istream& is) {
  using namespace detail;
  std::uint32_t in_rank = get_u32(is);
  if (in_rank > 8) throw std::runtime_error("checkpoint: implausible input rank");
  std::vector<int> in_shape(in_rank);
  for (auto& d : in_shape) d = get_i32(is);
  Network<T> net(std::move(in_shape));
  std::uint32_t n_layers = get_u32(is);
  if (n_layers > 1024) throw std::runtime_error("checkpoint: implausible layer count");
  for (std::uint32_t i = 0; i < n_layers; ++i) {
    unsigned char marker, k;
    get_bytes(is, &marker, 1);
    if (marker != 0x4c)
      throw std::runtime_error("checkpoint: bad layer marker at layer " + std::to_string(i));
    get_bytes(is, &k, 1);
    std::uint32_t n_cfg = get_u32(is);
    if (n_cfg > 16) throw std::runtime_error("checkpoint: implausible layer config");
    std::vector<int> cfg(n_cfg);
    for (auto& c : cfg) c = get_i32(is);
    net.layers.push_back(make_layer<T>(static_cast<LayerKind>(k), cfg));
  }
  auto read_tensors = [&](std::vector<Tensor<T>*> ts) {
    for (auto* t : ts) {
      std::uint32_t rank = get_u32(is);
      std::vector<int> shape(rank);
      for (auto& d : shape) d = get_i32(is);
      if (shape != t->shape) throw std::runtime_error("checkpoint: tensor shape mismatch");
      for (auto& v : t->data) v = static_cast<T>(get_f32(is));
    }
  };
  read_tensors(net.params());
  read_tensors(net.state());
  return net;
}

template <typename T>
void save_checkpoint(const std::string& path, const CheckpointHeader& hdr,
                     std::vector<Network<T>*> nets) {
  using namespace detail;
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("checkpoint: cannot open for write: " + path);
  put_bytes(os, kCheckpointMagic, 4);
  put_u16(os, kCheckpointVersion);
  unsigned char kind = hdr.kind;
  put_bytes(os, &kind, 1);
  unsigned char n = static_cast<unsigned char>(nets.size());
  put_bytes(os, &n, 1);
  put_u64(os, hdr.step);
  put_u32(os, static_cast<std::uint32_t>(hdr.meta.size()));
  for (const auto& [key, val] : hdr.meta) {
    put_u16(os, static_cast<std::uint16_t>(key.size()));
    put_bytes(os, key.data(), key.size());
    put_u64(os, static_cast<std::uint64_t>(val));
  }
  for (auto* net : nets) save_network(os, *net);
  if (!os) throw std::runtime_error("checkpoint: write failed: " + path);
}

template <typename T>
std::vector<Network<T>> load_checkpoint(const std::string& path, CheckpointHeader* hdr_out) {
  using namespace detail;
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("checkpoint: cannot open: " + path);
  char magic[4];
  get_bytes(is, magic, 4);
  if (std::memcmp(magic, kCheckpointMagic, 4) != 0)
    throw std::runtime_error("checkpoint: bad magic in " + path);
  std::uint16_t version = get_u16(is);
  if (version != kCheckpointVersion)
    throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));
  CheckpointHeader hdr;
  unsigned char kind, n;
  get_bytes(is, &kind, 1);
  get_bytes(is, &n, 1);
  hdr.kind = kind;
  hdr.step = get_u64(is);
  std::uint32_t n_meta = get_u32(is);
  if (n_meta > 1024) throw std::runtime_error("checkpoint: implausible meta count");
  for (std::uint32_t i = 0; i < n_meta; ++i) {
    std::uint16_t len = get_u16(is);
    std::string key(len, '\0');
    get_bytes(is, key.data(), len);
    hdr.meta[key] = static_cast<std::int64_t>(get_u64(is));
  }
  std::vector<Network<T>> nets;
  for (unsigned char i = 0; i < n; ++i) nets.push_back(load_network<T>(is));
  if (hdr_out) *hdr_out = hdr;
  return nets;
}

}  // namespace dfta::nn
