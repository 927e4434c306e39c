#include "dfta/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>

#include "dfta/rng.hpp"

namespace dfta::classifier {

using nn::LayerCache;
using nn::Tensor;

ClassifierModel build(const Hyperparams& hp, std::uint64_t init_seed) {
  if (hp.input_w % 4 != 0 || hp.input_h % 4 != 0)
    throw std::invalid_argument("classifier: input size must be divisible by 4 (two maxpools)");
  ClassifierModel m;
  m.hp = hp;
  m.net = nn::Network<float>({hp.input_c, hp.input_h, hp.input_w});
  int flat = hp.conv2_ch * (hp.input_h / 4) * (hp.input_w / 4);
  m.net.add<nn::Conv2d<float>>(hp.input_c, hp.conv1_ch, 3, 1, 1);
  m.net.add<nn::Relu<float>>();
  m.net.add<nn::MaxPool2d<float>>(2);
  m.net.add<nn::Conv2d<float>>(hp.conv1_ch, hp.conv2_ch, 3, 1, 1);
  m.net.add<nn::Relu<float>>();
  m.net.add<nn::MaxPool2d<float>>(2);
  m.net.add<nn::BatchNorm<float>>(flat);
  m.net.add<nn::Dense<float>>(flat, hp.feature_dim);
  m.net.add<nn::Relu<float>>();
  m.net.add<nn::Dense<float>>(hp.feature_dim, 2);
  Rng rng(Rng::mix(init_seed, 0x1217ULL));
  nn::init_network(m.net, rng);
  return m;
}

Tensor<float> to_tensor(const Image& img) {
  Tensor<float> t({1, img.channels, img.height, img.width});
  std::size_t i = 0;
  for (int c = 0; c < img.channels; ++c)
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x)
        t[i++] = static_cast<float>(img.at(x, y, c)) / 255.0f;
  return t;
}

namespace {

Tensor<float> to_batch(const std::vector<LabeledImage>& ds, const std::vector<int>& idx,
                       std::size_t begin, std::size_t end) {
  const Image& first = ds[static_cast<std::size_t>(idx[begin])].image;
  Tensor<float> t({static_cast<int>(end - begin), first.channels, first.height, first.width});
  std::size_t off = 0;
  for (std::size_t k = begin; k < end; ++k) {
    const Image& img = ds[static_cast<std::size_t>(idx[k])].image;
    if (img.width != first.width || img.height != first.height || img.channels != first.channels)
      throw std::invalid_argument("classifier: training set mixes image dimensions");
    for (int c = 0; c < img.channels; ++c)
      for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
          t[off++] = static_cast<float>(img.at(x, y, c)) / 255.0f;
  }
  return t;
}

void check_input(const ClassifierModel& m, const Image& img) {
  if (img.width != m.hp.input_w || img.height != m.hp.input_h || img.channels != m.hp.input_c)
    throw std::invalid_argument("classifier: image " + std::to_string(img.width) + "x" +
                                std::to_string(img.height) + "x" + std::to_string(img.channels) +
                                " does not match model input " + std::to_string(m.hp.input_w) +
                                "x" + std::to_string(m.hp.input_h) + "x" +
                                std::to_string(m.hp.input_c));
}

}  // namespace

std::vector<EpochLog> train(ClassifierModel& model, const std::vector<LabeledImage>& dataset,
                            int epochs, int batch_size, std::uint64_t seed) {
  if (dataset.empty()) throw std::invalid_argument("classifier: empty training set");
  if (batch_size < 1) throw std::invalid_argument("classifier: batch size must be positive");
  bool has[2] = {false, false};
  for (const auto& li : dataset) {
    if (li.label != 0 && li.label != 1) throw std::invalid_argument("classifier: label must be 0 or 1");
    has[li.label] = true;
  }
  if (!has[0] || !has[1])
    throw std::invalid_argument("classifier: training set must contain both classes");

  nn::AdamState<float> opt;
  opt.lr = model.hp.lr;
  opt.weight_decay = model.hp.weight_decay;
  opt.step = static_cast<std::int64_t>(model.train_steps);

  Rng rng(Rng::mix(seed, 0x7121ULL));
  std::vector<int> idx(dataset.size());
  std::iota(idx.begin(), idx.end(), 0);

  std::vector<EpochLog> log;
  std::vector<LayerCache<float>> caches;
  for (int epoch = 0; epoch < epochs; ++epoch) {
    rng.shuffle(idx);
    double loss_sum = 0.0;
    long correct = 0;
    for (std::size_t b = 0; b < idx.size(); b += static_cast<std::size_t>(batch_size)) {
      std::size_t e = std::min(idx.size(), b + static_cast<std::size_t>(batch_size));
      Tensor<float> batch = to_batch(dataset, idx, b, e);
      std::vector<int> labels;
      for (std::size_t k = b; k < e; ++k)
        labels.push_back(dataset[static_cast<std::size_t>(idx[k])].label);

      Tensor<float> logits = model.net.forward(batch, /*train=*/true, &caches);
      Tensor<float> dlogits;
      double loss = nn::cross_entropy_batch(logits, labels, &dlogits);
      loss_sum += loss * static_cast<double>(e - b);
      for (std::size_t k = 0; k < labels.size(); ++k) {
        int pred = logits[k * 2] >= logits[k * 2 + 1] ? 0 : 1;
        correct += pred == labels[k];
      }
      model.net.zero_grad();
      model.net.backward(dlogits, caches);
      nn::adam_step(opt, model.net.params(), model.net.grads());
    }
    log.push_back({epoch, loss_sum / static_cast<double>(dataset.size()),
                   static_cast<double>(correct) / static_cast<double>(dataset.size())});
  }
  model.train_steps = static_cast<std::uint64_t>(opt.step);
  return log;
}

Evaluation evaluate_image(const ClassifierModel& model, const Image& img) {
  check_input(model, img);
  // infer-mode forward mutates nothing; the const contract is real
  auto& net = const_cast<nn::Network<float>&>(model.net);
  std::vector<LayerCache<float>> caches;
  Evaluation ev;
  ev.logits = net.forward(to_tensor(img), /*train=*/false, &caches);
  // the feature map is the input the final dense layer saw (post-relu)
  ev.feature = caches.back().input.data;
  ev.prob_fake = nn::softmax_row(ev.logits)[1];
  return ev;
}

double predict_proba(const ClassifierModel& model, const Image& img) {
  return evaluate_image(model, img).prob_fake;
}

std::vector<float> feature_map(const ClassifierModel& model, const Image& img) {
  return evaluate_image(model, img).feature;
}

double loss_of(const ClassifierModel& model, const LabeledImage& sample) {
  if (sample.label != 0 && sample.label != 1)
    throw std::invalid_argument("classifier: label must be 0 or 1");
  auto ev = evaluate_image(model, sample.image);
  return nn::cross_entropy(ev.logits, sample.label);
}

void save(const ClassifierModel& model, const std::string& path) {
  nn::CheckpointHeader hdr;
  hdr.kind = 0;
  hdr.step = model.train_steps;
  hdr.meta["input_w"] = model.hp.input_w;
  hdr.meta["input_h"] = model.hp.input_h;
  hdr.meta["input_c"] = model.hp.input_c;
  hdr.meta["conv1_ch"] = model.hp.conv1_ch;
  hdr.meta["conv2_ch"] = model.hp.conv2_ch;
  hdr.meta["feature_dim"] = model.hp.feature_dim;
  auto& net = const_cast<nn::Network<float>&>(model.net);
  nn::save_checkpoint<float>(path, hdr, {&net});
}

ClassifierModel load(const std::string& path) {
  nn::CheckpointHeader hdr;
  auto nets = nn::load_checkpoint<float>(path, &hdr);
  if (hdr.kind != 0)
    throw std::runtime_error("classifier: " + path + " is not a classifier checkpoint");
  if (nets.size() != 1) throw std::runtime_error("classifier: unexpected network count in " + path);
  ClassifierModel m;
  m.net = std::move(nets[0]);
  m.train_steps = hdr.step;
  m.hp.input_w = static_cast<int>(hdr.meta.at("input_w"));
  m.hp.input_h = static_cast<int>(hdr.meta.at("input_h"));
  m.hp.input_c = static_cast<int>(hdr.meta.at("input_c"));
  m.hp.conv1_ch = static_cast<int>(hdr.meta.at("conv1_ch"));
  m.hp.conv2_ch = static_cast<int>(hdr.meta.at("conv2_ch"));
  m.hp.feature_dim = static_cast<int>(hdr.meta.at("feature_dim"));
  return m;
}

std::string training_log_csv(const std::vector<EpochLog>& log) {
  std::string out = "epoch,mean_loss,accuracy\n";
  char buf[96];
  for (const auto& e : log) {
    std::snprintf(buf, sizeof(buf), "%d,%.9f,%.9f\n", e.epoch, e.mean_loss, e.accuracy);
    out += buf;
  }
  return out;
}

}  // namespace dfta::classifier
