#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dfta/labeled_image.hpp"
#include "dfta/nn.hpp"

namespace dfta::classifier {

// Small conv backbone: 2 x [conv3x3 + relu + maxpool2], flatten, batchnorm,
// dense(feature_dim) + relu, dense(2). The post-relu activation of the
// penultimate dense layer is the feature map used as the RL state.
struct Hyperparams {
  int input_w = 32;
  int input_h = 32;
  int input_c = 3;
  int conv1_ch = 12;
  int conv2_ch = 24;
  int feature_dim = 64;
  int epochs = 16;
  int batch_size = 64;
  float lr = 1e-3f;
  float weight_decay = 1e-6f;
};

struct ClassifierModel {
  nn::Network<float> net;
  Hyperparams hp;
  std::uint64_t train_steps = 0;  // optimizer steps taken, stored in checkpoints
};

ClassifierModel build(const Hyperparams& hp, std::uint64_t init_seed);

// image -> [1,C,H,W] tensor scaled to [0,1]
nn::Tensor<float> to_tensor(const Image& img);

struct EpochLog {
  int epoch = 0;
  double mean_loss = 0.0;
  double accuracy = 0.0;
};

// Adam + cross-entropy minibatch training; deterministic in seed. Rejects an
// empty or single-class dataset.
std::vector<EpochLog> train(ClassifierModel& model, const std::vector<LabeledImage>& dataset,
                            int epochs, int batch_size, std::uint64_t seed);

// one infer-mode forward shared by the per-image queries below
struct Evaluation {
  nn::Tensor<float> logits;          // [1,2]
  std::vector<float> feature;        // penultimate relu activations
  double prob_fake = 0.0;
};
Evaluation evaluate_image(const ClassifierModel& model, const Image& img);

double predict_proba(const ClassifierModel& model, const Image& img);
std::vector<float> feature_map(const ClassifierModel& model, const Image& img);
double loss_of(const ClassifierModel& model, const LabeledImage& sample);

void save(const ClassifierModel& model, const std::string& path);
ClassifierModel load(const std::string& path);

std::string training_log_csv(const std::vector<EpochLog>& log);

}  // namespace dfta::classifier
