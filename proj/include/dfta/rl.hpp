#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "dfta/augment.hpp"
#include "dfta/classifier.hpp"
#include "dfta/nn.hpp"
#include "dfta/rng.hpp"

namespace dfta::rl {

using FeatureMap = std::vector<float>;

struct Transition {
  FeatureMap state;
  int action = 0;
  float reward = 0.0f;
  FeatureMap next_state;
  bool done = true;
};

// The reward/state branch rule: reward is the signed loss improvement in
// both branches; the state advances to the augmented feature map only when
// the augmentation reduced the loss.
struct StepOutcome {
  double reward = 0.0;
  bool take_augmented = false;
};
StepOutcome reward_rule(double loss_before, double loss_after);

// One environment step against the frozen classifier: compares per-sample
// cross-entropy before and after the augmentation.
Transition env_step(const classifier::ClassifierModel& model, const LabeledImage& sample,
                    const augment::AugmentationAction& action, const FeatureMap& current_state,
                    bool done = true);

// ---------------------------------------------------------------------------

// Common agent surface: per-state action scores for the test stage, plus the
// hooks the training loop drives.
class Agent {
 public:
  virtual ~Agent() = default;
  virtual std::string kind() const = 0;
  virtual int state_dim() const = 0;
  virtual int num_actions() const = 0;
  // DQN: Q(s,.) from the online network; PPO: policy probabilities
  virtual std::vector<float> action_scores(const FeatureMap& state) = 0;

  virtual void begin_training(int total_steps) = 0;
  virtual int choose_action(const FeatureMap& state, Rng& rng) = 0;
  virtual void observe(const Transition& t, Rng& rng) = 0;
  virtual void finish_training(Rng& rng) = 0;
  virtual double exploration_rate() const = 0;

  virtual void save(const std::string& path) = 0;
};

// ---------------------------------------------------------------------------

struct DqnConfig {
  int state_dim = 64;
  int n_actions = 14;
  int hidden = 64;
  float gamma = 0.5f;
  float lr = 1e-3f;
  float weight_decay = 1e-6f;
  int replay_capacity = 10000;
  int batch_size = 64;
  int target_refresh = 100;  // online -> target copy interval, in updates
  float eps_start = 1.0f;    // linear decay over the first half of training
  float eps_end = 0.05f;
};

class DqnAgent : public Agent {
 public:
  DqnAgent(const DqnConfig& cfg, std::uint64_t init_seed);

  std::string kind() const override { return "dqn"; }
  int state_dim() const override { return cfg_.state_dim; }
  int num_actions() const override { return cfg_.n_actions; }
  std::vector<float> action_scores(const FeatureMap& state) override;

  void begin_training(int total_steps) override;
  int choose_action(const FeatureMap& state, Rng& rng) override;
  void observe(const Transition& t, Rng& rng) override;
  void finish_training(Rng& rng) override {}
  double exploration_rate() const override { return epsilon_; }
  void save(const std::string& path) override;

  // Bellman target: r for terminal transitions, else r + gamma * max target-Q
  double target_value(const Transition& t);
  // one optimization step on a minibatch; returns the mean squared TD loss
  double update_minibatch(const std::vector<Transition>& batch);

  const DqnConfig& config() const { return cfg_; }
  std::size_t buffer_size() const { return buffer_.size(); }
  nn::Network<float>& online_network() { return online_; }
  nn::Network<float>& target_network() { return target_; }

  static DqnAgent load(const std::string& path);

 private:
  DqnConfig cfg_;
  nn::Network<float> online_, target_;
  nn::AdamState<float> opt_;
  std::vector<Transition> buffer_;  // ring, FIFO eviction
  std::size_t buffer_next_ = 0;
  long updates_ = 0;
  long steps_seen_ = 0;
  long total_steps_ = 0;
  double epsilon_ = 1.0;
};

// ---------------------------------------------------------------------------

struct PpoConfig {
  int state_dim = 64;
  int n_actions = 14;
  int hidden = 64;
  float clip_eps = 0.2f;
  float entropy_weight = 0.01f;
  int rollout_size = 256;
  int epochs = 4;  // optimization epochs per rollout
  float lr = 1e-3f;
  float weight_decay = 1e-6f;
};

struct RolloutStep {
  FeatureMap state;
  int action = 0;
  float reward = 0.0f;
  float logprob_old = 0.0f;  // log pi_old(a|s) at collection time
};

class PpoAgent : public Agent {
 public:
  PpoAgent(const PpoConfig& cfg, std::uint64_t init_seed);

  std::string kind() const override { return "ppo"; }
  int state_dim() const override { return cfg_.state_dim; }
  int num_actions() const override { return cfg_.n_actions; }
  std::vector<float> action_scores(const FeatureMap& state) override;  // softmax probs

  void begin_training(int total_steps) override;
  int choose_action(const FeatureMap& state, Rng& rng) override;
  void observe(const Transition& t, Rng& rng) override;
  void finish_training(Rng& rng) override;
  double exploration_rate() const override;  // mean policy entropy, normalized
  void save(const std::string& path) override;

  // horizon-1 advantages r - V(s), normalized to zero mean / unit variance
  // when there is more than one step
  std::vector<double> advantages(const std::vector<RolloutStep>& rollout);
  // clipped surrogate contribution for one (ratio, advantage) pair
  static double clip_objective(double ratio, double advantage, double clip_eps);
  // optimize actor and critic on a rollout; returns (actor loss, critic loss)
  // from the first epoch
  std::pair<double, double> update(const std::vector<RolloutStep>& rollout, int epochs);

  const PpoConfig& config() const { return cfg_; }
  nn::Network<float>& actor_network() { return actor_; }
  nn::Network<float>& critic_network() { return critic_; }

  static PpoAgent load(const std::string& path);

 private:
  PpoConfig cfg_;
  nn::Network<float> actor_, critic_;
  nn::AdamState<float> opt_actor_, opt_critic_;
  std::vector<RolloutStep> rollout_;
  bool has_pending_ = false;
  RolloutStep pending_;
  double mean_entropy_ = 0.0;
  std::uint64_t updates_ = 0;
};

// ---------------------------------------------------------------------------

std::unique_ptr<Agent> load_agent(const std::string& path);

struct EpisodeLog {
  int episode = 0;
  double reward = 0.0;        // summed over the episode's steps
  double moving_avg = 0.0;    // trailing window mean
  double exploration = 0.0;
};

// Iterates over the training samples, running `horizon` env steps per
// episode against the frozen classifier. Deterministic in seed.
std::vector<EpisodeLog> train_agent(Agent& agent, const classifier::ClassifierModel& model,
                                    const std::vector<LabeledImage>& training_set,
                                    const std::vector<augment::AugmentationAction>& bank,
                                    int episodes, int horizon, std::uint64_t seed);

std::string reward_log_csv(const std::vector<EpisodeLog>& log);

}  // namespace dfta::rl
