#include "dfta/rl.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>

namespace dfta::rl {

using nn::LayerCache;
using nn::Tensor;

StepOutcome reward_rule(double loss_before, double loss_after) {
  StepOutcome out;
  out.reward = loss_before - loss_after;
  out.take_augmented = loss_after < loss_before;
  return out;
}

Transition env_step(const classifier::ClassifierModel& model, const LabeledImage& sample,
                    const augment::AugmentationAction& action, const FeatureMap& current_state,
                    bool done) {
  double l1 = classifier::loss_of(model, sample);
  Image augmented = augment::apply(action, sample.image);
  auto ev = classifier::evaluate_image(model, augmented);
  double l2 = nn::cross_entropy(ev.logits, sample.label);
  if (!std::isfinite(l1) || !std::isfinite(l2))
    throw std::runtime_error("env_step: non-finite loss");
  StepOutcome out = reward_rule(l1, l2);
  Transition t;
  t.state = current_state;
  t.action = static_cast<int>(action.op);
  t.reward = static_cast<float>(out.reward);
  t.next_state = out.take_augmented ? ev.feature : current_state;
  t.done = done;
  return t;
}

// ---------------------------------------------------------------------------

namespace {

nn::Network<float> make_mlp(int in, int hidden, int out, std::uint64_t seed) {
  nn::Network<float> net({in});
  net.add<nn::Dense<float>>(in, hidden);
  net.add<nn::Relu<float>>();
  net.add<nn::Dense<float>>(hidden, out);
  Rng rng(seed);
  nn::init_network(net, rng);
  return net;
}

Tensor<float> state_tensor(const FeatureMap& s) {
  Tensor<float> t({1, static_cast<int>(s.size())});
  t.data = s;
  return t;
}

Tensor<float> states_tensor(const std::vector<const FeatureMap*>& states, int dim) {
  Tensor<float> t({static_cast<int>(states.size()), dim});
  std::size_t off = 0;
  for (const auto* s : states) {
    if (static_cast<int>(s->size()) != dim)
      throw std::invalid_argument("agent: state dimension mismatch");
    std::copy(s->begin(), s->end(), t.data.begin() + static_cast<std::ptrdiff_t>(off));
    off += s->size();
  }
  return t;
}

int argmax_lowest_index(const float* v, int n) {
  int best = 0;
  for (int i = 1; i < n; ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

std::vector<double> softmax_double(const float* logits, int n) {
  double m = logits[0];
  for (int i = 1; i < n; ++i) m = std::max(m, static_cast<double>(logits[i]));
  std::vector<double> p(static_cast<std::size_t>(n));
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    p[static_cast<std::size_t>(i)] = std::exp(static_cast<double>(logits[i]) - m);
    sum += p[static_cast<std::size_t>(i)];
  }
  for (auto& v : p) v /= sum;
  return p;
}

constexpr std::int64_t kMilli = 1000000;  // fixed-point scale for float meta

}  // namespace

// ---------------------------------------------------------------------------
// DQN

DqnAgent::DqnAgent(const DqnConfig& cfg, std::uint64_t init_seed)
    : cfg_(cfg),
      online_(make_mlp(cfg.state_dim, cfg.hidden, cfg.n_actions, Rng::mix(init_seed, 0xD41ULL))),
      target_(make_mlp(cfg.state_dim, cfg.hidden, cfg.n_actions, Rng::mix(init_seed, 0xD41ULL))) {
  target_.copy_from(online_);
  opt_.lr = cfg.lr;
  opt_.weight_decay = cfg.weight_decay;
  epsilon_ = cfg.eps_start;
  buffer_.reserve(static_cast<std::size_t>(cfg.replay_capacity));
}

std::vector<float> DqnAgent::action_scores(const FeatureMap& state) {
  if (static_cast<int>(state.size()) != cfg_.state_dim)
    throw std::invalid_argument("dqn: state dimension mismatch");
  return online_.forward(state_tensor(state), false).data;
}

void DqnAgent::begin_training(int total_steps) {
  total_steps_ = total_steps;
  steps_seen_ = 0;
  epsilon_ = cfg_.eps_start;
}

int DqnAgent::choose_action(const FeatureMap& state, Rng& rng) {
  if (total_steps_ > 0) {
    // linear decay over the first half of training, flat afterwards
    double progress = std::min(1.0, 2.0 * static_cast<double>(steps_seen_) / total_steps_);
    epsilon_ = cfg_.eps_start + (cfg_.eps_end - cfg_.eps_start) * progress;
  }
  if (rng.uniform() < epsilon_) return rng.uniform_int(cfg_.n_actions);
  auto q = action_scores(state);
  return argmax_lowest_index(q.data(), cfg_.n_actions);
}

void DqnAgent::observe(const Transition& t, Rng& rng) {
  if (t.action < 0 || t.action >= cfg_.n_actions)
    throw std::invalid_argument("dqn: action out of range");
  if (!std::isfinite(t.reward)) throw std::invalid_argument("dqn: non-finite reward");
  steps_seen_++;
  if (buffer_.size() < static_cast<std::size_t>(cfg_.replay_capacity)) {
    buffer_.push_back(t);
  } else {
    buffer_[buffer_next_] = t;
    buffer_next_ = (buffer_next_ + 1) % buffer_.size();
  }
  if (buffer_.size() >= static_cast<std::size_t>(cfg_.batch_size)) {
    std::vector<Transition> batch;
    batch.reserve(static_cast<std::size_t>(cfg_.batch_size));
    for (int i = 0; i < cfg_.batch_size; ++i)
      batch.push_back(buffer_[static_cast<std::size_t>(rng.uniform_int(static_cast<int>(buffer_.size())))]);
    update_minibatch(batch);
  }
}

double DqnAgent::target_value(const Transition& t) {
  if (t.done) return t.reward;
  auto q_next = target_.forward(state_tensor(t.next_state), false);
  double best = q_next[0];
  for (int a = 1; a < cfg_.n_actions; ++a) best = std::max(best, static_cast<double>(q_next[static_cast<std::size_t>(a)]));
  return t.reward + cfg_.gamma * best;
}

double DqnAgent::update_minibatch(const std::vector<Transition>& batch) {
  if (batch.empty()) throw std::invalid_argument("dqn: empty minibatch");
  int b = static_cast<int>(batch.size());

  std::vector<double> y(static_cast<std::size_t>(b));
  for (int i = 0; i < b; ++i) y[static_cast<std::size_t>(i)] = target_value(batch[static_cast<std::size_t>(i)]);

  std::vector<const FeatureMap*> states;
  for (const auto& t : batch) states.push_back(&t.state);
  std::vector<LayerCache<float>> caches;
  Tensor<float> q = online_.forward(states_tensor(states, cfg_.state_dim), true, &caches);

  Tensor<float> dq(q.shape);
  double loss = 0.0;
  for (int i = 0; i < b; ++i) {
    std::size_t idx = static_cast<std::size_t>(i) * cfg_.n_actions +
                      static_cast<std::size_t>(batch[static_cast<std::size_t>(i)].action);
    double resid = static_cast<double>(q[idx]) - y[static_cast<std::size_t>(i)];
    loss += resid * resid;
    dq[idx] = static_cast<float>(2.0 * resid / b);
  }
  loss /= b;

  online_.zero_grad();
  online_.backward(dq, caches);
  nn::adam_step(opt_, online_.params(), online_.grads());

  updates_++;
  if (cfg_.target_refresh > 0 && updates_ % cfg_.target_refresh == 0) target_.copy_from(online_);
  return loss;
}

void DqnAgent::save(const std::string& path) {
  nn::CheckpointHeader hdr;
  hdr.kind = 1;
  hdr.step = static_cast<std::uint64_t>(updates_);
  hdr.meta["state_dim"] = cfg_.state_dim;
  hdr.meta["n_actions"] = cfg_.n_actions;
  hdr.meta["hidden"] = cfg_.hidden;
  hdr.meta["gamma_fp"] = static_cast<std::int64_t>(std::llround(cfg_.gamma * kMilli));
  hdr.meta["lr_fp"] = static_cast<std::int64_t>(std::llround(cfg_.lr * kMilli));
  hdr.meta["replay_capacity"] = cfg_.replay_capacity;
  hdr.meta["batch_size"] = cfg_.batch_size;
  hdr.meta["target_refresh"] = cfg_.target_refresh;
  nn::save_checkpoint<float>(path, hdr, {&online_, &target_});
}

DqnAgent DqnAgent::load(const std::string& path) {
  nn::CheckpointHeader hdr;
  auto nets = nn::load_checkpoint<float>(path, &hdr);
  if (hdr.kind != 1) throw std::runtime_error("dqn: " + path + " is not a dqn checkpoint");
  if (nets.size() != 2) throw std::runtime_error("dqn: unexpected network count in " + path);
  DqnConfig cfg;
  cfg.state_dim = static_cast<int>(hdr.meta.at("state_dim"));
  cfg.n_actions = static_cast<int>(hdr.meta.at("n_actions"));
  cfg.hidden = static_cast<int>(hdr.meta.at("hidden"));
  cfg.gamma = static_cast<float>(hdr.meta.at("gamma_fp")) / kMilli;
  cfg.lr = static_cast<float>(hdr.meta.at("lr_fp")) / kMilli;
  cfg.replay_capacity = static_cast<int>(hdr.meta.at("replay_capacity"));
  cfg.batch_size = static_cast<int>(hdr.meta.at("batch_size"));
  cfg.target_refresh = static_cast<int>(hdr.meta.at("target_refresh"));
  DqnAgent agent(cfg, 0);
  agent.online_ = std::move(nets[0]);
  agent.target_ = std::move(nets[1]);
  agent.updates_ = static_cast<long>(hdr.step);
  return agent;
}

// ---------------------------------------------------------------------------
// PPO

PpoAgent::PpoAgent(const PpoConfig& cfg, std::uint64_t init_seed)
    : cfg_(cfg),
      actor_(make_mlp(cfg.state_dim, cfg.hidden, cfg.n_actions, Rng::mix(init_seed, 0xAC7ULL))),
      critic_(make_mlp(cfg.state_dim, cfg.hidden, 1, Rng::mix(init_seed, 0xC21ULL))) {
  opt_actor_.lr = cfg.lr;
  opt_actor_.weight_decay = cfg.weight_decay;
  opt_critic_.lr = cfg.lr;
  opt_critic_.weight_decay = cfg.weight_decay;
  mean_entropy_ = std::log(static_cast<double>(cfg.n_actions));
  rollout_.reserve(static_cast<std::size_t>(cfg.rollout_size));
}

std::vector<float> PpoAgent::action_scores(const FeatureMap& state) {
  if (static_cast<int>(state.size()) != cfg_.state_dim)
    throw std::invalid_argument("ppo: state dimension mismatch");
  auto logits = actor_.forward(state_tensor(state), false);
  auto p = softmax_double(logits.data.data(), cfg_.n_actions);
  std::vector<float> out(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) out[i] = static_cast<float>(p[i]);
  return out;
}

void PpoAgent::begin_training(int) {
  rollout_.clear();
  has_pending_ = false;
}

int PpoAgent::choose_action(const FeatureMap& state, Rng& rng) {
  auto logits = actor_.forward(state_tensor(state), false);
  auto p = softmax_double(logits.data.data(), cfg_.n_actions);
  double u = rng.uniform();
  double acc = 0.0;
  int action = cfg_.n_actions - 1;
  for (int a = 0; a < cfg_.n_actions; ++a) {
    acc += p[static_cast<std::size_t>(a)];
    if (u < acc) {
      action = a;
      break;
    }
  }
  pending_.state = state;
  pending_.action = action;
  pending_.logprob_old = static_cast<float>(std::log(std::max(p[static_cast<std::size_t>(action)], 1e-12)));
  has_pending_ = true;
  return action;
}

void PpoAgent::observe(const Transition& t, Rng& rng) {
  if (!has_pending_ || pending_.action != t.action)
    throw std::logic_error("ppo: observe() must follow the matching choose_action()");
  if (!std::isfinite(t.reward)) throw std::invalid_argument("ppo: non-finite reward");
  pending_.reward = t.reward;
  rollout_.push_back(pending_);
  has_pending_ = false;
  if (static_cast<int>(rollout_.size()) >= cfg_.rollout_size) {
    update(rollout_, cfg_.epochs);
    rollout_.clear();
  }
  (void)rng;
}

void PpoAgent::finish_training(Rng&) {
  if (rollout_.size() >= 2) update(rollout_, cfg_.epochs);
  rollout_.clear();
  has_pending_ = false;
}

double PpoAgent::exploration_rate() const {
  return mean_entropy_ / std::log(static_cast<double>(cfg_.n_actions));
}

std::vector<double> PpoAgent::advantages(const std::vector<RolloutStep>& rollout) {
  if (rollout.empty()) throw std::invalid_argument("ppo: empty rollout");
  std::vector<const FeatureMap*> states;
  for (const auto& s : rollout) states.push_back(&s.state);
  Tensor<float> v = critic_.forward(states_tensor(states, cfg_.state_dim), false);
  std::vector<double> adv(rollout.size());
  for (std::size_t i = 0; i < rollout.size(); ++i)
    adv[i] = static_cast<double>(rollout[i].reward) - static_cast<double>(v[i]);
  if (adv.size() > 1) {
    double mean = std::accumulate(adv.begin(), adv.end(), 0.0) / static_cast<double>(adv.size());
    double var = 0.0;
    for (double a : adv) var += (a - mean) * (a - mean);
    var /= static_cast<double>(adv.size());
    double inv = 1.0 / (std::sqrt(var) + 1e-8);
    for (double& a : adv) a = (a - mean) * inv;
  }
  return adv;
}

double PpoAgent::clip_objective(double ratio, double advantage, double clip_eps) {
  double clipped = std::clamp(ratio, 1.0 - clip_eps, 1.0 + clip_eps);
  return std::min(ratio * advantage, clipped * advantage);
}

std::pair<double, double> PpoAgent::update(const std::vector<RolloutStep>& rollout, int epochs) {
  if (rollout.empty()) throw std::invalid_argument("ppo: empty rollout");
  int b = static_cast<int>(rollout.size());
  std::vector<double> adv = advantages(rollout);

  std::vector<const FeatureMap*> states;
  for (const auto& s : rollout) states.push_back(&s.state);
  Tensor<float> sbatch = states_tensor(states, cfg_.state_dim);

  double first_actor_loss = 0.0, first_critic_loss = 0.0;
  for (int epoch = 0; epoch < epochs; ++epoch) {
    // actor: ascend the clipped surrogate plus entropy bonus
    std::vector<LayerCache<float>> caches;
    Tensor<float> logits = actor_.forward(sbatch, true, &caches);
    Tensor<float> dlogits(logits.shape);
    double obj_sum = 0.0, ent_sum = 0.0;
    for (int i = 0; i < b; ++i) {
      const auto& step = rollout[static_cast<std::size_t>(i)];
      const float* row = logits.data.data() + static_cast<std::size_t>(i) * cfg_.n_actions;
      auto p = softmax_double(row, cfg_.n_actions);
      double logp_a = std::log(std::max(p[static_cast<std::size_t>(step.action)], 1e-12));
      double ratio = std::exp(logp_a - static_cast<double>(step.logprob_old));
      double a_hat = adv[static_cast<std::size_t>(i)];
      double u1 = ratio * a_hat;
      double u2 = std::clamp(ratio, 1.0 - static_cast<double>(cfg_.clip_eps),
                             1.0 + static_cast<double>(cfg_.clip_eps)) * a_hat;
      obj_sum += std::min(u1, u2);
      // surrogate gradient flows only through the unclipped branch
      double coef = u1 <= u2 ? ratio * a_hat : 0.0;
      double entropy = 0.0;
      for (int j = 0; j < cfg_.n_actions; ++j) {
        double pj = p[static_cast<std::size_t>(j)];
        if (pj > 0.0) entropy -= pj * std::log(pj);
      }
      ent_sum += entropy;
      float* grow = dlogits.data.data() + static_cast<std::size_t>(i) * cfg_.n_actions;
      for (int j = 0; j < cfg_.n_actions; ++j) {
        double pj = p[static_cast<std::size_t>(j)];
        double indicator = j == step.action ? 1.0 : 0.0;
        double d_obj = coef * (indicator - pj);
        double d_ent = -pj * (std::log(std::max(pj, 1e-12)) + entropy);
        grow[j] = static_cast<float>((-d_obj - cfg_.entropy_weight * d_ent) / b);
      }
    }
    double actor_loss = -(obj_sum / b) - cfg_.entropy_weight * (ent_sum / b);
    actor_.zero_grad();
    actor_.backward(dlogits, caches);
    nn::adam_step(opt_actor_, actor_.params(), actor_.grads());

    // critic: squared error against the episode return
    std::vector<LayerCache<float>> vcaches;
    Tensor<float> v = critic_.forward(sbatch, true, &vcaches);
    Tensor<float> dv(v.shape);
    double critic_loss = 0.0;
    for (int i = 0; i < b; ++i) {
      double resid = static_cast<double>(v[static_cast<std::size_t>(i)]) -
                     static_cast<double>(rollout[static_cast<std::size_t>(i)].reward);
      critic_loss += resid * resid;
      dv[static_cast<std::size_t>(i)] = static_cast<float>(2.0 * resid / b);
    }
    critic_loss /= b;
    critic_.zero_grad();
    critic_.backward(dv, vcaches);
    nn::adam_step(opt_critic_, critic_.params(), critic_.grads());

    if (epoch == 0) {
      first_actor_loss = actor_loss;
      first_critic_loss = critic_loss;
      mean_entropy_ = ent_sum / b;
    }
  }
  updates_++;
  return {first_actor_loss, first_critic_loss};
}

void PpoAgent::save(const std::string& path) {
  nn::CheckpointHeader hdr;
  hdr.kind = 2;
  hdr.step = updates_;
  hdr.meta["state_dim"] = cfg_.state_dim;
  hdr.meta["n_actions"] = cfg_.n_actions;
  hdr.meta["hidden"] = cfg_.hidden;
  hdr.meta["clip_fp"] = static_cast<std::int64_t>(std::llround(cfg_.clip_eps * kMilli));
  hdr.meta["entropy_fp"] = static_cast<std::int64_t>(std::llround(cfg_.entropy_weight * kMilli));
  hdr.meta["rollout_size"] = cfg_.rollout_size;
  hdr.meta["epochs"] = cfg_.epochs;
  hdr.meta["lr_fp"] = static_cast<std::int64_t>(std::llround(cfg_.lr * kMilli));
  nn::save_checkpoint<float>(path, hdr, {&actor_, &critic_});
}

PpoAgent PpoAgent::load(const std::string& path) {
  nn::CheckpointHeader hdr;
  auto nets = nn::load_checkpoint<float>(path, &hdr);
  if (hdr.kind != 2) throw std::runtime_error("ppo: " + path + " is not a ppo checkpoint");
  if (nets.size() != 2) throw std::runtime_error("ppo: unexpected network count in " + path);
  PpoConfig cfg;
  cfg.state_dim = static_cast<int>(hdr.meta.at("state_dim"));
  cfg.n_actions = static_cast<int>(hdr.meta.at("n_actions"));
  cfg.hidden = static_cast<int>(hdr.meta.at("hidden"));
  cfg.clip_eps = static_cast<float>(hdr.meta.at("clip_fp")) / kMilli;
  cfg.entropy_weight = static_cast<float>(hdr.meta.at("entropy_fp")) / kMilli;
  cfg.rollout_size = static_cast<int>(hdr.meta.at("rollout_size"));
  cfg.epochs = static_cast<int>(hdr.meta.at("epochs"));
  cfg.lr = static_cast<float>(hdr.meta.at("lr_fp")) / kMilli;
  PpoAgent agent(cfg, 0);
  agent.actor_ = std::move(nets[0]);
  agent.critic_ = std::move(nets[1]);
  agent.updates_ = hdr.step;
  return agent;
}

// ---------------------------------------------------------------------------

std::unique_ptr<Agent> load_agent(const std::string& path) {
  nn::CheckpointHeader hdr;
  nn::load_checkpoint<float>(path, &hdr);  // header sniff
  switch (hdr.kind) {
    case 1: return std::make_unique<DqnAgent>(DqnAgent::load(path));
    case 2: return std::make_unique<PpoAgent>(PpoAgent::load(path));
    default:
      throw std::runtime_error("agent: " + path + " does not hold an agent checkpoint (kind " +
                               std::to_string(hdr.kind) + ")");
  }
}

std::vector<EpisodeLog> train_agent(Agent& agent, const classifier::ClassifierModel& model,
                                    const std::vector<LabeledImage>& training_set,
                                    const std::vector<augment::AugmentationAction>& bank,
                                    int episodes, int horizon, std::uint64_t seed) {
  if (training_set.empty()) throw std::invalid_argument("train_agent: empty training set");
  if (bank.empty() || static_cast<int>(bank.size()) != agent.num_actions())
    throw std::invalid_argument("train_agent: bank size does not match the agent's action space");
  if (episodes < 1 || horizon < 1)
    throw std::invalid_argument("train_agent: episodes and horizon must be positive");
  if (agent.state_dim() != model.hp.feature_dim)
    throw std::invalid_argument("train_agent: agent state dim does not match the feature map");

  // the classifier is frozen: cache each sample's loss and feature map once
  struct SampleInfo {
    double loss;
    FeatureMap feature;
  };
  std::vector<SampleInfo> info;
  info.reserve(training_set.size());
  for (const auto& li : training_set) {
    auto ev = classifier::evaluate_image(model, li.image);
    info.push_back({nn::cross_entropy(ev.logits, li.label), std::move(ev.feature)});
  }

  Rng rng(Rng::mix(seed, 0xA6E27ULL));
  std::vector<int> order(training_set.size());
  std::iota(order.begin(), order.end(), 0);

  agent.begin_training(episodes * horizon);
  std::vector<EpisodeLog> log;
  log.reserve(static_cast<std::size_t>(episodes));
  constexpr int kWindow = 100;
  double window_sum = 0.0;

  for (int ep = 0; ep < episodes; ++ep) {
    std::size_t pos = static_cast<std::size_t>(ep) % training_set.size();
    if (pos == 0) rng.shuffle(order);
    const LabeledImage& sample = training_set[static_cast<std::size_t>(order[pos])];
    const SampleInfo& base = info[static_cast<std::size_t>(order[pos])];

    Image current = sample.image;
    double loss_before = base.loss;
    FeatureMap state = base.feature;
    double episode_reward = 0.0;

    for (int step = 0; step < horizon; ++step) {
      int a = agent.choose_action(state, rng);
      bool done = step == horizon - 1;
      Transition t;
      if (bank[static_cast<std::size_t>(a)].op == augment::Op::identity) {
        // identity never changes the image; skip the redundant forward
        t = Transition{state, a, 0.0f, state, done};
      } else {
        Image augmented = augment::apply(bank[static_cast<std::size_t>(a)], current);
        auto ev = classifier::evaluate_image(model, augmented);
        double l2 = nn::cross_entropy(ev.logits, sample.label);
        StepOutcome out = reward_rule(loss_before, l2);
        t.state = state;
        t.action = a;
        t.reward = static_cast<float>(out.reward);
        t.next_state = out.take_augmented ? ev.feature : state;
        t.done = done;
        if (out.take_augmented && !done) {
          current = std::move(augmented);
          loss_before = l2;
        }
      }
      agent.observe(t, rng);
      episode_reward += t.reward;
      state = t.next_state;
    }

    window_sum += episode_reward;
    if (ep >= kWindow) window_sum -= log[static_cast<std::size_t>(ep - kWindow)].reward;
    EpisodeLog entry;
    entry.episode = ep;
    entry.reward = episode_reward;
    entry.moving_avg = window_sum / std::min(ep + 1, kWindow);
    entry.exploration = agent.exploration_rate();
    log.push_back(entry);
  }
  agent.finish_training(rng);
  return log;
}

std::string reward_log_csv(const std::vector<EpisodeLog>& log) {
  std::string out = "episode,mean_reward,exploration_rate\n";
  char buf[96];
  for (const auto& e : log) {
    std::snprintf(buf, sizeof(buf), "%d,%.9f,%.9f\n", e.episode, e.moving_avg, e.exploration);
    out += buf;
  }
  return out;
}

}  // namespace dfta::rl
