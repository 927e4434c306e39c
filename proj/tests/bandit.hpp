#pragma once

// Deterministic contextual bandit with enumerable optimal actions. The
// oracle is exhaustive: the reward table is explicit, so the optimal action
// per context is just an argmax over it.

#include <vector>

#include "dfta/rl.hpp"
#include "dfta/rng.hpp"

namespace bandit {

using dfta::Rng;
using dfta::rl::FeatureMap;
using dfta::rl::Transition;

struct Bandit {
  std::vector<FeatureMap> contexts;           // [C] x dim
  std::vector<std::vector<double>> rewards;   // [C][A]

  int num_contexts() const { return static_cast<int>(contexts.size()); }
  int num_actions() const { return static_cast<int>(rewards[0].size()); }

  int optimal(int c) const {
    const auto& row = rewards[static_cast<std::size_t>(c)];
    int best = 0;
    for (int a = 1; a < static_cast<int>(row.size()); ++a)
      if (row[static_cast<std::size_t>(a)] > row[static_cast<std::size_t>(best)]) best = a;
    return best;
  }
};

// one-hot-ish contexts, rewards in [-0.5, 0.5] with the optimal action
// raised a clear margin above the runner-up
inline Bandit make_bandit(int n_contexts, int n_actions, int dim, std::uint64_t seed,
                          double margin = 0.4) {
  Bandit b;
  Rng rng(seed);
  for (int c = 0; c < n_contexts; ++c) {
    FeatureMap ctx(static_cast<std::size_t>(dim), 0.0f);
    ctx[static_cast<std::size_t>(c % dim)] = 1.0f;
    if (dim > n_contexts) ctx[static_cast<std::size_t>(n_contexts + c % (dim - n_contexts))] = 0.5f;
    b.contexts.push_back(ctx);
    std::vector<double> row(static_cast<std::size_t>(n_actions));
    for (auto& r : row) r = rng.uniform(-0.5, 0.5);
    int star = (3 * c + 1) % n_actions;
    double best_other = -1.0;
    for (int a = 0; a < n_actions; ++a)
      if (a != star) best_other = std::max(best_other, row[static_cast<std::size_t>(a)]);
    row[static_cast<std::size_t>(star)] = best_other + margin;
    b.rewards.push_back(row);
  }
  return b;
}

// drives the generic agent hooks over uniformly drawn contexts
inline void train_on_bandit(dfta::rl::Agent& agent, const Bandit& b, int episodes,
                            std::uint64_t seed) {
  Rng rng(seed);
  agent.begin_training(episodes);
  for (int ep = 0; ep < episodes; ++ep) {
    int c = rng.uniform_int(b.num_contexts());
    const FeatureMap& s = b.contexts[static_cast<std::size_t>(c)];
    int a = agent.choose_action(s, rng);
    Transition t;
    t.state = s;
    t.action = a;
    t.reward = static_cast<float>(b.rewards[static_cast<std::size_t>(c)][static_cast<std::size_t>(a)]);
    t.next_state = s;
    t.done = true;
    agent.observe(t, rng);
  }
  agent.finish_training(rng);
}

// fraction of contexts whose greedy action is optimal
inline double greedy_optimal_rate(dfta::rl::Agent& agent, const Bandit& b) {
  int hits = 0;
  for (int c = 0; c < b.num_contexts(); ++c) {
    auto scores = agent.action_scores(b.contexts[static_cast<std::size_t>(c)]);
    int best = 0;
    for (int a = 1; a < static_cast<int>(scores.size()); ++a)
      if (scores[static_cast<std::size_t>(a)] > scores[static_cast<std::size_t>(best)]) best = a;
    hits += best == b.optimal(c);
  }
  return static_cast<double>(hits) / b.num_contexts();
}

// mean probability mass the PPO policy puts on the optimal actions
inline double optimal_policy_mass(dfta::rl::PpoAgent& agent, const Bandit& b) {
  double mass = 0.0;
  for (int c = 0; c < b.num_contexts(); ++c) {
    auto probs = agent.action_scores(b.contexts[static_cast<std::size_t>(c)]);
    mass += probs[static_cast<std::size_t>(b.optimal(c))];
  }
  return mass / b.num_contexts();
}

}  // namespace bandit
