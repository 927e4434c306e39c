#include "dfta/tta.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <stdexcept>

namespace dfta::tta {

std::vector<int> select_top_k(const std::vector<float>& scores, int k) {
  if (k < 1 || k > static_cast<int>(scores.size()))
    throw std::invalid_argument("tta: k must be in [1," + std::to_string(scores.size()) + "]");
  std::vector<int> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
    return scores[static_cast<std::size_t>(a)] > scores[static_cast<std::size_t>(b)];
  });
  idx.resize(static_cast<std::size_t>(k));
  return idx;
}

TtaResult classify_with_tta(const classifier::ClassifierModel& model, rl::Agent& agent,
                            const Image& img, const TTAConfig& config,
                            const std::vector<augment::AugmentationAction>& bank) {
  if (static_cast<int>(bank.size()) != agent.num_actions())
    throw std::invalid_argument("tta: bank size does not match the agent's action space");
  auto state = classifier::feature_map(model, img);
  auto scores = agent.action_scores(state);
  TtaResult result;
  result.actions = select_top_k(scores, config.k);
  double sum = 0.0;
  for (int a : result.actions) {
    Image augmented = augment::apply(bank[static_cast<std::size_t>(a)], img);
    double p = classifier::predict_proba(model, augmented);
    result.per_action_probs.push_back(p);
    sum += p;
  }
  int n = config.k;
  if (config.include_original) {
    sum += classifier::predict_proba(model, img);
    n += 1;
  }
  result.fused = sum / n;
  return result;
}

std::string audit_record(const std::string& image_id, const TtaResult& result,
                         const std::vector<float>& scores,
                         const std::vector<augment::AugmentationAction>& bank, int label) {
  std::string out = "{\"image\":\"" + image_id + "\",\"actions\":[";
  for (std::size_t i = 0; i < result.actions.size(); ++i) {
    if (i) out += ",";
    out += "\"" + augment::op_name(bank[static_cast<std::size_t>(result.actions[i])].op) + "\"";
  }
  out += "],\"action_scores\":[";
  char buf[48];
  for (std::size_t i = 0; i < result.actions.size(); ++i) {
    if (i) out += ",";
    std::snprintf(buf, sizeof(buf), "%.9f",
                  static_cast<double>(scores[static_cast<std::size_t>(result.actions[i])]));
    out += buf;
  }
  out += "],\"per_action_probs\":[";
  for (std::size_t i = 0; i < result.per_action_probs.size(); ++i) {
    if (i) out += ",";
    std::snprintf(buf, sizeof(buf), "%.9f", result.per_action_probs[i]);
    out += buf;
  }
  std::snprintf(buf, sizeof(buf), "],\"fused\":%.9f,\"label\":%d}", result.fused, label);
  out += buf;
  return out;
}

}  // namespace dfta::tta
