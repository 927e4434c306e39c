#pragma once

#include <string>
#include <vector>

#include "dfta/augment.hpp"
#include "dfta/classifier.hpp"
#include "dfta/rl.hpp"

namespace dfta::tta {

struct TTAConfig {
  int k = 3;
  bool include_original = false;
};

// indices of the k largest scores, descending; ties break toward the lower
// index, so the result is fully deterministic
std::vector<int> select_top_k(const std::vector<float>& scores, int k);

struct TtaResult {
  double fused = 0.0;                    // mean fake-probability
  std::vector<int> actions;              // chosen bank indices, score order
  std::vector<double> per_action_probs;  // classifier output per chosen action
};

// Testing stage: rank the bank by the agent's scores for this image's
// feature map, apply the top-k augmentations, average the classifier's
// fake-probabilities (optionally including the unaugmented image).
TtaResult classify_with_tta(const classifier::ClassifierModel& model, rl::Agent& agent,
                            const Image& img, const TTAConfig& config,
                            const std::vector<augment::AugmentationAction>& bank);

// one JSON line per image for the audit trail
std::string audit_record(const std::string& image_id, const TtaResult& result,
                         const std::vector<float>& scores,
                         const std::vector<augment::AugmentationAction>& bank, int label);

}  // namespace dfta::tta
