#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "dfta/classifier.hpp"
#include "dfta/rl.hpp"
#include "dfta/synthdata.hpp"
#include "dfta/tta.hpp"

namespace dfta::cli {

// thrown on schema violations; the cli maps it to exit code 2
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
// thrown when a required input file is missing; exit code 3
struct MissingArtifact : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class EvalMode { none, random, learned };
EvalMode eval_mode_from_string(const std::string& s);
const char* to_string(EvalMode m);

enum class Split { val, test };
Split split_from_string(const std::string& s);
const char* to_string(Split s);

struct AgentParams {
  std::string kind = "ppo";  // dqn | ppo
  int episodes = 8000;
  int horizon = 1;
  int hidden = 64;
  float lr = 3e-3f;
  // dqn
  float gamma = 0.5f;
  int replay_capacity = 10000;
  int batch_size = 64;
  int target_refresh = 100;
  float eps_start = 1.0f;
  float eps_end = 0.05f;
  // ppo
  float clip_eps = 0.2f;
  float entropy_weight = 0.01f;
  int rollout_size = 128;
  int ppo_epochs = 4;
};

struct RunConfig {
  std::string out_dir = "runs/out";
  std::vector<std::uint64_t> seeds = {1};
  int bank_size = augment::kOpCount;

  synthdata::DatasetManifest data;
  // optional pre-existing datasets; when set, cmd_gen/loads use them instead
  // of the generator
  std::string data_path_a;
  std::string data_path_b;
  synthdata::DomainSpec domain_a;
  synthdata::DomainSpec domain_b;

  classifier::Hyperparams cls;
  AgentParams agent;
  tta::TTAConfig tta;

  Split eval_split = Split::test;
  double fpr_ceiling = 0.1;

  std::vector<augment::AugmentationAction> bank() const { return augment::default_bank(bank_size); }
};

// flat key = value text with [section] headers and # comments; unknown keys
// are rejected
RunConfig parse_config_text(const std::string& text);
RunConfig load_config(const std::string& path);

// the documented schema with current defaults, suitable as a starting config
std::string default_config_text();

}  // namespace dfta::cli
