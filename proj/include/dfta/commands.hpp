#pragma once

#include <string>
#include <vector>

#include "dfta/config.hpp"
#include "dfta/metrics.hpp"

namespace dfta::cli {

// Subcommand bodies. Each returns a process exit code: 0 success, 2 bad
// config, 3 missing artifact, 4 runtime failure. They throw nothing; errors
// are printed to stderr.
int cmd_gen(const RunConfig& cfg, bool force);
int cmd_train(const RunConfig& cfg);
int cmd_train_agent(const RunConfig& cfg);
int cmd_eval(const RunConfig& cfg, EvalMode mode, int k);
int cmd_ablate(const RunConfig& cfg, int k_min, int k_max);
int cmd_report(const RunConfig& cfg);

// output file naming, shared with the tests
std::string dataset_path(const RunConfig& cfg, char domain, std::uint64_t seed);
std::string classifier_path(const RunConfig& cfg, std::uint64_t seed);
std::string agent_path(const RunConfig& cfg, std::uint64_t seed);
std::string train_log_path(const RunConfig& cfg, std::uint64_t seed);
std::string val_metrics_path(const RunConfig& cfg, std::uint64_t seed);
std::string reward_log_path(const RunConfig& cfg, std::uint64_t seed);
std::string eval_csv_path(const RunConfig& cfg, EvalMode mode, int k, std::uint64_t seed);
std::string audit_path(const RunConfig& cfg, EvalMode mode, int k, std::uint64_t seed);
std::string ablate_csv_path(const RunConfig& cfg, std::uint64_t seed);

// one evaluation cell: scores for a (mode, eval-domain, split) combination
struct EvalRow {
  std::string mode;
  std::string domain;
  int k = 0;
  std::uint64_t seed = 0;
  metrics::MetricReport report;
};
std::string eval_csv(const std::vector<EvalRow>& rows);

}  // namespace dfta::cli
