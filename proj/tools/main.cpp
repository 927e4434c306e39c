#include <CLI11.hpp>

#include <iostream>

#include "dfta/commands.hpp"
#include "dfta/config.hpp"

using namespace dfta::cli;

namespace {

struct CommonFlags {
  std::string config_path;
  std::string out_dir;
  std::int64_t seed = -1;
  std::string agent_kind;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config_path, "configuration file (key = value)");
  cmd->add_option("--out", f.out_dir, "output directory (overrides out_dir)");
  cmd->add_option("--seed", f.seed, "single seed (overrides the seeds list)");
  cmd->add_option("--agent", f.agent_kind, "agent kind: dqn or ppo")
      ->check(CLI::IsMember({"dqn", "ppo"}));
}

// defaults -> config file -> command-line flags
RunConfig resolve(const CommonFlags& f) {
  RunConfig cfg = f.config_path.empty() ? parse_config_text(default_config_text())
                                        : load_config(f.config_path);
  if (!f.out_dir.empty()) cfg.out_dir = f.out_dir;
  if (f.seed >= 0) cfg.seeds = {static_cast<std::uint64_t>(f.seed)};
  if (!f.agent_kind.empty()) cfg.agent.kind = f.agent_kind;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"policy-selected test-time augmentation for real/fake image classification"};
  app.require_subcommand(1);

  CommonFlags gen_f, train_f, agent_f, eval_f, ablate_f, report_f, init_f;
  bool force = false;
  std::string mode_str = "learned";
  int k = -1;
  int k_min = 1, k_max = 5;
  std::string split_str;
  std::string init_path = "dfta.cfg";

  auto* gen = app.add_subcommand("gen", "generate the two-domain synthetic datasets");
  add_common(gen, gen_f);
  gen->add_flag("--force", force, "overwrite existing dataset files");

  auto* train = app.add_subcommand("train", "train the classifier on domain a");
  add_common(train, train_f);

  auto* train_agent = app.add_subcommand("train-agent", "train the augmentation-selection agent");
  add_common(train_agent, agent_f);

  auto* eval = app.add_subcommand("eval", "evaluate with no/random/learned test-time augmentation");
  add_common(eval, eval_f);
  eval->add_option("--mode", mode_str, "none, random, or learned")
      ->check(CLI::IsMember({"none", "random", "learned"}));
  eval->add_option("--k", k, "number of augmentations to fuse");
  eval->add_option("--split", split_str, "evaluation split: val or test")
      ->check(CLI::IsMember({"val", "test"}));

  auto* ablate = app.add_subcommand("ablate", "sweep k for learned test-time augmentation");
  add_common(ablate, ablate_f);
  ablate->add_option("--kmin", k_min, "smallest k");
  ablate->add_option("--kmax", k_max, "largest k");

  auto* report = app.add_subcommand("report", "aggregate eval/ablate csv files into a table");
  add_common(report, report_f);

  auto* init = app.add_subcommand("init-config", "write a template configuration file");
  init->add_option("path", init_path, "where to write the template");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_gen(resolve(gen_f), force);
    if (train->parsed()) return cmd_train(resolve(train_f));
    if (train_agent->parsed()) return cmd_train_agent(resolve(agent_f));
    if (eval->parsed()) {
      RunConfig cfg = resolve(eval_f);
      if (!split_str.empty()) cfg.eval_split = split_from_string(split_str);
      return cmd_eval(cfg, eval_mode_from_string(mode_str), k > 0 ? k : cfg.tta.k);
    }
    if (ablate->parsed()) return cmd_ablate(resolve(ablate_f), k_min, k_max);
    if (report->parsed()) return cmd_report(resolve(report_f));
    if (init->parsed()) {
      std::ofstream os(init_path);
      if (!os) {
        std::cerr << "init-config: cannot write " << init_path << "\n";
        return 4;
      }
      os << default_config_text();
      std::cout << "wrote " << init_path << "\n";
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const MissingArtifact& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
  return 0;
}
