#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "pursuitlab/errors.hpp"
#include "pursuitlab/harness.hpp"

using namespace pursuitlab;

int main(int argc, char** argv) {
  CLI::App app{"UAV pursuit policy lab: trains and verifies candidate-reward "
               "normalization and composite-policy consistency"};
  app.require_subcommand(1);

  CliTrainOptions train_opt;
  uint64_t seed_value = 0;
  int updates = 0, k_value = 0, rollout = 0;
  auto* train = app.add_subcommand("train", "train a policy from a scenario config");
  train->add_option("--config", train_opt.config_path, "scenario config path")->required();
  train->add_option("--out", train_opt.out_dir, "output directory")->required();
  auto* train_seed = train->add_option("--seed", seed_value, "trainer seed");
  train->add_flag("--no-nar", train_opt.no_nar, "use raw dense rewards as step rewards");
  train->add_flag("--no-cp", train_opt.no_cp, "disable the consistency loss");
  train->add_flag("--no-adv-norm", train_opt.no_adv_norm, "disable advantage normalization");
  auto* train_updates = train->add_option("--updates", updates, "number of updates");
  auto* train_k = train->add_option("--k", k_value, "top-k support size");
  auto* train_rollout = train->add_option("--rollout", rollout, "rollout length");

  CliEvalOptions eval_opt;
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on a scenario");
  eval->add_option("--checkpoint", eval_opt.checkpoint_path, "checkpoint path")->required();
  eval->add_option("--config", eval_opt.config_path, "scenario config path")->required();
  eval->add_option("--out", eval_opt.out_dir, "output directory")->required();
  eval->add_option("--episodes", eval_opt.episodes, "evaluation episodes");
  int eval_k = 0;
  auto* eval_k_opt = eval->add_option("--k", eval_k, "top-k support size");

  CliEvalOptions gen_opt;
  auto* gen = app.add_subcommand("generalize", "evaluate on the unseen-scenario battery");
  gen->add_option("--checkpoint", gen_opt.checkpoint_path, "checkpoint path")->required();
  gen->add_option("--config", gen_opt.config_path, "training scenario config")->required();
  gen->add_option("--out", gen_opt.out_dir, "output directory")->required();
  gen->add_option("--episodes", gen_opt.episodes, "episodes per scenario");
  int gen_k = 0;
  auto* gen_k_opt = gen->add_option("--k", gen_k, "top-k support size");

  std::string oracle_out, oracle_replay;
  auto* oracle = app.add_subcommand("oracle", "run the tabular invariance oracle battery");
  oracle->add_option("--out", oracle_out, "output directory");
  oracle->add_option("--replay", oracle_replay, "replay a serialized failing instance");

  CliDiagOptions diag_opt;
  uint64_t diag_seed = 0;
  auto* diag = app.add_subcommand("diag", "reward and gradient diagnostics");
  diag->add_option("--config", diag_opt.config_path, "scenario config path")->required();
  diag->add_option("--out", diag_opt.out_dir, "output directory")->required();
  auto* diag_seed_opt = diag->add_option("--seed", diag_seed, "diagnostic seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) {
      if (train_seed->count()) train_opt.seed = seed_value;
      if (train_updates->count()) train_opt.updates = updates;
      if (train_k->count()) train_opt.k = k_value;
      if (train_rollout->count()) train_opt.rollout_length = rollout;
      return cmd_train(train_opt);
    }
    if (eval->parsed()) {
      if (eval_k_opt->count()) eval_opt.k = eval_k;
      return cmd_eval(eval_opt);
    }
    if (gen->parsed()) {
      if (gen_k_opt->count()) gen_opt.k = gen_k;
      return cmd_generalize(gen_opt);
    }
    if (oracle->parsed()) return cmd_oracle(oracle_out, oracle_replay);
    if (diag->parsed()) {
      if (diag_seed_opt->count()) diag_opt.seed = diag_seed;
      return cmd_diag(diag_opt);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
