#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pursuitlab/checkpoint.hpp"
#include "pursuitlab/config.hpp"
#include "pursuitlab/metrics.hpp"
#include "pursuitlab/tabular.hpp"
#include "pursuitlab/trainer.hpp"

namespace pursuitlab {

// One row of metrics.csv.
struct MetricsRow {
  double update = 0.0;
  double mean_reward = 0.0;
  double l_ppo = 0.0;
  double l_entropy = 0.0;
  double l_consistency = 0.0;
  double grad_norm = 0.0;
};

struct TrainArtifacts {
  ScenarioConfig scenario;
  TrainerConfig trainer;
  Checkpoint checkpoint;
  std::vector<MetricsRow> metrics;
};

struct TrainIo {
  std::string out_dir;       // empty: keep everything in memory
  int jsonl_stride = 25;     // log the rollout of every Nth update (and the last)
  int checkpoint_stride = 100;
  bool quiet = true;
};

// The full optimization pipeline: rollouts, GAE, clipped-surrogate +
// entropy + consistency updates, critic regression, per-update metrics, and
// (optionally) metrics.csv / steps.jsonl / checkpoints / curve SVGs.
TrainArtifacts train_run(const ScenarioConfig& scenario, const TrainerConfig& trainer,
                         const TrainIo& io = {});

struct CliTrainOptions {
  std::string config_path;
  std::string out_dir;
  std::optional<uint64_t> seed;
  bool no_nar = false;       // step reward becomes raw R_D
  bool no_cp = false;        // alpha_consistency = 0
  bool no_adv_norm = false;  // disable per-batch advantage normalization
  std::optional<int> updates;
  std::optional<int> k;
  std::optional<int> rollout_length;
};

struct CliEvalOptions {
  std::string checkpoint_path;
  std::string config_path;
  std::string out_dir;
  int episodes = 50;
  std::optional<int> k;
};

struct CliDiagOptions {
  std::string config_path;
  std::string out_dir;
  std::optional<uint64_t> seed;
};

int cmd_train(const CliTrainOptions& opt);
int cmd_eval(const CliEvalOptions& opt);
int cmd_generalize(const CliEvalOptions& opt);
int cmd_oracle(const std::string& out_dir, const std::string& replay_path = {});
int cmd_diag(const CliDiagOptions& opt);

// The three unseen-scenario variants cmd_generalize evaluates.
std::vector<std::pair<std::string, ScenarioConfig>> generalization_scenarios(
    const ScenarioConfig& base);

// Paired same-seed runs with and without reward normalization (advantage
// normalization off in both) for the gradient-norm ordering diagnostic.
struct PairedGradNorms {
  std::vector<MetricsRow> normalized;
  std::vector<MetricsRow> raw;
  double fraction_normalized_higher = 0.0;
};
PairedGradNorms run_paired_gradnorm(const ScenarioConfig& scenario, TrainerConfig trainer);

std::string format_eval_report(const std::vector<EvalReport>& rows);

}  // namespace pursuitlab
