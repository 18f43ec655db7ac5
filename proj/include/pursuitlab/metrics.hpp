#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pursuitlab/logio.hpp"
#include "pursuitlab/policy.hpp"
#include "pursuitlab/sim.hpp"
#include "pursuitlab/trainer.hpp"

namespace pursuitlab {

// Error-zone bounds. Direction thresholds are on e_dir, distance on |d-d*|,
// integrated on their sum (the integrated bounds are exactly the sums of the
// sub-task bounds).
struct MetricThresholds {
  double dir_precise = 0.141;
  double dir_general = 0.707;
  double dist_precise = 0.1;
  double dist_general = 1.0;
  double int_precise = 0.241;
  double int_general = 1.707;
};

// Step-level error the zones are evaluated on for a given task.
double zone_error(TaskKind task, double e_dir, double d_err);
bool in_precise_zone(TaskKind task, double e_dir, double d_err,
                     const MetricThresholds& thresholds = {});
bool in_general_zone(TaskKind task, double e_dir, double d_err,
                     const MetricThresholds& thresholds = {});

struct EvalReport {
  std::string scenario_label;
  double general_rate = 0.0;   // fraction of post-warmup steps in the general zone
  double precise_rate = 0.0;   // fraction in the precise zone
  double policy_bias = 0.0;    // mean KL(joint-topk || full-topk); integrated only
  double mean_reward = 0.0;    // mean normalized step reward
  int64_t steps_counted = 0;
  std::vector<uint64_t> seeds;
};

inline constexpr int kEvalWarmupSteps = 20;

struct EvalOutputs {
  EvalReport report;
  std::vector<StepLogRow> steps;  // post- and pre-warmup, every step
};

// Greedy evaluation: sub-tasks act by the argmax of the candidate softmax;
// the integrated task acts with the composite-observation policy over the
// joint top-k support. Episodes are independent (seeded per episode) and may
// run in parallel; aggregation is an ordered reduction over episode slots.
EvalOutputs evaluate_policy(const PolicyParams& params, const ScenarioConfig& scenario,
                            int episodes, int k_topk, ExecMode mode = ExecMode::parallel);

// Myopic one-step-lookahead controller: argmax of the dense reward. Used as
// the scripted baseline ("perfect tracker") in tests and diagnostics.
int scripted_tracker_action(const SimState& state, const ScenarioConfig& cfg);

// Same aggregation the reports use, applied to previously written JSONL rows;
// lets anyone re-derive the rates from the logs.
EvalReport aggregate_rates(TaskKind task, const std::vector<StepLogRow>& rows,
                           int warmup = kEvalWarmupSteps, int episode_length = 200);

}  // namespace pursuitlab
