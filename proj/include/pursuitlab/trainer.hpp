#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pursuitlab/policy.hpp"
#include "pursuitlab/reward.hpp"
#include "pursuitlab/sim.hpp"
#include "pursuitlab/value_net.hpp"

namespace pursuitlab {

struct TrainerConfig {
  double gamma = 0.99;
  double gae_lambda = 0.95;
  double clip_epsilon = 0.2;
  double alpha_entropy = 0.01;
  double alpha_consistency = 0.1;
  int k_topk = 5;
  int rollout_length = 2048;
  int minibatch = 256;
  int ppo_epochs = 4;
  double step_size = 3e-4;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double epsilon0 = kEpsilon0;
  double value_step_size = 1e-2;
  double init_scale = 0.1;
  int updates = 500;
  uint64_t seed = 1;
  bool use_normalized_reward = true;  // off: step reward is raw R_D
  bool normalize_advantages = true;   // per update batch, zero mean unit variance
};

// One rollout step. For the integrated task the transition also carries the
// decoupled observations and the frozen consistency target recorded at
// collection time (the distillation target is a constant, not a gradient
// path).
struct Transition {
  TaskKind task = TaskKind::direction;
  ObservationBundle obs;       // behavior observation (composite when integrated)
  ObservationBundle obs_dir;   // integrated only
  ObservationBundle obs_dist;  // integrated only
  int action = 0;              // index into the task's canonical candidate set
  double old_log_prob = 0.0;   // behavior distribution at collection time
  double reward = 0.0;         // R_N (or R_D under the raw-reward ablation)
  double value = 0.0;
  double advantage = 0.0;
  double ret = 0.0;
  bool done = false;
  std::vector<int> topk_support;          // integrated only
  std::vector<double> topk_target_logp;   // integrated only
};

// Persistent environment cursor so episodes chain across rollouts.
struct EnvCursor {
  SimState state;
  Rng episode_rng;
  int steps_in_episode = 0;
  bool initialized = false;
};

// Optional per-step observer (JSONL logging hooks into this).
struct StepRecord {
  const SimState* state = nullptr;
  const ObservationBundle* obs = nullptr;
  const RewardBatch* rewards = nullptr;
  int chosen = 0;
  double log_prob = 0.0;
  double reward = 0.0;
};
using StepObserver = void (*)(const StepRecord&, void*);

struct RolloutResult {
  std::vector<Transition> transitions;
  double bootstrap_value = 0.0;
  double mean_reward = 0.0;
};

RolloutResult collect_rollout(EnvCursor& cursor, const PolicyParams& params,
                              const ValueParams& vparams, const ScenarioConfig& scenario,
                              const TrainerConfig& cfg, Rng& rng,
                              StepObserver observer = nullptr, void* observer_arg = nullptr);

// Standard GAE(gamma, lambda) over the rollout; fills advantage and ret.
void compute_gae(std::span<Transition> transitions, double bootstrap_value,
                 const TrainerConfig& cfg);

struct LossTerms {
  double total = 0.0;
  double ppo = 0.0;          // -mean(min(rho*A, clip(rho)*A))
  double entropy = 0.0;      // mean entropy of the behavior distribution
  double consistency = 0.0;  // mean KL over integrated-task samples
};

struct LossResult {
  LossTerms terms;
  std::vector<double> grad;  // d(total)/d(policy params)
};

enum class ExecMode { serial, parallel };

// Full objective: L = ppo - alpha_e * entropy + alpha_c * consistency, with
// the exact reverse-accumulated gradient. The parallel path computes
// per-sample gradients into indexed slots and reduces them in sample order,
// so it is bit-identical to the serial reference regardless of thread count.
LossResult total_loss_and_grad(const PolicyParams& params, std::span<const Transition> minibatch,
                               const TrainerConfig& cfg, ExecMode mode = ExecMode::parallel);

// Critic regression on the same minibatch: mean 0.5*(V - ret)^2.
double value_loss_and_grad(const ValueParams& vparams, std::span<const Transition> minibatch,
                           std::vector<double>& grad, ExecMode mode = ExecMode::parallel);

struct AdamState {
  std::vector<double> m, v;
  int64_t t = 0;
  explicit AdamState(size_t n) : m(n, 0.0), v(n, 0.0) {}
};

// Bias-corrected adaptive-moment step; aborts on non-finite gradients.
void adam_step(std::vector<double>& params, std::span<const double> grad, AdamState& state,
               double lr, double beta1, double beta2, double eps);

// Central finite differences (h = 1e-5) on randomly selected parameters
// against the analytic gradient; returns the max relative error with
// denominator max(|g|, 1e-8).
double gradient_check(const PolicyParams& params, std::span<const Transition> minibatch,
                      const TrainerConfig& cfg, int n_params, Rng& rng);

// Verifies the affine relation between normalized- and raw-reward REINFORCE
// estimates: grad(R_N) == (grad(R_D) - mu_t * grad(logpi)) / (sigma_t+eps0),
// elementwise, two independently computed sides. Returns the max residual.
struct LinearitySample {
  Transition transition;
  RewardBatch batch;
};
double estimator_linearity_check(const PolicyParams& params,
                                 std::span<const LinearitySample> samples,
                                 const TrainerConfig& cfg);

// Gradient of sum_t w_t * log pi(a_t | s_t) with per-sample weights; the
// building block of the linearity check.
std::vector<double> weighted_logprob_gradient(const PolicyParams& params,
                                              std::span<const Transition> samples,
                                              std::span<const double> weights);

}  // namespace pursuitlab
