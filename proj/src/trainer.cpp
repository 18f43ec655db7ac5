#include "pursuitlab/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "pursuitlab/errors.hpp"

namespace pursuitlab {

namespace {

// Per-sample loss pieces accumulated into indexed slots so the parallel and
// serial paths reduce in exactly the same order.
struct SampleLoss {
  double surrogate = 0.0;
  double entropy = 0.0;
  double kl = 0.0;
};

struct SampleScratch {
  std::vector<double> grad;
  SampleScratch() : grad(kPolicyParamCount, 0.0) {}
};

void behavior_distribution(const PolicyParams& params, const Transition& tr,
                           ScoredSet* dir_out, ScoredSet* dist_out, ObsContext* ctx_dir,
                           ObsContext* ctx_dist, bool want_caches) {
  if (tr.task == TaskKind::integrated) {
    *ctx_dir = make_obs_context(params, tr.obs_dir);
    *ctx_dist = make_obs_context(params, tr.obs_dist);
    *dir_out = score_candidates(params, *ctx_dir, candidate_set(TaskKind::direction), want_caches);
    *dist_out = score_candidates(params, *ctx_dist, candidate_set(TaskKind::distance), want_caches);
  } else {
    *ctx_dir = make_obs_context(params, tr.obs);
    *dir_out = score_candidates(params, *ctx_dir, candidate_set(tr.task), want_caches);
  }
}

double entropy_of(std::span<const double> log_probs) {
  double h = 0.0;
  for (double lp : log_probs) h -= std::exp(lp) * lp;
  return h;
}

// dH/dscore_j for H of softmax(scores).
void entropy_score_grad(std::span<const double> log_probs, double h, double weight,
                        std::span<double> dscore) {
  for (size_t j = 0; j < log_probs.size(); ++j)
    dscore[j] += weight * (-std::exp(log_probs[j]) * (log_probs[j] + h));
}

// d(log p_a)/dscore_j = delta_aj - p_j.
void chosen_logprob_score_grad(std::span<const double> log_probs, int chosen, double weight,
                               std::span<double> dscore) {
  for (size_t j = 0; j < log_probs.size(); ++j) dscore[j] -= weight * std::exp(log_probs[j]);
  dscore[chosen] += weight;
}

std::vector<int> iota_positions(int n) {
  std::vector<int> v(n);
  std::iota(v.begin(), v.end(), 0);
  return v;
}

// One sample's contribution: fills `slot` with d(total)/d(params) for this
// sample (already weighted by the batch-mean coefficients).
SampleLoss sample_loss_grad(const PolicyParams& params, const Transition& tr,
                            const TrainerConfig& cfg, double w_ppo, double w_entropy,
                            double w_kl, std::span<double> slot) {
  SampleLoss out;
  ScoredSet dir_scored, dist_scored;
  ObsContext ctx_dir, ctx_dist;
  behavior_distribution(params, tr, &dir_scored, &dist_scored, &ctx_dir, &ctx_dist, true);

  const bool integrated = tr.task == TaskKind::integrated;
  const int a_dir = integrated ? tr.action / 3 : tr.action;
  const int a_dist = integrated ? tr.action % 3 : -1;

  double log_pi = dir_scored.log_probs[a_dir];
  if (integrated) log_pi += dist_scored.log_probs[a_dist];

  const double rho = std::exp(log_pi - tr.old_log_prob);
  const double advantage = tr.advantage;
  const double unclipped = rho * advantage;
  const double clipped =
      std::clamp(rho, 1.0 - cfg.clip_epsilon, 1.0 + cfg.clip_epsilon) * advantage;
  out.surrogate = std::min(unclipped, clipped);
  // min() follows the unclipped branch whenever it is the smaller one; the
  // clipped branch contributes no gradient through rho.
  const double dsurr_dlogpi = unclipped <= clipped ? unclipped : 0.0;

  const double h_dir = entropy_of(dir_scored.log_probs);
  const double h_dist = integrated ? entropy_of(dist_scored.log_probs) : 0.0;
  out.entropy = h_dir + h_dist;

  std::vector<double> dscore_dir(dir_scored.log_probs.size(), 0.0);
  chosen_logprob_score_grad(dir_scored.log_probs, a_dir, w_ppo * dsurr_dlogpi, dscore_dir);
  entropy_score_grad(dir_scored.log_probs, h_dir, w_entropy, dscore_dir);

  const CandidateSet& behavior_set = candidate_set(integrated ? TaskKind::direction : tr.task);
  const std::vector<int> dir_positions = iota_positions(behavior_set.size());
  backprop_scores(params, ctx_dir, behavior_set, dir_positions, dir_scored, dscore_dir, slot);

  if (integrated) {
    std::vector<double> dscore_dist(dist_scored.log_probs.size(), 0.0);
    chosen_logprob_score_grad(dist_scored.log_probs, a_dist, w_ppo * dsurr_dlogpi, dscore_dist);
    entropy_score_grad(dist_scored.log_probs, h_dist, w_entropy, dscore_dist);
    const std::vector<int> dist_positions = iota_positions(3);
    backprop_scores(params, ctx_dist, candidate_set(TaskKind::distance), dist_positions,
                    dist_scored, dscore_dist, slot);

    // Consistency term: distill the composite-observation policy toward the
    // frozen joint top-k target stored with the transition.
    const ObsContext ctx_full = make_obs_context(params, tr.obs);
    const CandidateSet& full_set = candidate_set(TaskKind::integrated);
    ScoredSet full_scored = score_support(params, ctx_full, full_set, tr.topk_support, true);

    double kl = 0.0;
    std::vector<double> dscore_full(full_scored.log_probs.size(), 0.0);
    for (size_t i = 0; i < full_scored.log_probs.size(); ++i) {
      const double p = std::exp(tr.topk_target_logp[i]);
      const double q = std::exp(full_scored.log_probs[i]);
      kl += p * (tr.topk_target_logp[i] - full_scored.log_probs[i]);
      dscore_full[i] = w_kl * (q - p);
    }
    out.kl = kl;
    backprop_scores(params, ctx_full, full_set, tr.topk_support, full_scored, dscore_full, slot);
  }
  return out;
}

}  // namespace

RolloutResult collect_rollout(EnvCursor& cursor, const PolicyParams& params,
                              const ValueParams& vparams, const ScenarioConfig& scenario,
                              const TrainerConfig& cfg, Rng& rng, StepObserver observer,
                              void* observer_arg) {
  if (!cursor.initialized) {
    cursor.episode_rng = Rng(scenario.seed);
    cursor.state = reset_from(scenario, cursor.episode_rng);
    cursor.steps_in_episode = 0;
    cursor.initialized = true;
  }

  RolloutResult result;
  result.transitions.reserve(cfg.rollout_length);
  double reward_sum = 0.0;

  for (int t = 0; t < cfg.rollout_length; ++t) {
    const SimState s = cursor.state;
    Transition tr;
    tr.task = scenario.task;

    PolicyDist behavior;
    if (scenario.task == TaskKind::integrated) {
      tr.obs_dir = encode_features(s, TaskKind::direction, scenario);
      tr.obs_dist = encode_features(s, TaskKind::distance, scenario);
      tr.obs = encode_features(s, TaskKind::integrated, scenario);
      const PolicyDist d_dir = sub_policy(params, tr.obs_dir, candidate_set(TaskKind::direction));
      const PolicyDist d_dist = sub_policy(params, tr.obs_dist, candidate_set(TaskKind::distance));
      behavior = joint_policy(d_dir, d_dist);
      const PolicyDist target = topk(behavior, cfg.k_topk);
      tr.topk_support = target.support;
      tr.topk_target_logp = target.log_probs;
    } else {
      tr.obs = encode_features(s, scenario.task, scenario);
      behavior = sub_policy(params, tr.obs, candidate_set(scenario.task));
    }

    const auto [action, log_prob] = sample(behavior, rng);
    tr.action = action;
    tr.old_log_prob = log_prob;

    const RewardBatch rb = reward_batch(s, scenario, cfg.epsilon0);
    tr.reward = cfg.use_normalized_reward ? rb.r_norm[action] : rb.r_dense[action];
    tr.value = value_forward(vparams, tr.obs);

    const SimState next = step(s, action, scenario);
    ++cursor.steps_in_episode;
    tr.done = cursor.steps_in_episode >= scenario.episode_length;

    if (observer) {
      StepRecord rec;
      rec.state = &s;
      rec.obs = &tr.obs;
      rec.rewards = &rb;
      rec.chosen = action;
      rec.log_prob = log_prob;
      rec.reward = tr.reward;
      observer(rec, observer_arg);
    }

    if (tr.done) {
      cursor.state = reset_from(scenario, cursor.episode_rng);
      cursor.steps_in_episode = 0;
    } else {
      cursor.state = next;
    }

    reward_sum += tr.reward;
    result.transitions.push_back(std::move(tr));
  }

  const ObservationBundle tail_obs =
      encode_features(cursor.state, scenario.task, scenario);
  result.bootstrap_value = value_forward(vparams, tail_obs);
  result.mean_reward = reward_sum / cfg.rollout_length;
  return result;
}

void compute_gae(std::span<Transition> transitions, double bootstrap_value,
                 const TrainerConfig& cfg) {
  double next_advantage = 0.0;
  double next_value = bootstrap_value;
  for (auto it = transitions.rbegin(); it != transitions.rend(); ++it) {
    const double nonterminal = it->done ? 0.0 : 1.0;
    const double delta =
        it->reward + cfg.gamma * next_value * nonterminal - it->value;
    next_advantage = delta + cfg.gamma * cfg.gae_lambda * nonterminal * next_advantage;
    it->advantage = next_advantage;
    it->ret = next_advantage + it->value;
    next_value = it->value;
  }
}

LossResult total_loss_and_grad(const PolicyParams& params, std::span<const Transition> minibatch,
                               const TrainerConfig& cfg, ExecMode mode) {
  if (minibatch.empty()) throw DomainError("total_loss_and_grad requires a nonempty minibatch");
  const int n = static_cast<int>(minibatch.size());
  int n_integrated = 0;
  for (const Transition& tr : minibatch)
    if (tr.task == TaskKind::integrated) ++n_integrated;

  const double w_ppo = -1.0 / n;
  const double w_entropy = -cfg.alpha_entropy / n;
  const double w_kl = n_integrated > 0 ? cfg.alpha_consistency / n_integrated : 0.0;

  std::vector<SampleLoss> losses(n);
  std::vector<SampleScratch> slots(n);
  bool failed = false;
  std::string failure;

  if (mode == ExecMode::parallel) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
      try {
        losses[i] = sample_loss_grad(params, minibatch[i], cfg, w_ppo, w_entropy, w_kl,
                                     slots[i].grad);
      } catch (const std::exception& e) {
#pragma omp critical
        {
          failed = true;
          failure = e.what();
        }
      }
    }
  } else {
    for (int i = 0; i < n; ++i) {
      try {
        losses[i] = sample_loss_grad(params, minibatch[i], cfg, w_ppo, w_entropy, w_kl,
                                     slots[i].grad);
      } catch (const std::exception& e) {
        failed = true;
        failure = e.what();
        break;
      }
    }
  }
  if (failed) throw NumericalError("loss evaluation failed: " + failure);

  LossResult result;
  result.grad.assign(kPolicyParamCount, 0.0);
  double surr_sum = 0.0, entropy_sum = 0.0, kl_sum = 0.0;
  for (int i = 0; i < n; ++i) {
    surr_sum += losses[i].surrogate;
    entropy_sum += losses[i].entropy;
    kl_sum += losses[i].kl;
    const std::vector<double>& g = slots[i].grad;
    for (int p = 0; p < kPolicyParamCount; ++p) result.grad[p] += g[p];
  }

  result.terms.ppo = -surr_sum / n;
  result.terms.entropy = entropy_sum / n;
  result.terms.consistency = n_integrated > 0 ? kl_sum / n_integrated : 0.0;
  result.terms.total = result.terms.ppo - cfg.alpha_entropy * result.terms.entropy +
                       cfg.alpha_consistency * result.terms.consistency;
  if (!std::isfinite(result.terms.total)) {
    throw NumericalError(
        "non-finite loss (ppo=" + std::to_string(result.terms.ppo) +
        ", entropy=" + std::to_string(result.terms.entropy) +
        ", consistency=" + std::to_string(result.terms.consistency) + ")");
  }
  return result;
}

double value_loss_and_grad(const ValueParams& vparams, std::span<const Transition> minibatch,
                           std::vector<double>& grad, ExecMode mode) {
  const int n = static_cast<int>(minibatch.size());
  grad.assign(kValueParamCount, 0.0);
  const double w = 1.0 / n;
  std::vector<std::vector<double>> slots(n);
  std::vector<double> losses(n, 0.0);

  auto body = [&](int i) {
    slots[i].assign(kValueParamCount, 0.0);
    const double v =
        value_backward(vparams, minibatch[i].obs, minibatch[i].ret, w, slots[i]);
    const double err = v - minibatch[i].ret;
    losses[i] = 0.5 * err * err;
  };

  if (mode == ExecMode::parallel) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) body(i);
  } else {
    for (int i = 0; i < n; ++i) body(i);
  }

  double loss = 0.0;
  for (int i = 0; i < n; ++i) {
    loss += losses[i];
    for (int p = 0; p < kValueParamCount; ++p) grad[p] += slots[i][p];
  }
  return loss / n;
}

void adam_step(std::vector<double>& params, std::span<const double> grad, AdamState& state,
               double lr, double beta1, double beta2, double eps) {
  for (double g : grad) {
    if (!std::isfinite(g)) throw NumericalError("non-finite gradient; update aborted");
  }
  state.t += 1;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.t));
  for (size_t i = 0; i < params.size(); ++i) {
    state.m[i] = beta1 * state.m[i] + (1.0 - beta1) * grad[i];
    state.v[i] = beta2 * state.v[i] + (1.0 - beta2) * grad[i] * grad[i];
    const double m_hat = state.m[i] / bc1;
    const double v_hat = state.v[i] / bc2;
    params[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
  }
}

double gradient_check(const PolicyParams& params, std::span<const Transition> minibatch,
                      const TrainerConfig& cfg, int n_params, Rng& rng) {
  const LossResult analytic = total_loss_and_grad(params, minibatch, cfg, ExecMode::serial);

  std::vector<int> indices(kPolicyParamCount);
  std::iota(indices.begin(), indices.end(), 0);
  for (int i = kPolicyParamCount - 1; i > 0; --i)
    std::swap(indices[i], indices[rng.below(i + 1)]);
  n_params = std::min(n_params, kPolicyParamCount);

  const double h = 1e-5;
  double max_rel = 0.0;
  PolicyParams probe = params;
  for (int k = 0; k < n_params; ++k) {
    const int idx = indices[k];
    const double saved = probe.values[idx];
    probe.values[idx] = saved + h;
    const double up = total_loss_and_grad(probe, minibatch, cfg, ExecMode::serial).terms.total;
    probe.values[idx] = saved - h;
    const double down = total_loss_and_grad(probe, minibatch, cfg, ExecMode::serial).terms.total;
    probe.values[idx] = saved;
    const double fd = (up - down) / (2.0 * h);
    const double g = analytic.grad[idx];
    const double rel = std::fabs(fd - g) / std::max(std::fabs(g), 1e-8);
    max_rel = std::max(max_rel, rel);
  }
  return max_rel;
}

std::vector<double> weighted_logprob_gradient(const PolicyParams& params,
                                              std::span<const Transition> samples,
                                              std::span<const double> weights) {
  std::vector<double> grad(kPolicyParamCount, 0.0);
  for (size_t i = 0; i < samples.size(); ++i) {
    const Transition& tr = samples[i];
    const double w = weights[i];
    if (w == 0.0) continue;

    ScoredSet dir_scored, dist_scored;
    ObsContext ctx_dir, ctx_dist;
    behavior_distribution(params, tr, &dir_scored, &dist_scored, &ctx_dir, &ctx_dist, true);
    const bool integrated = tr.task == TaskKind::integrated;
    const int a_dir = integrated ? tr.action / 3 : tr.action;

    std::vector<double> dscore(dir_scored.log_probs.size(), 0.0);
    chosen_logprob_score_grad(dir_scored.log_probs, a_dir, w, dscore);
    const CandidateSet& behavior_set = candidate_set(integrated ? TaskKind::direction : tr.task);
    backprop_scores(params, ctx_dir, behavior_set, iota_positions(behavior_set.size()),
                    dir_scored, dscore, grad);

    if (integrated) {
      std::vector<double> dscore_dist(dist_scored.log_probs.size(), 0.0);
      chosen_logprob_score_grad(dist_scored.log_probs, tr.action % 3, w, dscore_dist);
      backprop_scores(params, ctx_dist, candidate_set(TaskKind::distance), iota_positions(3),
                      dist_scored, dscore_dist, grad);
    }
  }
  return grad;
}

double estimator_linearity_check(const PolicyParams& params,
                                 std::span<const LinearitySample> samples,
                                 const TrainerConfig& cfg) {
  std::vector<Transition> transitions;
  std::vector<double> w_norm, w_dense, w_mu;
  for (const LinearitySample& s : samples) {
    transitions.push_back(s.transition);
    const double denom = s.batch.sigma + cfg.epsilon0;
    w_norm.push_back(s.batch.r_norm[s.transition.action]);
    w_dense.push_back(s.batch.r_dense[s.transition.action] / denom);
    w_mu.push_back(s.batch.mu / denom);
  }

  const std::vector<double> lhs = weighted_logprob_gradient(params, transitions, w_norm);
  const std::vector<double> g_dense = weighted_logprob_gradient(params, transitions, w_dense);
  const std::vector<double> g_mu = weighted_logprob_gradient(params, transitions, w_mu);

  double max_residual = 0.0;
  for (int p = 0; p < kPolicyParamCount; ++p)
    max_residual = std::max(max_residual, std::fabs(lhs[p] - (g_dense[p] - g_mu[p])));
  return max_residual;
}

}  // namespace pursuitlab
