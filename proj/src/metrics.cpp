#include "pursuitlab/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "pursuitlab/reward.hpp"

namespace pursuitlab {

namespace {

struct EpisodeResult {
  int64_t counted = 0;
  int64_t general = 0;
  int64_t precise = 0;
  double reward_sum = 0.0;
  double bias_sum = 0.0;
  int64_t bias_samples = 0;
  std::vector<StepLogRow> rows;
};

EpisodeResult run_greedy_episode(const PolicyParams& params, const ScenarioConfig& scenario,
                                 uint64_t episode_seed, int k_topk,
                                 const MetricThresholds& thresholds) {
  EpisodeResult out;
  ScenarioConfig cfg = scenario;
  cfg.seed = episode_seed;
  Rng rng(cfg.seed);
  SimState s = reset_from(cfg, rng);

  const CandidateSet& cands = candidate_set(cfg.task);
  for (int t = 0; t < cfg.episode_length; ++t) {
    int action = 0;
    double log_prob = 0.0;
    double bias = 0.0;
    ObservationBundle obs;
    if (cfg.task == TaskKind::integrated) {
      const ObservationBundle obs_dir = encode_features(s, TaskKind::direction, cfg);
      const ObservationBundle obs_dist = encode_features(s, TaskKind::distance, cfg);
      obs = encode_features(s, TaskKind::integrated, cfg);
      const PolicyDist joint =
          joint_policy(sub_policy(params, obs_dir, candidate_set(TaskKind::direction)),
                       sub_policy(params, obs_dist, candidate_set(TaskKind::distance)));
      const PolicyDist target = topk(joint, k_topk);
      const PolicyDist full = full_policy_topk(params, obs, target.support);
      const int pos = full.argmax();
      action = full.support[pos];
      log_prob = full.log_probs[pos];
      bias = consistency_loss(target, full);
    } else {
      obs = encode_features(s, cfg.task, cfg);
      const PolicyDist dist = sub_policy(params, obs, cands);
      const int pos = dist.argmax();
      action = dist.support[pos];
      log_prob = dist.log_probs[pos];
    }

    const RewardBatch rb = reward_batch(s, cfg);
    const GeometrySummary g = geometry(s);

    StepLogRow row;
    row.step = t;
    row.obs_text = obs.text;
    for (const auto& a : cands.actions) row.candidates.push_back(a.surface);
    row.r_d = rb.r_dense;
    row.mu = rb.mu;
    row.sigma = rb.sigma;
    row.r_n = rb.r_norm;
    row.diameter = rb.diameter;
    row.chosen = action;
    row.log_prob = log_prob;
    row.reward = rb.r_norm[action];
    row.e_dir = g.e_dir;
    row.d_err = g.dist_err;
    out.rows.push_back(std::move(row));

    if (t >= kEvalWarmupSteps) {
      ++out.counted;
      if (in_general_zone(cfg.task, g.e_dir, g.dist_err, thresholds)) ++out.general;
      if (in_precise_zone(cfg.task, g.e_dir, g.dist_err, thresholds)) ++out.precise;
      out.reward_sum += rb.r_norm[action];
      if (cfg.task == TaskKind::integrated) {
        out.bias_sum += bias;
        ++out.bias_samples;
      }
    }
    s = step(s, action, cfg);
  }
  return out;
}

}  // namespace

double zone_error(TaskKind task, double e_dir, double d_err) {
  switch (task) {
    case TaskKind::direction: return e_dir;
    case TaskKind::distance: return std::fabs(d_err);
    case TaskKind::integrated: return e_dir + std::fabs(d_err);
  }
  return 0.0;
}

bool in_precise_zone(TaskKind task, double e_dir, double d_err, const MetricThresholds& th) {
  const double e = zone_error(task, e_dir, d_err);
  switch (task) {
    case TaskKind::direction: return e <= th.dir_precise;
    case TaskKind::distance: return e <= th.dist_precise;
    case TaskKind::integrated: return e <= th.int_precise;
  }
  return false;
}

bool in_general_zone(TaskKind task, double e_dir, double d_err, const MetricThresholds& th) {
  const double e = zone_error(task, e_dir, d_err);
  switch (task) {
    case TaskKind::direction: return e <= th.dir_general;
    case TaskKind::distance: return e <= th.dist_general;
    case TaskKind::integrated: return e <= th.int_general;
  }
  return false;
}

EvalOutputs evaluate_policy(const PolicyParams& params, const ScenarioConfig& scenario,
                            int episodes, int k_topk, ExecMode mode) {
  const MetricThresholds thresholds;
  std::vector<EpisodeResult> slots(episodes);

  auto body = [&](int e) {
    slots[e] = run_greedy_episode(params, scenario, scenario.seed + static_cast<uint64_t>(e),
                                  k_topk, thresholds);
  };
  if (mode == ExecMode::parallel) {
#pragma omp parallel for schedule(dynamic)
    for (int e = 0; e < episodes; ++e) body(e);
  } else {
    for (int e = 0; e < episodes; ++e) body(e);
  }

  EvalOutputs out;
  out.report.scenario_label = to_string(scenario.task);
  int64_t general = 0, precise = 0, bias_samples = 0;
  double reward_sum = 0.0, bias_sum = 0.0;
  for (int e = 0; e < episodes; ++e) {
    const EpisodeResult& r = slots[e];
    out.report.steps_counted += r.counted;
    general += r.general;
    precise += r.precise;
    reward_sum += r.reward_sum;
    bias_sum += r.bias_sum;
    bias_samples += r.bias_samples;
    out.report.seeds.push_back(scenario.seed + static_cast<uint64_t>(e));
    for (auto& row : slots[e].rows) out.steps.push_back(std::move(row));
  }
  if (out.report.steps_counted > 0) {
    out.report.general_rate = double(general) / double(out.report.steps_counted);
    out.report.precise_rate = double(precise) / double(out.report.steps_counted);
    out.report.mean_reward = reward_sum / double(out.report.steps_counted);
  }
  if (bias_samples > 0) out.report.policy_bias = bias_sum / double(bias_samples);
  return out;
}

int scripted_tracker_action(const SimState& state, const ScenarioConfig& cfg) {
  const int n = num_actions(cfg.task);
  int best = 0;
  double best_reward = dense_reward(state, 0, cfg);
  for (int a = 1; a < n; ++a) {
    const double r = dense_reward(state, a, cfg);
    if (r > best_reward) {
      best = a;
      best_reward = r;
    }
  }
  return best;
}

EvalReport aggregate_rates(TaskKind task, const std::vector<StepLogRow>& rows, int warmup,
                           int episode_length) {
  const MetricThresholds thresholds;
  EvalReport report;
  report.scenario_label = to_string(task);
  int64_t general = 0, precise = 0;
  for (const StepLogRow& row : rows) {
    const int64_t t = row.step % episode_length;
    if (t < warmup) continue;
    ++report.steps_counted;
    if (in_general_zone(task, row.e_dir, row.d_err, thresholds)) ++general;
    if (in_precise_zone(task, row.e_dir, row.d_err, thresholds)) ++precise;
  }
  if (report.steps_counted > 0) {
    report.general_rate = double(general) / double(report.steps_counted);
    report.precise_rate = double(precise) / double(report.steps_counted);
  }
  return report;
}

}  // namespace pursuitlab
