#include "pursuitlab/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <memory>
#include <sstream>

#include "json.hpp"
#include "pursuitlab/errors.hpp"
#include "pursuitlab/logio.hpp"
#include "pursuitlab/reward.hpp"

namespace pursuitlab {

namespace {

using json = nlohmann::json;

double l2_norm(std::span<const double> v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return std::sqrt(acc);
}

void normalize_advantages_inplace(std::vector<Transition>& transitions) {
  double mean = 0.0;
  for (const auto& tr : transitions) mean += tr.advantage;
  mean /= transitions.size();
  double var = 0.0;
  for (const auto& tr : transitions) {
    const double d = tr.advantage - mean;
    var += d * d;
  }
  const double stddev = std::sqrt(var / transitions.size());
  for (auto& tr : transitions) tr.advantage = (tr.advantage - mean) / (stddev + 1e-8);
}

struct StepLogContext {
  JsonlWriter* writer = nullptr;
  const ScenarioConfig* scenario = nullptr;
  int64_t global_step = 0;
  bool active = false;
};

void log_step(const StepRecord& rec, void* arg) {
  auto* ctx = static_cast<StepLogContext*>(arg);
  ctx->global_step += 1;
  if (!ctx->active || !ctx->writer) return;
  const GeometrySummary g = geometry(*rec.state);
  StepLogRow row;
  row.step = ctx->global_step - 1;
  row.obs_text = rec.obs->text;
  for (const auto& a : candidate_set(ctx->scenario->task).actions)
    row.candidates.push_back(a.surface);
  row.r_d = rec.rewards->r_dense;
  row.mu = rec.rewards->mu;
  row.sigma = rec.rewards->sigma;
  row.r_n = rec.rewards->r_norm;
  row.diameter = rec.rewards->diameter;
  row.chosen = rec.chosen;
  row.log_prob = rec.log_prob;
  row.reward = rec.reward;
  row.e_dir = g.e_dir;
  row.d_err = g.dist_err;
  ctx->writer->write(row);
}

void write_training_curves(const std::string& out_dir, const std::vector<MetricsRow>& rows) {
  std::vector<double> xs;
  PlotSeries reward{"mean_reward", {}}, gnorm{"grad_norm", {}};
  PlotSeries lppo{"l_ppo", {}}, lent{"l_entropy", {}}, lcon{"l_consistency", {}};
  for (const auto& r : rows) {
    xs.push_back(r.update);
    reward.ys.push_back(r.mean_reward);
    gnorm.ys.push_back(r.grad_norm);
    lppo.ys.push_back(r.l_ppo);
    lent.ys.push_back(r.l_entropy);
    lcon.ys.push_back(r.l_consistency);
  }
  write_svg_line_chart(out_dir + "/reward_curve.svg", "mean step reward per update", xs,
                       std::vector<PlotSeries>{reward});
  write_svg_line_chart(out_dir + "/grad_norm.svg", "policy gradient norm per update", xs,
                       std::vector<PlotSeries>{gnorm});
  write_svg_line_chart(out_dir + "/loss_terms.svg", "loss terms per update", xs,
                       std::vector<PlotSeries>{lppo, lent, lcon});
}

json mdp_to_json(const TabularMDP& mdp) {
  json obj;
  obj["n_states"] = mdp.n_states;
  obj["n_actions"] = mdp.n_actions;
  obj["gamma"] = mdp.gamma;
  obj["transition"] = mdp.transition;
  obj["reward"] = mdp.reward;
  obj["terminal"] = mdp.terminal;
  return obj;
}

TabularMDP mdp_from_json(const json& obj) {
  TabularMDP mdp;
  mdp.n_states = obj.at("n_states").get<int>();
  mdp.n_actions = obj.at("n_actions").get<int>();
  mdp.gamma = obj.at("gamma").get<double>();
  mdp.transition = obj.at("transition").get<std::vector<double>>();
  mdp.reward = obj.at("reward").get<std::vector<double>>();
  mdp.terminal = obj.at("terminal").get<std::vector<uint8_t>>();
  return mdp;
}

// Rebuild the exact instance a battery index would generate, for failure
// serialization and replay.
json shaping_instance_json(uint64_t seed, int index) {
  Rng rng(seed + 0x9e37 * (index + 1));
  const TabularMDP mdp = random_mdp(rng);
  std::vector<double> phi(mdp.n_states);
  for (double& v : phi) v = rng.uniform(-10.0, 10.0);
  json obj;
  obj["regime"] = "shaping";
  obj["instance"] = index;
  obj["mdp"] = mdp_to_json(mdp);
  obj["phi"] = phi;
  return obj;
}

json uniform_instance_json(uint64_t seed, int index) {
  Rng rng(seed + 0x7f4a * (index + 1));
  TabularMDP mdp = random_mdp(rng);
  const double mu_bar = rng.uniform(-1.0, 1.0);
  const double sigma_bar = rng.uniform(0.1, 2.0);
  make_stats_uniform(mdp, mu_bar, sigma_bar);
  json obj;
  obj["regime"] = "normalization-uniform";
  obj["instance"] = index;
  obj["mdp"] = mdp_to_json(mdp);
  return obj;
}

constexpr uint64_t kOracleSeed = 20260809;

}  // namespace

TrainArtifacts train_run(const ScenarioConfig& scenario, const TrainerConfig& trainer,
                         const TrainIo& io) {
  scenario.validate();
  TrainArtifacts art;
  art.scenario = scenario;
  art.trainer = trainer;
  art.checkpoint.task = scenario.task;
  art.checkpoint.k_topk = trainer.k_topk;

  Rng rng(trainer.seed);
  art.checkpoint.policy.init(rng, trainer.init_scale);
  art.checkpoint.value.init(rng, trainer.init_scale);
  PolicyParams& policy = art.checkpoint.policy;
  ValueParams& value = art.checkpoint.value;

  AdamState policy_adam(kPolicyParamCount), value_adam(kValueParamCount);
  EnvCursor cursor;

  const bool with_io = !io.out_dir.empty();
  std::unique_ptr<CsvWriter> metrics_csv;
  std::unique_ptr<JsonlWriter> steps_jsonl;
  StepLogContext log_ctx;
  if (with_io) {
    ensure_directory(io.out_dir);
    const std::vector<std::string> header = {"update",    "mean_reward",   "l_ppo",
                                             "l_entropy", "l_consistency", "grad_norm"};
    metrics_csv = std::make_unique<CsvWriter>(io.out_dir + "/metrics.csv", header);
    steps_jsonl = std::make_unique<JsonlWriter>(io.out_dir + "/steps.jsonl");
    log_ctx.writer = steps_jsonl.get();
    log_ctx.scenario = &art.scenario;
  }

  std::vector<double> value_grad;
  for (int update = 1; update <= trainer.updates; ++update) {
    log_ctx.active = with_io && io.jsonl_stride > 0 &&
                     ((update - 1) % io.jsonl_stride == 0 || update == trainer.updates);

    RolloutResult roll = collect_rollout(cursor, policy, value, scenario, trainer, rng,
                                         with_io ? &log_step : nullptr, &log_ctx);
    compute_gae(roll.transitions, roll.bootstrap_value, trainer);
    if (trainer.normalize_advantages) normalize_advantages_inplace(roll.transitions);

    double ppo_sum = 0.0, entropy_sum = 0.0, consistency_sum = 0.0, gnorm_sum = 0.0;
    int minibatches = 0;
    const int n = static_cast<int>(roll.transitions.size());
    for (int epoch = 0; epoch < trainer.ppo_epochs; ++epoch) {
      if (scenario.task == TaskKind::integrated && epoch > 0) {
        // Refresh the frozen distillation targets from the current joint so
        // the full branch tracks across epochs. Still plain data inside the
        // minibatch loss.
        for (Transition& tr : roll.transitions) {
          const PolicyDist joint = joint_policy(
              sub_policy(policy, tr.obs_dir, candidate_set(TaskKind::direction)),
              sub_policy(policy, tr.obs_dist, candidate_set(TaskKind::distance)));
          const PolicyDist target = topk(joint, trainer.k_topk);
          tr.topk_support = target.support;
          tr.topk_target_logp = target.log_probs;
        }
      }
      // Fisher-Yates with the run's own generator; transitions move cheaply.
      for (int i = n - 1; i > 0; --i)
        std::swap(roll.transitions[i], roll.transitions[rng.below(i + 1)]);
      for (int start = 0; start < n; start += trainer.minibatch) {
        const int count = std::min(trainer.minibatch, n - start);
        const std::span<const Transition> batch(&roll.transitions[start], count);
        LossResult loss = total_loss_and_grad(policy, batch, trainer);
        adam_step(policy.values, loss.grad, policy_adam, trainer.step_size, trainer.adam_beta1,
                  trainer.adam_beta2, trainer.adam_eps);
        value_loss_and_grad(value, batch, value_grad);
        adam_step(value.values, value_grad, value_adam, trainer.value_step_size,
                  trainer.adam_beta1, trainer.adam_beta2, trainer.adam_eps);
        ppo_sum += loss.terms.ppo;
        entropy_sum += loss.terms.entropy;
        consistency_sum += loss.terms.consistency;
        gnorm_sum += l2_norm(loss.grad);
        ++minibatches;
      }
    }

    MetricsRow row;
    row.update = update;
    row.mean_reward = roll.mean_reward;
    row.l_ppo = ppo_sum / minibatches;
    row.l_entropy = entropy_sum / minibatches;
    row.l_consistency = consistency_sum / minibatches;
    row.grad_norm = gnorm_sum / minibatches;
    art.metrics.push_back(row);

    if (with_io) {
      const double vals[6] = {row.update,    row.mean_reward,   row.l_ppo,
                              row.l_entropy, row.l_consistency, row.grad_norm};
      metrics_csv->write_row(vals);
      if (io.checkpoint_stride > 0 && update % io.checkpoint_stride == 0) {
        char name[64];
        std::snprintf(name, sizeof name, "/checkpoint_%06d.bin", update);
        save_checkpoint(io.out_dir + name, art.checkpoint);
      }
      if (!io.quiet)
        std::cout << "update " << update << " reward " << row.mean_reward << "\n";
    }
  }

  if (with_io) {
    metrics_csv->close();
    steps_jsonl->close();
    save_checkpoint(io.out_dir + "/checkpoint_final.bin", art.checkpoint);
    write_training_curves(io.out_dir, art.metrics);
  }
  return art;
}

int cmd_train(const CliTrainOptions& opt) {
  ScenarioConfig scenario = load_scenario(opt.config_path);
  TrainerConfig trainer;
  if (opt.seed) trainer.seed = *opt.seed;
  if (opt.updates) trainer.updates = *opt.updates;
  if (opt.k) trainer.k_topk = *opt.k;
  if (opt.rollout_length) trainer.rollout_length = *opt.rollout_length;
  trainer.use_normalized_reward = !opt.no_nar;
  if (opt.no_cp) trainer.alpha_consistency = 0.0;
  if (opt.no_adv_norm) trainer.normalize_advantages = false;

  TrainIo io;
  io.out_dir = opt.out_dir;
  io.quiet = false;
  train_run(scenario, trainer, io);
  return 0;
}

std::string format_eval_report(const std::vector<EvalReport>& rows) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof line, "%-28s %16s %16s %12s\n", "Scenario", "General Rate %",
                "Precise Rate %", "Policy Bias");
  out << line;
  out << std::string(76, '-') << "\n";
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%-28s %16.2f %16.2f %12.6f\n", r.scenario_label.c_str(),
                  100.0 * r.general_rate, 100.0 * r.precise_rate, r.policy_bias);
    out << line;
  }
  return out.str();
}

namespace {

EvalReport eval_to_files(const Checkpoint& ckpt, const ScenarioConfig& scenario,
                         const std::string& label, int episodes, int k,
                         const std::string& out_dir, const std::string& jsonl_name) {
  EvalOutputs outputs = evaluate_policy(ckpt.policy, scenario, episodes, k);
  outputs.report.scenario_label = label;
  JsonlWriter writer(out_dir + "/" + jsonl_name);
  for (const auto& row : outputs.steps) writer.write(row);
  writer.close();
  return outputs.report;
}

}  // namespace

int cmd_eval(const CliEvalOptions& opt) {
  const Checkpoint ckpt = load_checkpoint(opt.checkpoint_path);
  const ScenarioConfig scenario = load_scenario(opt.config_path);
  if (scenario.task != ckpt.task)
    throw ConfigError(std::string("checkpoint was trained on task '") + to_string(ckpt.task) +
                      "' but the scenario is '" + to_string(scenario.task) + "'");
  ensure_directory(opt.out_dir);
  const int k = opt.k.value_or(ckpt.k_topk);

  const EvalReport report = eval_to_files(ckpt, scenario, to_string(scenario.task), opt.episodes,
                                          k, opt.out_dir, "steps.jsonl");
  const std::string table = format_eval_report({report});
  std::ofstream(opt.out_dir + "/report.txt") << table;
  std::cout << table;
  return 0;
}

std::vector<std::pair<std::string, ScenarioConfig>> generalization_scenarios(
    const ScenarioConfig& base) {
  ScenarioConfig randomized = base;
  randomized.randomize_distance = true;

  ScenarioConfig circular = base;
  circular.target_strategy.kind = StrategyKind::circular;
  circular.target_strategy.circular_radius = 6.0;
  circular.target_strategy.angular_rate = 0.3;

  ScenarioConfig composite = circular;
  composite.randomize_distance = true;
  composite.nuisance_color = "red";

  return {{"distance-generalization", randomized},
          {"strategy-generalization", circular},
          {"complex-composite", composite}};
}

int cmd_generalize(const CliEvalOptions& opt) {
  const Checkpoint ckpt = load_checkpoint(opt.checkpoint_path);
  const ScenarioConfig base = load_scenario(opt.config_path);
  if (base.task != ckpt.task)
    throw ConfigError("generalization scenarios must keep the checkpoint's task");
  ensure_directory(opt.out_dir);
  const int k = opt.k.value_or(ckpt.k_topk);

  std::vector<EvalReport> reports;
  int index = 0;
  for (const auto& [label, scenario] : generalization_scenarios(base)) {
    reports.push_back(eval_to_files(ckpt, scenario, label, opt.episodes, k, opt.out_dir,
                                    "steps_" + std::to_string(index++) + "_" + label + ".jsonl"));
  }
  const std::string table = format_eval_report(reports);
  std::ofstream(opt.out_dir + "/report.txt") << table;
  std::cout << table;
  return 0;
}

int cmd_oracle(const std::string& out_dir, const std::string& replay_path) {
  if (!replay_path.empty()) {
    const json obj = json::parse(read_file(replay_path));
    const TabularMDP mdp = mdp_from_json(obj.at("mdp"));
    InvarianceReport rep;
    if (obj.at("regime") == "shaping") {
      const std::vector<double> phi = obj.at("phi").get<std::vector<double>>();
      rep = shaping_invariance_check(mdp, phi);
    } else {
      rep = normalization_invariance_check(mdp);
    }
    const bool pass = rep.argmax_match && rep.max_value_relation_err <= 1e-8;
    std::cout << "replay " << obj.at("regime").get<std::string>() << " instance "
              << obj.at("instance").get<int>() << ": "
              << (pass ? "pass" : "FAIL") << " (agreement "
              << format_double(1.0 - rep.disagreement_rate) << ")\n";
    return pass ? 0 : 1;
  }

  if (!out_dir.empty()) ensure_directory(out_dir);
  const int n = 100;
  const BatteryResult shaping = run_shaping_battery(n, kOracleSeed);
  const BatteryResult uniform = run_uniform_normalization_battery(n, kOracleSeed);
  const std::vector<SpreadPoint> family = run_sigma_spread_family(n, kOracleSeed);

  std::ostringstream report;
  report << "shaping invariance: " << (n - shaping.failures) << "/" << n << " exact\n";
  report << "normalization invariance (uniform regime): " << (n - uniform.failures) << "/" << n
         << " exact\n";
  report << "normalization general regime disagreement by sigma spread:\n";
  for (const auto& pt : family)
    report << "  spread " << format_double(pt.spread) << "x: rate "
           << format_double(pt.mean_disagreement_rate) << "\n";
  std::cout << report.str();

  if (!out_dir.empty()) {
    std::ofstream(out_dir + "/oracle_report.txt") << report.str();
    CsvWriter csv(out_dir + "/oracle_report.csv",
                  std::vector<std::string>{"instance", "regime", "agreement"});
    auto dump = [&](const BatteryResult& battery, double regime_code) {
      for (const auto& rec : battery.records) {
        const double vals[3] = {double(rec.instance), regime_code, rec.agreement};
        csv.write_row(vals);
      }
    };
    dump(shaping, 0);
    dump(uniform, 1);
    csv.close();
  }

  const bool failed = shaping.failures > 0 || uniform.failures > 0;
  if (failed && !out_dir.empty()) {
    // Serialize the first failing instance for replay.
    for (const auto& rec : shaping.records) {
      if (!rec.pass) {
        std::ofstream(out_dir + "/failing_instance.json")
            << shaping_instance_json(kOracleSeed, rec.instance).dump(2);
        break;
      }
    }
    if (shaping.failures == 0) {
      for (const auto& rec : uniform.records) {
        if (!rec.pass) {
          std::ofstream(out_dir + "/failing_instance.json")
              << uniform_instance_json(kOracleSeed, rec.instance).dump(2);
          break;
        }
      }
    }
  }
  return failed ? 1 : 0;
}

PairedGradNorms run_paired_gradnorm(const ScenarioConfig& scenario, TrainerConfig trainer) {
  trainer.normalize_advantages = false;  // isolate the reward signal itself
  TrainerConfig raw = trainer;
  raw.use_normalized_reward = false;
  trainer.use_normalized_reward = true;

  PairedGradNorms out;
  out.normalized = train_run(scenario, trainer).metrics;
  out.raw = train_run(scenario, raw).metrics;
  int higher = 0;
  for (size_t i = 0; i < out.normalized.size(); ++i)
    if (out.normalized[i].grad_norm > out.raw[i].grad_norm) ++higher;
  out.fraction_normalized_higher =
      out.normalized.empty() ? 0.0 : double(higher) / out.normalized.size();
  return out;
}

int cmd_diag(const CliDiagOptions& opt) {
  ScenarioConfig scenario = load_scenario(opt.config_path);
  if (opt.seed) scenario.seed = *opt.seed;
  ensure_directory(opt.out_dir);
  std::ostringstream report;

  // Reward-diameter survey under the scripted tracker (a stand-in for
  // on-policy states of a competent policy).
  {
    Rng rng(scenario.seed);
    SimState s = reset_from(scenario, rng);
    std::vector<RewardBatch> batches;
    int steps_in_episode = 0;
    const int total_steps = 2000;
    for (int t = 0; t < total_steps; ++t) {
      batches.push_back(reward_batch(s, scenario));
      s = step(s, scripted_tracker_action(s, scenario), scenario);
      if (++steps_in_episode >= scenario.episode_length) {
        s = reset_from(scenario, rng);
        steps_in_episode = 0;
      }
    }
    const DiagnosticsReport diag = diameter_diagnostic(batches);
    report << "reward diameter: " << format_double(100.0 * diag.fraction_in_band)
           << "% of " << diag.batches << " steps in [1e-3, 1e-2]\n";
    report << "variance bound Var <= D^2/4: " << (diag.var_bound_ok ? "holds" : "VIOLATED")
           << " (max slack " << format_double(diag.max_var_bound_slack) << ")\n";

    CsvWriter csv(opt.out_dir + "/diameters.csv", std::vector<std::string>{"step", "diameter"});
    for (size_t i = 0; i < diag.diameters.size(); ++i) {
      const double vals[2] = {double(i), diag.diameters[i]};
      csv.write_row(vals);
    }
    csv.close();
  }

  // Estimator linearity on a short random-policy prefix.
  {
    TrainerConfig trainer;
    trainer.seed = scenario.seed + 17;
    Rng rng(trainer.seed);
    PolicyParams params;
    params.init(rng, trainer.init_scale);
    ValueParams vparams;
    vparams.init(rng, trainer.init_scale);
    trainer.rollout_length = 32;
    EnvCursor cursor;
    RolloutResult roll = collect_rollout(cursor, params, vparams, scenario, trainer, rng);
    std::vector<LinearitySample> samples;
    {
      Rng replay_rng(scenario.seed);
      SimState s = reset_from(scenario, replay_rng);
      for (const Transition& tr : roll.transitions) {
        LinearitySample ls;
        ls.transition = tr;
        ls.batch = reward_batch(s, scenario);
        samples.push_back(std::move(ls));
        s = step(s, tr.action, scenario);
      }
    }
    const double residual = estimator_linearity_check(params, samples, trainer);
    report << "estimator linearity residual: " << format_double(residual) << "\n";
  }

  // Same-seed gradient-norm traces, normalized vs raw rewards.
  {
    TrainerConfig trainer;
    trainer.seed = opt.seed.value_or(1);
    trainer.updates = 60;
    trainer.rollout_length = 512;
    const PairedGradNorms paired = run_paired_gradnorm(scenario, trainer);
    report << "gradient norm (normalized > raw): "
           << format_double(100.0 * paired.fraction_normalized_higher) << "% of "
           << paired.normalized.size() << " updates\n";

    CsvWriter csv(opt.out_dir + "/grad_norms.csv",
                  std::vector<std::string>{"update", "grad_norm_normalized", "grad_norm_raw"});
    std::vector<double> xs;
    PlotSeries norm_series{"normalized", {}}, raw_series{"raw", {}};
    for (size_t i = 0; i < paired.normalized.size(); ++i) {
      const double vals[3] = {paired.normalized[i].update, paired.normalized[i].grad_norm,
                              paired.raw[i].grad_norm};
      csv.write_row(vals);
      xs.push_back(paired.normalized[i].update);
      norm_series.ys.push_back(paired.normalized[i].grad_norm);
      raw_series.ys.push_back(paired.raw[i].grad_norm);
    }
    csv.close();
    write_svg_line_chart(opt.out_dir + "/grad_norms.svg",
                         "gradient norm, normalized vs raw rewards", xs,
                         std::vector<PlotSeries>{norm_series, raw_series});
  }

  std::ofstream(opt.out_dir + "/diag_report.txt") << report.str();
  std::cout << report.str();
  return 0;
}

}  // namespace pursuitlab
