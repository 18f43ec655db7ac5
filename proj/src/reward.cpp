#include "pursuitlab/reward.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pursuitlab/errors.hpp"

namespace pursuitlab {

namespace {

// Both coefficients are calibrated so per-step candidate reward spreads land
// in [1e-3, 1e-2] (the diameter diagnostic enforces this): turn commands move
// e_dir by ~0.1 per step, speed commands move |d - d*| by ~0.01.
constexpr double kDirCoeff = 0.05;
constexpr double kDistCoeff = 0.4;

double population_variance(std::span<const double> values, double mean) {
  double acc = 0.0;
  for (double v : values) {
    const double d = v - mean;
    acc += d * d;
  }
  return acc / static_cast<double>(values.size());
}

// Rounding allowance for the Var <= D^2/4 comparison: the mean of a constant
// batch is not exactly representable, which leaves O((eps*|r|)^2) variance
// against a diameter of exactly zero.
double variance_guard(std::span<const double> values, double bound) {
  double max_abs = 0.0;
  for (double v : values) max_abs = std::max(max_abs, std::fabs(v));
  const double noise = 64.0 * 2.220446049250313e-16 * max_abs;
  return bound * 1e-12 + noise * noise;
}

}  // namespace

double dense_reward(const SimState& state, int action, const ScenarioConfig& cfg) {
  const GeometrySummary before = geometry(state);
  const GeometrySummary after = geometry(peek(state, action, cfg));
  double r = 0.0;
  if (cfg.task == TaskKind::direction || cfg.task == TaskKind::integrated)
    r += kDirCoeff * (before.e_dir - after.e_dir);
  if (cfg.task == TaskKind::distance || cfg.task == TaskKind::integrated)
    r += kDistCoeff * (std::fabs(before.dist_err) - std::fabs(after.dist_err));
  return r;
}

RewardBatch normalize_rewards(std::span<const double> r_dense, double epsilon0) {
  const int n = static_cast<int>(r_dense.size());
  if (n < 2) throw DomainError("reward normalization needs at least two candidates");

  RewardBatch b;
  b.r_dense.assign(r_dense.begin(), r_dense.end());

  double sum = 0.0;
  for (double v : b.r_dense) sum += v;
  b.mu = sum / n;
  const double var = population_variance(b.r_dense, b.mu);
  b.sigma = std::sqrt(var);

  const auto [lo, hi] = std::minmax_element(b.r_dense.begin(), b.r_dense.end());
  b.diameter = *hi - *lo;

  // Popoviciu-type bound; holds for every batch or the statistics are wrong.
  const double bound = b.diameter * b.diameter / 4.0;
  if (var > bound + variance_guard(b.r_dense, bound))
    throw NumericalError("reward batch variance " + std::to_string(var) +
                         " exceeds diameter bound " + std::to_string(bound));

  b.r_norm.resize(n);
  const double denom = b.sigma + epsilon0;
  for (int a = 0; a < n; ++a) b.r_norm[a] = (b.r_dense[a] - b.mu) / denom;
  return b;
}

RewardBatch reward_batch(const SimState& state, const ScenarioConfig& cfg, double epsilon0) {
  const int n = num_actions(cfg.task);
  std::vector<double> r(n);
  for (int a = 0; a < n; ++a) r[a] = dense_reward(state, a, cfg);
  RewardBatch b = normalize_rewards(r, epsilon0);
  b.step_ref = state.step_index;
  return b;
}

ShapingPotential potential(const RewardBatch& batch, double gamma, double epsilon0) {
  if (!(gamma >= 0.0 && gamma < 1.0))
    throw DomainError("potential requires gamma in [0, 1)");
  ShapingPotential p;
  p.gamma = gamma;
  p.epsilon0 = epsilon0;
  p.phi = batch.mu / ((batch.sigma + epsilon0) * (1.0 - gamma));
  return p;
}

double decomposition_residual(const RewardBatch& batch_t, const RewardBatch& batch_t1,
                              int action_index, double gamma, double epsilon0) {
  const double r_n = batch_t.r_norm.at(action_index);
  const double r_d = batch_t.r_dense.at(action_index);
  const double phi_t = potential(batch_t, gamma, epsilon0).phi;
  const double phi_t1 = potential(batch_t1, gamma, epsilon0).phi;
  return r_n - (r_d / (batch_t.sigma + epsilon0) + gamma * phi_t1 - phi_t);
}

DiagnosticsReport diameter_diagnostic(std::span<const RewardBatch> trajectory) {
  DiagnosticsReport report;
  report.batches = static_cast<int64_t>(trajectory.size());
  report.diameters.reserve(trajectory.size());
  report.max_var_bound_slack = -INFINITY;

  int64_t in_band = 0;
  for (const RewardBatch& b : trajectory) {
    report.diameters.push_back(b.diameter);
    if (b.diameter >= kDiameterBandLo && b.diameter <= kDiameterBandHi) ++in_band;
    const double var = population_variance(b.r_dense, b.mu);
    const double bound = b.diameter * b.diameter / 4.0;
    const double slack = var - bound;
    report.max_var_bound_slack = std::max(report.max_var_bound_slack, slack);
    if (slack > variance_guard(b.r_dense, bound)) report.var_bound_ok = false;
  }
  if (report.batches > 0)
    report.fraction_in_band = static_cast<double>(in_band) / static_cast<double>(report.batches);
  return report;
}

}  // namespace pursuitlab
