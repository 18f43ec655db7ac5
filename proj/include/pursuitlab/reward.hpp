#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pursuitlab/config.hpp"
#include "pursuitlab/sim.hpp"

namespace pursuitlab {

inline constexpr double kEpsilon0 = 1e-5;  // stabilizer in the z-score denominator

// Dense rewards of every candidate action at one step, with the batch
// statistics and their z-score normalization. Statistics are population
// moments over the candidate set (divide by N, not N-1).
struct RewardBatch {
  int64_t step_ref = 0;
  std::vector<double> r_dense;  // R_D per candidate
  double mu = 0.0;
  double sigma = 0.0;
  std::vector<double> r_norm;  // (R_D - mu) / (sigma + eps0)
  double diameter = 0.0;       // max - min of r_dense
};

// State potential induced by the normalization statistics:
// phi = mu / ((sigma + eps0) * (1 - gamma)).
struct ShapingPotential {
  double phi = 0.0;
  double gamma = 0.0;
  double epsilon0 = kEpsilon0;
};

// Error-decrease reward for one candidate, computed by pure lookahead:
//   direction:  c * (e_dir(s) - e_dir(peek(s,a)))
//   distance:   c * (|d(s)-d*| - |d(peek(s,a))-d*|)
//   integrated: sum of both.
double dense_reward(const SimState& state, int action, const ScenarioConfig& cfg);

// Statistics + z-score of an arbitrary dense-reward vector (|values| >= 2).
// Enforces the Popoviciu bound Var <= diameter^2/4 on every batch.
RewardBatch normalize_rewards(std::span<const double> r_dense, double epsilon0 = kEpsilon0);

// Score all candidates of cfg.task and z-score normalize. Throws DomainError
// for fewer than two candidates and NumericalError if the Popoviciu bound
// Var(R_D) <= diameter^2/4 is ever violated.
RewardBatch reward_batch(const SimState& state, const ScenarioConfig& cfg,
                         double epsilon0 = kEpsilon0);

ShapingPotential potential(const RewardBatch& batch, double gamma,
                           double epsilon0 = kEpsilon0);

// Residual of rewriting the normalized reward as scaled-dense plus a
// potential difference across two consecutive steps:
//   R_N,t(a) - [ R_D,t(a)/(sigma_t+eps0) + gamma*phi_{t+1} - phi_t ].
// Exactly zero when (mu, sigma) agree across the steps; otherwise a measure
// of how much the stationarity approximation is off.
double decomposition_residual(const RewardBatch& batch_t, const RewardBatch& batch_t1,
                              int action_index, double gamma,
                              double epsilon0 = kEpsilon0);

struct DiagnosticsReport {
  int64_t batches = 0;
  std::vector<double> diameters;       // per step
  double fraction_in_band = 0.0;       // diameter in [1e-3, 1e-2]
  double max_var_bound_slack = 0.0;    // max over batches of Var - D^2/4 (<= 0)
  bool var_bound_ok = true;
};

inline constexpr double kDiameterBandLo = 1e-3;
inline constexpr double kDiameterBandHi = 1e-2;

DiagnosticsReport diameter_diagnostic(std::span<const RewardBatch> trajectory);

}  // namespace pursuitlab
