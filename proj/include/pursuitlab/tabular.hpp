#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pursuitlab/config.hpp"
#include "pursuitlab/rng.hpp"
#include "pursuitlab/trainer.hpp"

namespace pursuitlab {

// Small exhaustively-solvable MDP used to brute-force policy-preservation
// claims about shaped and normalized rewards.
struct TabularMDP {
  int n_states = 0;
  int n_actions = 0;
  std::vector<double> transition;  // [s][a][s'], rows sum to 1
  std::vector<double> reward;      // [s][a]
  double gamma = 0.9;
  std::vector<uint8_t> terminal;   // successor value masked to 0 when set

  double p(int s, int a, int s2) const {
    return transition[(s * n_actions + a) * n_states + s2];
  }
  double& p(int s, int a, int s2) {
    return transition[(s * n_actions + a) * n_states + s2];
  }
  double r(int s, int a) const { return reward[s * n_actions + a]; }
  double& r(int s, int a) { return reward[s * n_actions + a]; }

  void validate() const;  // caps (20 states, 5 actions), stochastic rows, gamma
};

struct QTable {
  int n_states = 0;
  int n_actions = 0;
  std::vector<double> q;
  bool converged = false;
  int iterations = 0;
  double residual = 0.0;

  double at(int s, int a) const { return q[s * n_actions + a]; }
};

// Synchronous (Jacobi) value iteration to sup-norm residual <= tol. The
// parallel path backs up states concurrently from the previous sweep's
// table, so it is bit-identical to the serial reference.
QTable value_iteration(const TabularMDP& mdp, double tol = 1e-10, int max_iterations = 100000,
                       ExecMode mode = ExecMode::parallel);

// Per-state sets of actions within `tol` of the best Q value.
std::vector<std::vector<int>> greedy_action_sets(const QTable& q, double tol = 1e-9);

// M_D with R_D(s,a) = R(s,a) + gamma*E[phi(s')] - phi(s).
TabularMDP shaped_mdp(const TabularMDP& mdp, std::span<const double> phi);

// Per-state z-score of the reward rows: (R - mu_s) / (sigma_s + eps0).
TabularMDP normalized_mdp(const TabularMDP& mdp, double epsilon0 = kEpsilon0);

struct InvarianceReport {
  bool argmax_match = false;
  int disagreeing_states = 0;
  double disagreement_rate = 0.0;
  double max_value_relation_err = 0.0;  // vs the closed-form Q relation
  QTable q_base, q_transformed;
};

// Eq.-style exact checks: argmax sets must agree on every state.
InvarianceReport shaping_invariance_check(const TabularMDP& mdp, std::span<const double> phi,
                                          double vi_tol = 1e-10);

// Uniform regime: per-state reward stats are identical across states, so the
// normalization is one global affine map and the check is exact. General
// regime: state-dependent stats; the disagreement rate is reported, not
// asserted zero.
InvarianceReport normalization_invariance_check(const TabularMDP& mdp,
                                                double epsilon0 = kEpsilon0,
                                                double vi_tol = 1e-10);

// Random instance generators (fixed caps, gamma in [0.5, 0.95]).
TabularMDP random_mdp(Rng& rng, int max_states = 20, int max_actions = 5);

// Rescale reward rows so every state has mean mu_bar and stddev sigma_bar.
void make_stats_uniform(TabularMDP& mdp, double mu_bar, double sigma_bar);

// Center each state's rewards and scale state s to sigma interpolated
// log-uniformly from 1 to `spread` across the state index.
void apply_sigma_spread(TabularMDP& mdp, double spread);

struct BatteryRecord {
  int instance = 0;
  std::string regime;
  double agreement = 0.0;  // fraction of states whose argmax sets agree
  bool pass = false;
};

struct BatteryResult {
  std::vector<BatteryRecord> records;
  int failures = 0;
};

BatteryResult run_shaping_battery(int n_instances, uint64_t seed,
                                  ExecMode mode = ExecMode::parallel);
BatteryResult run_uniform_normalization_battery(int n_instances, uint64_t seed,
                                                ExecMode mode = ExecMode::parallel);

struct SpreadPoint {
  double spread = 1.0;
  double mean_disagreement_rate = 0.0;
};

// The 3-point adversarial family (spread 1x, 10x, 100x); the disagreement
// rate is monotone non-decreasing along it.
std::vector<SpreadPoint> run_sigma_spread_family(int n_per_point, uint64_t seed,
                                                 ExecMode mode = ExecMode::parallel);

// Coarse bearing-error x distance-error discretization of the pursuit
// direction task against a stationary target, built from the same dense
// reward formulas the simulator uses.
struct PursuitGridConfig {
  int bearing_bins = 10;
  int distance_bins = 2;
  double distance_err_span = 2.0;  // bins cover [-span, +span]
  double gamma = 0.9;
};

TabularMDP discretized_pursuit_mdp(const PursuitGridConfig& grid, const ScenarioConfig& scenario);

}  // namespace pursuitlab
