#pragma once

#include <cstdint>

#include "pursuitlab/config.hpp"
#include "pursuitlab/geometry.hpp"
#include "pursuitlab/rng.hpp"

namespace pursuitlab {

// Full numerical environment state. Value type: `step` returns the successor
// instead of mutating, which is what makes candidate lookahead trivially pure.
struct SimState {
  Vec2 pursuer_pos;
  double pursuer_heading = 0.0;  // rad, kept in [-pi, pi)
  double pursuer_speed = 0.0;    // m/s, kept in [v_min, v_max]
  Vec2 target_pos;
  double target_heading = 0.0;
  double target_speed = 0.0;
  int64_t step_index = 0;
  Rng rng;            // consumed only by spawns
  double d_star = 0;  // target distance for this episode (fixed or randomized)

  bool operator==(const SimState& o) const {
    return pursuer_pos == o.pursuer_pos && pursuer_heading == o.pursuer_heading &&
           pursuer_speed == o.pursuer_speed && target_pos == o.target_pos &&
           target_heading == o.target_heading && target_speed == o.target_speed &&
           step_index == o.step_index && rng == o.rng && d_star == o.d_star;
  }
};

struct GeometrySummary {
  double distance = 0.0;
  Vec2 u_los;            // unit vector pursuer -> target
  Vec2 u_heading;        // pursuer heading unit vector
  double e_dir = 0.0;    // ||u_heading - u_los||, in [0, 2]
  double dist_err = 0.0; // distance - d_star, signed
  bool degenerate = false;  // coincident positions; e_dir defined as 0
};

// Number of actions in the task's discrete action space (5 / 3 / 15).
int num_actions(TaskKind task);

// Per-action kinematic commands. Integrated actions are indexed
// direction-major: action = dir_index * 3 + dist_index.
double turn_rate(TaskKind task, int action);    // rad/s, +left
double speed_delta(TaskKind task, int action);  // m/s per second

// Spawn a fresh episode seeded from cfg.seed.
SimState reset(const ScenarioConfig& cfg);

// Spawn a fresh episode continuing an existing stream (rollouts chain
// episodes through one generator so every episode sees a new draw).
SimState reset_from(const ScenarioConfig& cfg, Rng& rng);

// Advance one tick of dt. Pure: returns the successor state.
SimState step(const SimState& state, int action, const ScenarioConfig& cfg);

// One-step lookahead used to score candidate actions. Identical to `step`
// field-for-field and has no side effects on anything shared.
SimState peek(const SimState& state, int action, const ScenarioConfig& cfg);

GeometrySummary geometry(const SimState& state);

// Bearing of the target in the pursuer's body frame, in [-pi, pi).
double relative_bearing(const SimState& state);

// Rate at which the pursuer-target distance is currently shrinking (m/s).
double closing_speed(const SimState& state);

}  // namespace pursuitlab
