#include "pursuitlab/sim.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pursuitlab/errors.hpp"

namespace pursuitlab {

namespace {

// Hard/soft turn commands, ~30 deg/s and ~10 deg/s. Calibrated together with
// the reward coefficients so per-step candidate reward spreads land in the
// 1e-3..1e-2 band the diameter diagnostic enforces.
constexpr double kHardTurn = 0.52;
constexpr double kSoftTurn = 0.17;
constexpr double kSpeedDelta = 0.5;  // m/s per command-second

constexpr double kInitialPursuerSpeed = 2.0;  // m/s at spawn

// Canonical direction actions: hard left, soft left, hold, soft right, hard right.
constexpr double kTurnTable[5] = {+kHardTurn, +kSoftTurn, 0.0, -kSoftTurn, -kHardTurn};
// Canonical distance actions: speed up, slow down, hold.
constexpr double kSpeedTable[3] = {+kSpeedDelta, -kSpeedDelta, 0.0};

void check_action(TaskKind task, int action) {
  if (action < 0 || action >= num_actions(task)) {
    throw DomainError("action " + std::to_string(action) + " is not in the " +
                      std::string(to_string(task)) + " task's action space");
  }
}

}  // namespace

int num_actions(TaskKind task) {
  switch (task) {
    case TaskKind::direction: return 5;
    case TaskKind::distance: return 3;
    case TaskKind::integrated: return 15;
  }
  return 0;
}

double turn_rate(TaskKind task, int action) {
  check_action(task, action);
  switch (task) {
    case TaskKind::direction: return kTurnTable[action];
    case TaskKind::distance: return 0.0;
    case TaskKind::integrated: return kTurnTable[action / 3];
  }
  return 0.0;
}

double speed_delta(TaskKind task, int action) {
  check_action(task, action);
  switch (task) {
    case TaskKind::direction: return 0.0;
    case TaskKind::distance: return kSpeedTable[action];
    case TaskKind::integrated: return kSpeedTable[action % 3];
  }
  return 0.0;
}

SimState reset(const ScenarioConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  return reset_from(cfg, rng);
}

SimState reset_from(const ScenarioConfig& cfg, Rng& rng) {
  SimState s;
  s.d_star = cfg.randomize_distance ? rng.uniform(3.0, 12.0) : cfg.target_distance_d_star;

  const double spawn_distance = rng.uniform(0.8 * s.d_star, 1.2 * s.d_star);
  const double spawn_bearing = rng.uniform(-kPi / 4.0, kPi / 4.0);
  const double target_heading = rng.uniform(-kPi, kPi);

  s.pursuer_pos = {0.0, 0.0};
  s.pursuer_heading = 0.0;  // +x
  s.pursuer_speed = std::clamp(kInitialPursuerSpeed, cfg.v_min, cfg.v_max);
  s.target_pos = unit_from_angle(spawn_bearing) * spawn_distance;
  s.target_heading = wrap_angle(target_heading);
  s.target_speed = cfg.target_strategy.translation_speed();
  s.step_index = 0;
  s.rng = rng;
  return s;
}

SimState step(const SimState& state, int action, const ScenarioConfig& cfg) {
  check_action(cfg.task, action);
  SimState n = state;

  // Pursuer: unicycle update. Heading and speed are updated first, then the
  // pursuer translates with the new values.
  if (cfg.task == TaskKind::distance) {
    // The distance task presumes heading control is solved: the pursuer is
    // pointed along the line of sight each tick and only speed is commanded.
    const Vec2 los = state.target_pos - state.pursuer_pos;
    if (los.norm() > 0.0) n.pursuer_heading = wrap_angle(std::atan2(los.y, los.x));
  } else {
    n.pursuer_heading =
        wrap_angle(state.pursuer_heading + turn_rate(cfg.task, action) * cfg.dt);
  }
  n.pursuer_speed = std::clamp(state.pursuer_speed + speed_delta(cfg.task, action) * cfg.dt,
                               cfg.v_min, cfg.v_max);
  n.pursuer_pos =
      state.pursuer_pos + unit_from_angle(n.pursuer_heading) * (n.pursuer_speed * cfg.dt);

  // Target: strategy update. The circular strategy rotates the heading first
  // and then translates, so a full revolution closes exactly.
  if (cfg.target_strategy.kind == StrategyKind::circular) {
    n.target_heading =
        wrap_angle(state.target_heading + cfg.target_strategy.angular_rate * cfg.dt);
  }
  n.target_pos =
      state.target_pos + unit_from_angle(n.target_heading) * (state.target_speed * cfg.dt);

  n.step_index = state.step_index + 1;
  return n;
}

SimState peek(const SimState& state, int action, const ScenarioConfig& cfg) {
  return step(state, action, cfg);
}

GeometrySummary geometry(const SimState& state) {
  GeometrySummary g;
  const Vec2 los = state.target_pos - state.pursuer_pos;
  g.distance = los.norm();
  g.u_heading = unit_from_angle(state.pursuer_heading);
  if (g.distance == 0.0) {
    g.degenerate = true;
    g.u_los = g.u_heading;  // e_dir := 0 by convention
    g.e_dir = 0.0;
  } else {
    g.u_los = los * (1.0 / g.distance);
    g.e_dir = (g.u_heading - g.u_los).norm();
  }
  g.dist_err = g.distance - state.d_star;
  return g;
}

double relative_bearing(const SimState& state) {
  const GeometrySummary g = geometry(state);
  if (g.degenerate) return 0.0;
  return wrap_angle(std::atan2(g.u_heading.cross(g.u_los), g.u_heading.dot(g.u_los)));
}

double closing_speed(const SimState& state) {
  const GeometrySummary g = geometry(state);
  if (g.degenerate) return 0.0;
  const Vec2 v_pursuer = g.u_heading * state.pursuer_speed;
  const Vec2 v_target = unit_from_angle(state.target_heading) * state.target_speed;
  return (v_pursuer - v_target).dot(g.u_los);
}

}  // namespace pursuitlab
