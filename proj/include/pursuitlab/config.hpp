#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace pursuitlab {

enum class TaskKind { direction, distance, integrated };

enum class StrategyKind { straight, circular };

const char* to_string(TaskKind task);
const char* to_string(StrategyKind kind);
TaskKind task_from_string(const std::string& s);

// How the target aircraft moves. A straight target keeps its spawn heading
// and flies at `speed`. A circular target rotates its heading by
// angular_rate*dt each step and translates at circular_radius*angular_rate,
// tracing a closed loop of roughly circular_radius.
struct TargetStrategy {
  StrategyKind kind = StrategyKind::straight;
  double speed = 2.0;            // m/s, straight only
  double circular_radius = 6.0;  // m, circular only
  double angular_rate = 0.3;     // rad/s, circular only

  double translation_speed() const {
    return kind == StrategyKind::circular ? circular_radius * angular_rate : speed;
  }
};

struct ScenarioConfig {
  TaskKind task = TaskKind::direction;
  double target_distance_d_star = 5.0;  // m
  double dt = 0.1;                      // s; 0.1 = 10 Hz
  int episode_length = 200;             // steps
  TargetStrategy target_strategy;
  bool randomize_distance = false;  // draw d* uniformly from [3, 12] per episode
  std::optional<std::string> nuisance_color;
  uint64_t seed = 0;
  double v_min = 0.0;  // m/s, pursuer speed clamp
  double v_max = 8.0;

  void validate() const;  // throws ConfigError naming the offending field
};

// Parse a scenario document (JSON object whose keys mirror the field names
// above). Unknown keys are a hard error.
ScenarioConfig parse_scenario(const std::string& text);
ScenarioConfig load_scenario(const std::string& path);

std::string scenario_to_json(const ScenarioConfig& cfg);

}  // namespace pursuitlab
