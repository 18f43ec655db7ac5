#include "pursuitlab/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "pursuitlab/errors.hpp"

namespace pursuitlab {

namespace {

const std::set<std::string> kColorTokens = {"red", "green", "blue", "yellow"};

using json = nlohmann::json;

void reject_unknown_keys(const json& obj, const std::set<std::string>& known,
                         const std::string& scope) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!known.count(it.key())) {
      throw ConfigError("unknown key '" + scope + it.key() + "' in scenario config");
    }
  }
}

TargetStrategy parse_strategy(const json& obj) {
  reject_unknown_keys(obj, {"kind", "speed", "circular_radius", "angular_rate"},
                      "target_strategy.");
  TargetStrategy st;
  if (obj.contains("kind")) {
    const std::string kind = obj.at("kind").get<std::string>();
    if (kind == "straight") {
      st.kind = StrategyKind::straight;
    } else if (kind == "circular") {
      st.kind = StrategyKind::circular;
    } else {
      throw ConfigError("target_strategy.kind must be 'straight' or 'circular', got '" + kind + "'");
    }
  }
  if (obj.contains("speed")) st.speed = obj.at("speed").get<double>();
  if (obj.contains("circular_radius")) {
    if (st.kind != StrategyKind::circular)
      throw ConfigError("target_strategy.circular_radius is only valid for kind 'circular'");
    st.circular_radius = obj.at("circular_radius").get<double>();
  }
  if (obj.contains("angular_rate")) {
    if (st.kind != StrategyKind::circular)
      throw ConfigError("target_strategy.angular_rate is only valid for kind 'circular'");
    st.angular_rate = obj.at("angular_rate").get<double>();
  }
  return st;
}

}  // namespace

const char* to_string(TaskKind task) {
  switch (task) {
    case TaskKind::direction: return "direction";
    case TaskKind::distance: return "distance";
    case TaskKind::integrated: return "integrated";
  }
  return "?";
}

const char* to_string(StrategyKind kind) {
  return kind == StrategyKind::straight ? "straight" : "circular";
}

TaskKind task_from_string(const std::string& s) {
  if (s == "direction") return TaskKind::direction;
  if (s == "distance") return TaskKind::distance;
  if (s == "integrated") return TaskKind::integrated;
  throw ConfigError("task must be one of direction/distance/integrated, got '" + s + "'");
}

void ScenarioConfig::validate() const {
  if (!(target_distance_d_star > 0.0) || !std::isfinite(target_distance_d_star))
    throw ConfigError("target_distance_d_star must be a positive finite number");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("dt must be positive");
  if (episode_length < 1) throw ConfigError("episode_length must be >= 1");
  if (!(v_min >= 0.0)) throw ConfigError("v_min must be >= 0");
  if (!(v_max > v_min)) throw ConfigError("v_max must exceed v_min");
  if (target_strategy.kind == StrategyKind::circular) {
    if (!(target_strategy.circular_radius > 0.0))
      throw ConfigError("target_strategy.circular_radius must be > 0");
    if (target_strategy.angular_rate == 0.0 || !std::isfinite(target_strategy.angular_rate))
      throw ConfigError("target_strategy.angular_rate must be nonzero");
  } else {
    if (!(target_strategy.speed >= 0.0) || !std::isfinite(target_strategy.speed))
      throw ConfigError("target_strategy.speed must be >= 0");
  }
  if (nuisance_color && !kColorTokens.count(*nuisance_color))
    throw ConfigError("nuisance_color must be one of red/green/blue/yellow, got '" +
                      *nuisance_color + "'");
}

ScenarioConfig parse_scenario(const std::string& text) {
  json obj;
  try {
    obj = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("scenario config is not valid JSON: ") + e.what());
  }
  if (!obj.is_object()) throw ConfigError("scenario config must be a JSON object");

  reject_unknown_keys(obj,
                      {"task", "target_distance_d_star", "dt", "episode_length",
                       "target_strategy", "randomize_distance", "nuisance_color", "seed",
                       "v_min", "v_max"},
                      "");

  ScenarioConfig cfg;
  try {
    if (obj.contains("task")) cfg.task = task_from_string(obj.at("task").get<std::string>());
    if (obj.contains("target_distance_d_star"))
      cfg.target_distance_d_star = obj.at("target_distance_d_star").get<double>();
    if (obj.contains("dt")) cfg.dt = obj.at("dt").get<double>();
    if (obj.contains("episode_length")) cfg.episode_length = obj.at("episode_length").get<int>();
    if (obj.contains("target_strategy")) cfg.target_strategy = parse_strategy(obj.at("target_strategy"));
    if (obj.contains("randomize_distance"))
      cfg.randomize_distance = obj.at("randomize_distance").get<bool>();
    if (obj.contains("nuisance_color") && !obj.at("nuisance_color").is_null())
      cfg.nuisance_color = obj.at("nuisance_color").get<std::string>();
    if (obj.contains("seed")) cfg.seed = obj.at("seed").get<uint64_t>();
    if (obj.contains("v_min")) cfg.v_min = obj.at("v_min").get<double>();
    if (obj.contains("v_max")) cfg.v_max = obj.at("v_max").get<double>();
  } catch (const json::type_error& e) {
    throw ConfigError(std::string("scenario config field has wrong type: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario config '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

std::string scenario_to_json(const ScenarioConfig& cfg) {
  json st;
  st["kind"] = to_string(cfg.target_strategy.kind);
  if (cfg.target_strategy.kind == StrategyKind::straight) {
    st["speed"] = cfg.target_strategy.speed;
  } else {
    st["circular_radius"] = cfg.target_strategy.circular_radius;
    st["angular_rate"] = cfg.target_strategy.angular_rate;
  }
  json obj;
  obj["task"] = to_string(cfg.task);
  obj["target_distance_d_star"] = cfg.target_distance_d_star;
  obj["dt"] = cfg.dt;
  obj["episode_length"] = cfg.episode_length;
  obj["target_strategy"] = st;
  obj["randomize_distance"] = cfg.randomize_distance;
  obj["nuisance_color"] = cfg.nuisance_color ? json(*cfg.nuisance_color) : json(nullptr);
  obj["seed"] = cfg.seed;
  obj["v_min"] = cfg.v_min;
  obj["v_max"] = cfg.v_max;
  return obj.dump(2);
}

}  // namespace pursuitlab
