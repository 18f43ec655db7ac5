#include "pursuitlab/observe.hpp"

#include <cmath>
#include <cstdio>

#include "pursuitlab/errors.hpp"

namespace pursuitlab {

namespace {

std::string fmt3(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

std::string direction_text(const SimState& s) {
  const GeometrySummary g = geometry(s);
  return "target bearing " + fmt3(relative_bearing(s)) + " rad, heading " +
         fmt3(s.pursuer_heading) + " rad, distance " + fmt3(g.distance) + " m";
}

std::string distance_text(const SimState& s) {
  const GeometrySummary g = geometry(s);
  return "distance " + fmt3(g.distance) + " m, target distance " + fmt3(s.d_star) +
         " m, closing speed " + fmt3(closing_speed(s)) + " m/s, speed " +
         fmt3(s.pursuer_speed) + " m/s";
}

std::array<double, 6> direction_features(const SimState& s) {
  const GeometrySummary g = geometry(s);
  const double b = relative_bearing(s);
  return {std::sin(b),          std::cos(b),       std::sin(s.pursuer_heading),
          std::cos(s.pursuer_heading), g.e_dir / 2.0, g.distance / 20.0};
}

std::array<double, 4> distance_features(const SimState& s) {
  const GeometrySummary g = geometry(s);
  return {g.dist_err / 10.0, closing_speed(s) / 10.0, s.pursuer_speed / 10.0,
          s.d_star / 10.0};
}

constexpr const char* kColorPrefix = "; target color ";

}  // namespace

std::string render_text(const SimState& state, const ScenarioConfig& cfg) {
  switch (cfg.task) {
    case TaskKind::direction: return direction_text(state);
    case TaskKind::distance: return distance_text(state);
    case TaskKind::integrated: {
      std::string text = direction_text(state) + "; " + distance_text(state);
      if (cfg.nuisance_color) text += kColorPrefix + *cfg.nuisance_color;
      return text;
    }
  }
  return {};
}

ObservationBundle encode_features(const SimState& state, TaskKind task,
                                  const ScenarioConfig& cfg) {
  ObservationBundle b;
  b.task = task;
  b.task_tag[static_cast<int>(task)] = 1.0;
  switch (task) {
    case TaskKind::direction: {
      const auto f = direction_features(state);
      for (int i = 0; i < 6; ++i) b.features[i] = f[i];
      b.text = direction_text(state);
      break;
    }
    case TaskKind::distance: {
      const auto f = distance_features(state);
      for (int i = 0; i < 4; ++i) b.features[i] = f[i];
      b.text = distance_text(state);
      break;
    }
    case TaskKind::integrated: {
      const auto fd = direction_features(state);
      const auto fv = distance_features(state);
      for (int i = 0; i < 6; ++i) b.features[i] = fd[i];
      for (int i = 0; i < 4; ++i) b.features[6 + i] = fv[i];
      ScenarioConfig render_cfg = cfg;
      render_cfg.task = TaskKind::integrated;
      b.text = render_text(state, render_cfg);
      break;
    }
  }
  for (double v : b.features) {
    if (!std::isfinite(v)) throw NumericalError("non-finite observation feature");
  }
  return b;
}

std::pair<ObservationBundle, ObservationBundle> decouple(const ObservationBundle& composite) {
  if (composite.task != TaskKind::integrated)
    throw DomainError("decouple requires a composite (integrated) observation");

  ObservationBundle dir;
  dir.task = TaskKind::direction;
  dir.task_tag[static_cast<int>(TaskKind::direction)] = 1.0;
  for (int i = 0; i < 6; ++i) dir.features[i] = composite.features[i];

  ObservationBundle dist;
  dist.task = TaskKind::distance;
  dist.task_tag[static_cast<int>(TaskKind::distance)] = 1.0;
  for (int i = 0; i < 4; ++i) dist.features[i] = composite.features[6 + i];

  std::string text = composite.text;
  const auto color_at = text.find(kColorPrefix);
  if (color_at != std::string::npos) text.resize(color_at);
  const auto split_at = text.find("; ");
  if (split_at == std::string::npos)
    throw DomainError("composite observation text is missing the sub-task separator");
  dir.text = text.substr(0, split_at);
  dist.text = text.substr(split_at + 2);
  return {dir, dist};
}

}  // namespace pursuitlab
