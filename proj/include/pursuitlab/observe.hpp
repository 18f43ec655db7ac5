#pragma once

#include <array>
#include <string>
#include <utility>

#include "pursuitlab/config.hpp"
#include "pursuitlab/sim.hpp"

namespace pursuitlab {

inline constexpr int kFeatureWidth = 10;
inline constexpr int kTaskTagWidth = 3;

// One observation as the policy sees it: the rendered prompt text (what an
// LLM would read; logged verbatim), a fixed-width numeric feature vector
// (what the stand-in policy consumes), and a one-hot task tag.
struct ObservationBundle {
  std::string text;
  std::array<double, kFeatureWidth> features{};
  std::array<double, kTaskTagWidth> task_tag{};
  TaskKind task = TaskKind::direction;
};

// Deterministic textual rendering at 3 decimal places. Templates:
//   direction: "target bearing {b} rad, heading {h} rad, distance {d} m"
//   distance:  "distance {d} m, target distance {ds} m, closing speed {c} m/s, speed {v} m/s"
//   integrated: direction "; " distance, plus "; target color {c}" when the
//   scenario carries a nuisance color. Adjacent 10 Hz states differ only in
//   digits.
std::string render_text(const SimState& state, const ScenarioConfig& cfg);

ObservationBundle encode_features(const SimState& state, TaskKind task,
                                  const ScenarioConfig& cfg);

// Split a composite bundle into the two sub-task bundles the same state
// would have produced directly. Exact round trip, text included.
std::pair<ObservationBundle, ObservationBundle> decouple(const ObservationBundle& composite);

}  // namespace pursuitlab
