#pragma once

#include <vector>

#include "pursuitlab/observe.hpp"
#include "pursuitlab/rng.hpp"

namespace pursuitlab {

// Small critic: task tag + features -> hidden tanh -> scalar value. Trained
// by plain regression to the GAE returns, separately from the policy loss.
inline constexpr int kValueInputWidth = kTaskTagWidth + kFeatureWidth;
inline constexpr int kValueHiddenWidth = 32;
inline constexpr int kVW1Offset = 0;
inline constexpr int kVB1Offset = kVW1Offset + kValueInputWidth * kValueHiddenWidth;
inline constexpr int kVW2Offset = kVB1Offset + kValueHiddenWidth;
inline constexpr int kVB2Offset = kVW2Offset + kValueHiddenWidth;
inline constexpr int kValueParamCount = kVB2Offset + 1;

struct ValueParams {
  std::vector<double> values;
  ValueParams() : values(kValueParamCount, 0.0) {}
  void init(Rng& rng, double scale);
};

double value_forward(const ValueParams& params, const ObservationBundle& obs);

// Accumulate d(0.5*(V-target)^2)/d(params) * weight into grad; returns V.
double value_backward(const ValueParams& params, const ObservationBundle& obs,
                      double target, double weight, std::vector<double>& grad);

}  // namespace pursuitlab
