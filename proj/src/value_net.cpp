#include "pursuitlab/value_net.hpp"

#include <array>
#include <cmath>

namespace pursuitlab {

namespace {

struct ValueActivation {
  std::array<double, kValueInputWidth> x;
  std::array<double, kValueHiddenWidth> hidden;
  double v = 0.0;
};

ValueActivation forward(const ValueParams& params, const ObservationBundle& obs) {
  ValueActivation act;
  for (int j = 0; j < kTaskTagWidth; ++j) act.x[j] = obs.task_tag[j];
  for (int j = 0; j < kFeatureWidth; ++j) act.x[kTaskTagWidth + j] = obs.features[j];

  for (int h = 0; h < kValueHiddenWidth; ++h) {
    double z = params.values[kVB1Offset + h];
    for (int j = 0; j < kValueInputWidth; ++j)
      z += act.x[j] * params.values[kVW1Offset + j * kValueHiddenWidth + h];
    act.hidden[h] = std::tanh(z);
  }
  act.v = params.values[kVB2Offset];
  for (int h = 0; h < kValueHiddenWidth; ++h)
    act.v += act.hidden[h] * params.values[kVW2Offset + h];
  return act;
}

}  // namespace

void ValueParams::init(Rng& rng, double scale) {
  for (double& v : values) v = rng.uniform(-scale, scale);
}

double value_forward(const ValueParams& params, const ObservationBundle& obs) {
  return forward(params, obs).v;
}

double value_backward(const ValueParams& params, const ObservationBundle& obs,
                      double target, double weight, std::vector<double>& grad) {
  const ValueActivation act = forward(params, obs);
  const double dv = weight * (act.v - target);

  grad[kVB2Offset] += dv;
  for (int h = 0; h < kValueHiddenWidth; ++h) {
    grad[kVW2Offset + h] += dv * act.hidden[h];
    const double dz = dv * params.values[kVW2Offset + h] * (1.0 - act.hidden[h] * act.hidden[h]);
    grad[kVB1Offset + h] += dz;
    for (int j = 0; j < kValueInputWidth; ++j) {
      if (act.x[j] != 0.0) grad[kVW1Offset + j * kValueHiddenWidth + h] += act.x[j] * dz;
    }
  }
  return act.v;
}

}  // namespace pursuitlab
