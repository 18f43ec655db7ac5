#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <vector>

#include "doctest.h"
#include "pursuitlab/errors.hpp"
#include "pursuitlab/reward.hpp"

using namespace pursuitlab;

namespace {

ScenarioConfig config_for(TaskKind task) {
  ScenarioConfig cfg;
  cfg.task = task;
  cfg.seed = 7;
  return cfg;
}

SimState state_with_target(double tx, double ty, double pursuer_speed = 2.0) {
  SimState s;
  s.pursuer_pos = {0.0, 0.0};
  s.pursuer_heading = 0.0;
  s.pursuer_speed = pursuer_speed;
  s.target_pos = {tx, ty};
  s.target_heading = 0.0;
  s.target_speed = 0.0;
  s.d_star = 5.0;
  return s;
}

}  // namespace

TEST_CASE("a geometry-preserving action earns exactly zero dense reward") {
  // Frozen pursuer, frozen target: hold heading + hold speed changes nothing.
  ScenarioConfig cfg = config_for(TaskKind::integrated);
  SimState s = state_with_target(5.0, 0.0, /*pursuer_speed=*/0.0);
  CHECK(dense_reward(s, 2 * 3 + 2, cfg) == 0.0);
}

TEST_CASE("mirror-symmetric turns earn equal rewards when the target is dead ahead") {
  const ScenarioConfig cfg = config_for(TaskKind::direction);
  const SimState s = state_with_target(5.0, 0.0);
  const double soft_left = dense_reward(s, 1, cfg);
  const double soft_right = dense_reward(s, 3, cfg);
  CHECK(std::fabs(soft_left - soft_right) <= 1e-12);
  const double hard_left = dense_reward(s, 0, cfg);
  const double hard_right = dense_reward(s, 4, cfg);
  CHECK(std::fabs(hard_left - hard_right) <= 1e-12);
}

TEST_CASE("turning toward an offset target beats turning away") {
  const ScenarioConfig cfg = config_for(TaskKind::direction);
  const SimState s = state_with_target(4.0, 3.0);  // target up-left
  CHECK(dense_reward(s, 0, cfg) > dense_reward(s, 4, cfg));
  CHECK(dense_reward(s, 1, cfg) > dense_reward(s, 3, cfg));
}

TEST_CASE("constant batches normalize to zero") {
  const RewardBatch b = normalize_rewards(std::vector<double>{0.25, 0.25, 0.25});
  CHECK(b.sigma == 0.0);
  CHECK(b.diameter == 0.0);
  for (double r : b.r_norm) CHECK(r == 0.0);
}

TEST_CASE("the worked three-candidate batch matches the frozen oracle values") {
  const RewardBatch b = normalize_rewards(std::vector<double>{0.001, 0.002, 0.003});
  CHECK(b.mu == doctest::Approx(0.002).epsilon(1e-15));
  CHECK(b.sigma == doctest::Approx(0.000816496580927726).epsilon(1e-12));
  // Eq.-faithful z-scores include epsilon0 in the denominator:
  // 0.001 / (sigma + 1e-5) = 1.2099263603456409.
  CHECK(b.r_norm[0] == doctest::Approx(-1.2099263603456409).epsilon(1e-12));
  CHECK(b.r_norm[1] == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(b.r_norm[2] == doctest::Approx(+1.2099263603456409).epsilon(1e-12));
  CHECK(b.diameter == doctest::Approx(0.002).epsilon(1e-15));
}

TEST_CASE("normalized batches have unit variance up to the epsilon0 shrinkage") {
  Rng rng(41);
  for (int trial = 0; trial < 500; ++trial) {
    const int n = 2 + static_cast<int>(rng.below(14));
    std::vector<double> values(n);
    const double scale = std::pow(10.0, rng.uniform(-3.0, 2.0));
    for (double& v : values) v = rng.normal(0.0, scale);
    const RewardBatch b = normalize_rewards(values);
    if (b.sigma == 0.0) continue;

    double mean = 0.0, var = 0.0;
    for (double r : b.r_norm) mean += r;
    mean /= n;
    for (double r : b.r_norm) var += (r - mean) * (r - mean);
    var /= n;

    CHECK(std::fabs(mean) <= 1e-12);
    // Exact relation: Var(R_N) = sigma^2 / (sigma + eps0)^2.
    const double shrink = b.sigma / (b.sigma + kEpsilon0);
    CHECK(var == doctest::Approx(shrink * shrink).epsilon(1e-9));
    CHECK(var <= 1.0 + 1e-12);
  }
}

TEST_CASE("normalization preserves the argmax and the full ranking") {
  Rng rng(43);
  for (int trial = 0; trial < 500; ++trial) {
    const int n = 2 + static_cast<int>(rng.below(14));
    std::vector<double> values(n);
    for (double& v : values) v = rng.uniform(-1.0, 1.0);
    const RewardBatch b = normalize_rewards(values);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        CHECK((values[i] < values[j]) == (b.r_norm[i] < b.r_norm[j]));
      }
    }
  }
}

TEST_CASE("variance never exceeds the diameter bound and is tight for pairs") {
  Rng rng(47);
  for (int trial = 0; trial < 2000; ++trial) {
    const int n = 2 + static_cast<int>(rng.below(14));
    std::vector<double> values(n);
    for (double& v : values) v = rng.normal(0.0, std::pow(10.0, rng.uniform(-4.0, 3.0)));
    const RewardBatch b = normalize_rewards(values);  // throws if the bound breaks
    double var = 0.0;
    for (double r : b.r_dense) var += (r - b.mu) * (r - b.mu);
    var /= n;
    CHECK(var <= b.diameter * b.diameter / 4.0 * (1.0 + 1e-12) + 1e-300);
  }

  // Two-point batches achieve the bound exactly.
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> pair = {rng.uniform(-5, 5), rng.uniform(-5, 5)};
    const RewardBatch b = normalize_rewards(pair);
    double var = 0.0;
    for (double r : b.r_dense) var += (r - b.mu) * (r - b.mu);
    var /= 2;
    const double bound = b.diameter * b.diameter / 4.0;
    CHECK(var == doctest::Approx(bound).epsilon(1e-12));
  }
}

TEST_CASE("single-candidate batches are rejected") {
  CHECK_THROWS_AS(normalize_rewards(std::vector<double>{1.0}), DomainError);
}

TEST_CASE("potential follows the mu/sigma formula and scales linearly in mu") {
  const RewardBatch b = normalize_rewards(std::vector<double>{0.001, 0.002, 0.003});
  const ShapingPotential p = potential(b, 0.99);
  // mu=0.002, sigma+eps0=0.000826496580927726, 1-gamma=0.01.
  CHECK(p.phi == doctest::Approx(241.98527206912818).epsilon(1e-12));

  RewardBatch zero_mu = b;
  zero_mu.mu = 0.0;
  CHECK(potential(zero_mu, 0.99).phi == 0.0);

  RewardBatch doubled = b;
  doubled.mu = 2.0 * b.mu;
  CHECK(potential(doubled, 0.99).phi == doctest::Approx(2.0 * p.phi).epsilon(1e-12));

  CHECK_THROWS_AS(potential(b, 1.0), DomainError);
}

TEST_CASE("decomposition residual vanishes when batch statistics repeat") {
  // Both steps see the same (shifted) batch: mu moves with the shift, sigma
  // stays, and the potential-difference rewrite is exact.
  for (double shift : {0.0, 0.004, -0.17}) {
    std::vector<double> values = {0.001, 0.002, 0.003};
    for (double& v : values) v += shift;
    const RewardBatch t = normalize_rewards(values);
    const RewardBatch t1 = normalize_rewards(values);
    // The identity cancels terms of size |phi|, so the floating-point floor
    // scales with it.
    const double tol = 1e-12 * std::max(1.0, std::fabs(potential(t, 0.99).phi));
    for (int a = 0; a < 3; ++a)
      CHECK(std::fabs(decomposition_residual(t, t1, a, 0.99)) <= tol);
  }
}

TEST_CASE("decomposition residual is logged, not asserted, on a live rollout") {
  ScenarioConfig cfg = config_for(TaskKind::direction);
  Rng rng(51);
  SimState s = reset(cfg);
  RewardBatch prev = reward_batch(s, cfg);
  double max_abs = 0.0;
  for (int t = 0; t < 50; ++t) {
    s = step(s, static_cast<int>(rng.below(5)), cfg);
    const RewardBatch cur = reward_batch(s, cfg);
    const double r = decomposition_residual(prev, cur, 0, 0.99);
    CHECK(std::isfinite(r));
    max_abs = std::max(max_abs, std::fabs(r));
    prev = cur;
  }
  MESSAGE("max |residual| over 50 on-policy steps: ", max_abs);
}

TEST_CASE("diameter diagnostic reports the band fraction and the bound") {
  std::vector<RewardBatch> batches;
  batches.push_back(normalize_rewards(std::vector<double>{0.0, 0.005}));     // in band
  batches.push_back(normalize_rewards(std::vector<double>{0.0, 0.5}));       // above
  batches.push_back(normalize_rewards(std::vector<double>{0.0, 0.002}));     // in band
  batches.push_back(normalize_rewards(std::vector<double>{0.1, 0.1, 0.1}));  // constant
  const DiagnosticsReport rep = diameter_diagnostic(batches);
  CHECK(rep.batches == 4);
  CHECK(rep.fraction_in_band == doctest::Approx(0.5));
  CHECK(rep.var_bound_ok);
  CHECK(rep.diameters[1] == doctest::Approx(0.5));
}

TEST_CASE("epsilon0 is configurable and the normalization is sensitive to it") {
  const std::vector<double> values = {0.001, 0.002, 0.003};
  const RewardBatch tight = normalize_rewards(values, 1e-5);
  const RewardBatch loose = normalize_rewards(values, 1e-2);
  CHECK(std::fabs(tight.r_norm[0]) > 10.0 * std::fabs(loose.r_norm[0]));
}
