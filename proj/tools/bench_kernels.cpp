// Timing comparison of the OpenMP kernels against their serial references:
// minibatch loss gradients and value-iteration sweeps. The parallel paths
// are reduction-order deterministic, so the outputs must also match bitwise.

#include <chrono>
#include <cstdio>
#include <vector>

#include "pursuitlab/harness.hpp"
#include "pursuitlab/tabular.hpp"
#include "pursuitlab/trainer.hpp"

using namespace pursuitlab;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::vector<Transition> make_batch(int n, TaskKind task, uint64_t seed) {
  ScenarioConfig scenario;
  scenario.task = task;
  scenario.seed = seed;
  TrainerConfig trainer;
  trainer.seed = seed;
  trainer.rollout_length = n;
  Rng rng(seed);
  PolicyParams params;
  params.init(rng, 0.1);
  ValueParams vparams;
  vparams.init(rng, 0.1);
  EnvCursor cursor;
  RolloutResult roll = collect_rollout(cursor, params, vparams, scenario, trainer, rng);
  compute_gae(roll.transitions, roll.bootstrap_value, trainer);
  return std::move(roll.transitions);
}

void bench_loss(TaskKind task) {
  TrainerConfig trainer;
  Rng rng(42);
  PolicyParams params;
  params.init(rng, 0.1);

  for (int n : {64, 256, 1024}) {
    const std::vector<Transition> batch = make_batch(n, task, 42);
    const int reps = 4096 / n;

    auto t0 = Clock::now();
    LossResult serial;
    for (int r = 0; r < reps; ++r)
      serial = total_loss_and_grad(params, batch, trainer, ExecMode::serial);
    const double serial_s = seconds_since(t0) / reps;

    t0 = Clock::now();
    LossResult parallel;
    for (int r = 0; r < reps; ++r)
      parallel = total_loss_and_grad(params, batch, trainer, ExecMode::parallel);
    const double parallel_s = seconds_since(t0) / reps;

    const bool identical = serial.grad == parallel.grad;
    std::printf("loss grad  %-10s n=%-5d serial %8.3f ms  parallel %8.3f ms  speedup %5.2fx  %s\n",
                to_string(task), n, serial_s * 1e3, parallel_s * 1e3, serial_s / parallel_s,
                identical ? "bit-identical" : "MISMATCH");
  }
}

void bench_value_iteration() {
  Rng rng(7);
  std::vector<TabularMDP> instances;
  for (int i = 0; i < 256; ++i) instances.push_back(random_mdp(rng));

  auto run = [&](ExecMode mode) {
    double residual_sum = 0.0;
    for (const auto& mdp : instances) residual_sum += value_iteration(mdp, 1e-10, 100000, mode).residual;
    return residual_sum;
  };

  auto t0 = Clock::now();
  const double serial_sum = run(ExecMode::serial);
  const double serial_s = seconds_since(t0);
  t0 = Clock::now();
  const double parallel_sum = run(ExecMode::parallel);
  const double parallel_s = seconds_since(t0);

  std::printf("value iter  256 instances    serial %8.3f ms  parallel %8.3f ms  speedup %5.2fx  %s\n",
              serial_s * 1e3, parallel_s * 1e3, serial_s / parallel_s,
              serial_sum == parallel_sum ? "bit-identical" : "MISMATCH");
}

}  // namespace

int main() {
  bench_loss(TaskKind::direction);
  bench_loss(TaskKind::integrated);
  bench_value_iteration();
  return 0;
}
