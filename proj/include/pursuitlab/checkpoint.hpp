#pragma once

#include <cstdint>
#include <string>

#include "pursuitlab/config.hpp"
#include "pursuitlab/policy.hpp"
#include "pursuitlab/value_net.hpp"

namespace pursuitlab {

// Versioned binary parameter blob. The header hash covers the network
// architecture, the vocabulary, and the task, so a checkpoint refuses to
// load into a binary or scenario it was not produced for.
struct Checkpoint {
  TaskKind task = TaskKind::direction;
  int k_topk = 5;
  PolicyParams policy;
  ValueParams value;
};

uint64_t checkpoint_config_hash(TaskKind task);

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace pursuitlab
