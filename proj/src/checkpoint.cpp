#include "pursuitlab/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "pursuitlab/errors.hpp"

namespace pursuitlab {

namespace {

constexpr uint32_t kMagic = 0x504c4350;  // "PLCP"
constexpr uint32_t kVersion = 1;

uint64_t fnv1a(uint64_t h, const void* data, size_t n) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < n; ++i) {
    h ^= bytes[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

uint64_t fnv1a_u64(uint64_t h, uint64_t v) { return fnv1a(h, &v, sizeof v); }

template <typename T>
void write_pod(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
void read_pod(std::ifstream& in, T& v) {
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw ConfigError("truncated checkpoint file");
}

}  // namespace

uint64_t checkpoint_config_hash(TaskKind task) {
  uint64_t h = 0xcbf29ce484222325ULL;
  h = fnv1a_u64(h, kPolicyInputWidth);
  h = fnv1a_u64(h, kHiddenWidth);
  h = fnv1a_u64(h, kVocabSize);
  h = fnv1a_u64(h, kValueInputWidth);
  h = fnv1a_u64(h, kValueHiddenWidth);
  h = fnv1a_u64(h, static_cast<uint64_t>(task));
  const Vocabulary& vocab = Vocabulary::instance();
  for (int i = 0; i < vocab.size(); ++i) {
    const std::string& w = vocab.word(i);
    h = fnv1a(h, w.data(), w.size());
    h = fnv1a(h, "|", 1);
  }
  return h;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open checkpoint '" + path + "' for writing");
  write_pod(out, kMagic);
  write_pod(out, kVersion);
  write_pod(out, checkpoint_config_hash(ckpt.task));
  write_pod(out, static_cast<uint32_t>(ckpt.task));
  write_pod(out, static_cast<uint32_t>(ckpt.k_topk));
  write_pod(out, static_cast<uint64_t>(ckpt.policy.values.size()));
  write_pod(out, static_cast<uint64_t>(ckpt.value.values.size()));
  out.write(reinterpret_cast<const char*>(ckpt.policy.values.data()),
            ckpt.policy.values.size() * sizeof(double));
  out.write(reinterpret_cast<const char*>(ckpt.value.values.data()),
            ckpt.value.values.size() * sizeof(double));
  if (!out) throw ConfigError("failed writing checkpoint '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open checkpoint '" + path + "'");
  uint32_t magic = 0, version = 0, task_raw = 0, k = 0;
  uint64_t hash = 0, policy_count = 0, value_count = 0;
  read_pod(in, magic);
  if (magic != kMagic) throw ConfigError("'" + path + "' is not a checkpoint file");
  read_pod(in, version);
  if (version != kVersion) throw ConfigError("unsupported checkpoint version");
  read_pod(in, hash);
  read_pod(in, task_raw);
  read_pod(in, k);
  read_pod(in, policy_count);
  read_pod(in, value_count);

  Checkpoint ckpt;
  ckpt.task = static_cast<TaskKind>(task_raw);
  ckpt.k_topk = static_cast<int>(k);
  if (hash != checkpoint_config_hash(ckpt.task))
    throw ConfigError("checkpoint config hash mismatch; refusing to load '" + path + "'");
  if (policy_count != static_cast<uint64_t>(kPolicyParamCount) ||
      value_count != static_cast<uint64_t>(kValueParamCount))
    throw ConfigError("checkpoint parameter count mismatch");

  in.read(reinterpret_cast<char*>(ckpt.policy.values.data()), policy_count * sizeof(double));
  in.read(reinterpret_cast<char*>(ckpt.value.values.data()), value_count * sizeof(double));
  if (!in) throw ConfigError("truncated checkpoint file");
  return ckpt;
}

}  // namespace pursuitlab
