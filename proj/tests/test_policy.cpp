#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "pursuitlab/checkpoint.hpp"
#include "pursuitlab/errors.hpp"
#include "pursuitlab/policy.hpp"

using namespace pursuitlab;

namespace {

ObservationBundle random_bundle(TaskKind task, Rng& rng) {
  ObservationBundle b;
  b.task = task;
  b.task_tag[static_cast<int>(task)] = 1.0;
  const int active = task == TaskKind::direction ? 6 : task == TaskKind::distance ? 4 : 10;
  for (int i = 0; i < active; ++i) b.features[i] = rng.uniform(-1.0, 1.0);
  b.text = "synthetic";
  return b;
}

PolicyParams random_params(uint64_t seed, double scale = 0.3) {
  Rng rng(seed);
  PolicyParams p;
  p.init(rng, scale);
  return p;
}

// Straightforward independent re-implementation of the forward pass: build
// the dense input vector and do the matvecs by the book.
double reference_token_logprob(const PolicyParams& params, const ObservationBundle& obs,
                               const PrefixEncoding& prefix, int token) {
  std::vector<double> x(kPolicyInputWidth, 0.0);
  for (int j = 0; j < kTaskTagWidth; ++j) x[j] = obs.task_tag[j];
  for (int j = 0; j < kFeatureWidth; ++j) x[kTaskTagWidth + j] = obs.features[j];
  for (int t = 0; t < kVocabSize; ++t)
    x[kTaskTagWidth + kFeatureWidth + t] = prefix.bag[t];
  x[kPolicyInputWidth - 1] = prefix.position * kPositionScale;

  std::vector<double> hidden(kHiddenWidth);
  for (int h = 0; h < kHiddenWidth; ++h) {
    double z = params.values[kB1Offset + h];
    for (int j = 0; j < kPolicyInputWidth; ++j)
      z += x[j] * params.values[kW1Offset + j * kHiddenWidth + h];
    hidden[h] = std::tanh(z);
  }
  std::vector<double> logits(kVocabSize);
  for (int o = 0; o < kVocabSize; ++o) {
    double z = params.values[kB2Offset + o];
    for (int h = 0; h < kHiddenWidth; ++h)
      z += hidden[h] * params.values[kW2Offset + h * kVocabSize + o];
    logits[o] = z;
  }
  double hi = logits[0];
  for (double v : logits) hi = std::max(hi, v);
  double acc = 0.0;
  for (double v : logits) acc += std::exp(v - hi);
  return logits[token] - (hi + std::log(acc));
}

}  // namespace

TEST_CASE("token log-probabilities normalize over the vocabulary") {
  Rng rng(3);
  const PolicyParams params = random_params(5);
  const ObservationBundle obs = random_bundle(TaskKind::direction, rng);
  const ObsContext ctx = make_obs_context(params, obs);

  PrefixEncoding prefix;
  prefix.push(tokenize("turn")[0]);
  std::vector<double> logp(kVocabSize);
  token_logprobs(params, ctx, prefix, logp);
  double total = 0.0;
  for (double lp : logp) total += std::exp(lp);
  CHECK(std::log(total) == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("zero parameters score every token uniformly") {
  Rng rng(7);
  const PolicyParams zero;  // all zeros
  const ObservationBundle obs = random_bundle(TaskKind::distance, rng);
  PrefixEncoding prefix;
  for (int t = 0; t < kVocabSize; ++t)
    CHECK(token_logprob(zero, obs, prefix, t) ==
          doctest::Approx(-std::log(double(kVocabSize))).epsilon(1e-12));
}

TEST_CASE("forward pass agrees with an independent re-implementation") {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const PolicyParams params = random_params(100 + trial);
    const ObservationBundle obs = random_bundle(TaskKind::integrated, rng);
    PrefixEncoding prefix;
    if (trial % 2) {
      prefix.push(static_cast<int>(rng.below(kVocabSize)));
      prefix.push(static_cast<int>(rng.below(kVocabSize)));
    }
    const int token = static_cast<int>(rng.below(kVocabSize));
    CHECK(token_logprob(params, obs, prefix, token) ==
          doctest::Approx(reference_token_logprob(params, obs, prefix, token)).epsilon(1e-12));
  }
}

TEST_CASE("action log-probability is the sum of its token conditionals") {
  Rng rng(13);
  const PolicyParams params = random_params(17);
  const ObservationBundle obs = random_bundle(TaskKind::direction, rng);
  const CandidateAction action{"turn hard left", tokenize("turn hard left")};

  PrefixEncoding prefix;
  double expected = 0.0;
  for (int tok : action.tokens) {
    expected += token_logprob(params, obs, prefix, tok);
    prefix.push(tok);
  }
  CHECK(action_logprob(params, obs, action) == doctest::Approx(expected).epsilon(1e-12));

  const CandidateAction single{"left", tokenize("left")};
  PrefixEncoding empty;
  CHECK(action_logprob(params, obs, single) ==
        doctest::Approx(token_logprob(params, obs, empty, single.tokens[0])).epsilon(1e-12));

  for (const auto& cand : candidate_set(TaskKind::integrated).actions) {
    const double p = std::exp(action_logprob(params, obs, cand));
    CHECK(p > 0.0);
    CHECK(p <= 1.0);
  }
}

TEST_CASE("dist_from_scores reproduces the two-candidate softmax example") {
  const std::vector<double> scores = {-1.0, -2.0};
  const PolicyDist d = dist_from_scores(DistKind::sub, {0, 1}, scores);
  CHECK(d.prob(0) == doctest::Approx(0.7310585786300049).epsilon(1e-9));
  CHECK(d.prob(1) == doctest::Approx(0.2689414213699951).epsilon(1e-9));

  // Softmax shift invariance.
  const std::vector<double> shifted = {-1.0 + 3.7, -2.0 + 3.7};
  const PolicyDist d2 = dist_from_scores(DistKind::sub, {0, 1}, shifted);
  CHECK(d2.log_probs[0] == doctest::Approx(d.log_probs[0]).epsilon(1e-12));
}

TEST_CASE("sub policy is uniform at zero init and normalized always") {
  Rng rng(19);
  const PolicyParams zero;
  const ObservationBundle obs = random_bundle(TaskKind::direction, rng);
  const PolicyDist d = sub_policy(zero, obs, candidate_set(TaskKind::direction));
  for (int i = 0; i < d.size(); ++i) CHECK(d.prob(i) == doctest::Approx(0.2).epsilon(1e-12));

  for (int trial = 0; trial < 20; ++trial) {
    const PolicyParams params = random_params(300 + trial);
    const ObservationBundle o = random_bundle(TaskKind::distance, rng);
    const PolicyDist dist = sub_policy(params, o, candidate_set(TaskKind::distance));
    double total = 0.0;
    for (int i = 0; i < dist.size(); ++i) total += dist.prob(i);
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("equal-length candidate scores are shift invariant") {
  // Appending the same probability mass to every equal-length candidate
  // shifts every score by a constant at the new shared length, which the
  // softmax ignores.
  Rng rng(23);
  const int length = 3;
  std::vector<double> logp = {rng.uniform(-3, 0), rng.uniform(-3, 0), rng.uniform(-3, 0)};
  const double appended_mass = rng.uniform(-2.0, -0.1);

  std::vector<double> base_scores, extended_scores;
  for (double lp : logp) {
    base_scores.push_back(lp / (length + 1));
    extended_scores.push_back((lp + appended_mass) / (length + 1));
  }
  const PolicyDist base = dist_from_scores(DistKind::sub, {0, 1, 2}, base_scores);
  const PolicyDist ext = dist_from_scores(DistKind::sub, {0, 1, 2}, extended_scores);
  for (int i = 0; i < 3; ++i)
    CHECK(base.log_probs[i] == doctest::Approx(ext.log_probs[i]).epsilon(1e-12));
}

TEST_CASE("joint policy multiplies sub-policy probabilities") {
  PolicyDist dir;
  dir.kind = DistKind::sub;
  dir.support = {0, 1, 2, 3, 4};
  dir.log_probs = {std::log(0.6), std::log(0.1), std::log(0.1), std::log(0.1), std::log(0.1)};
  PolicyDist dist;
  dist.kind = DistKind::sub;
  dist.support = {0, 1, 2};
  dist.log_probs = {std::log(0.5), std::log(0.25), std::log(0.25)};

  const PolicyDist joint = joint_policy(dir, dist);
  REQUIRE(joint.size() == 15);
  CHECK(joint.prob(0) == doctest::Approx(0.30).epsilon(1e-12));  // (0,0)
  CHECK(joint.support[0] == 0);
  CHECK(joint.support[4] == 4);  // (1,1) -> 1*3+1

  double total = 0.0;
  for (int i = 0; i < 15; ++i) total += joint.prob(i);
  CHECK(total == doctest::Approx(1.0).epsilon(1e-9));

  // Marginalizing out the distance slot recovers the direction policy.
  for (int a1 = 0; a1 < 5; ++a1) {
    double marginal = 0.0;
    for (int a2 = 0; a2 < 3; ++a2) marginal += joint.prob(a1 * 3 + a2);
    CHECK(marginal == doctest::Approx(std::exp(dir.log_probs[a1])).epsilon(1e-9));
  }
}

TEST_CASE("topk keeps the k most probable actions and renormalizes") {
  PolicyDist joint;
  joint.kind = DistKind::joint;
  joint.support = {0, 1, 2, 3};
  joint.log_probs = {std::log(0.4), std::log(0.3), std::log(0.2), std::log(0.1)};

  const PolicyDist k2 = topk(joint, 2);
  REQUIRE(k2.support == std::vector<int>{0, 1});
  CHECK(k2.prob(0) == doctest::Approx(4.0 / 7.0).epsilon(1e-12));
  CHECK(k2.prob(1) == doctest::Approx(3.0 / 7.0).epsilon(1e-12));

  const PolicyDist all = topk(joint, 4);
  for (int i = 0; i < 4; ++i)
    CHECK(all.log_probs[i] == doctest::Approx(joint.log_probs[i]).epsilon(1e-12));

  const PolicyDist k1 = topk(joint, 1);
  CHECK(k1.size() == 1);
  CHECK(k1.prob(0) == doctest::Approx(1.0).epsilon(1e-15));

  // Idempotence at the same k.
  const PolicyDist again = topk(k2, 2);
  CHECK(again.support == k2.support);
  for (int i = 0; i < 2; ++i)
    CHECK(again.log_probs[i] == doctest::Approx(k2.log_probs[i]).epsilon(1e-12));

  CHECK_THROWS_AS(topk(joint, 0), DomainError);
  CHECK_THROWS_AS(topk(joint, 5), DomainError);
}

TEST_CASE("topk ties break toward the canonical ordering") {
  PolicyDist joint;
  joint.kind = DistKind::joint;
  joint.support = {0, 1, 2, 3};
  joint.log_probs = {std::log(0.25), std::log(0.25), std::log(0.25), std::log(0.25)};
  const PolicyDist k2 = topk(joint, 2);
  CHECK(k2.support == std::vector<int>{0, 1});
}

TEST_CASE("full-task policy over the top-k support") {
  Rng rng(29);
  const ObservationBundle obs = random_bundle(TaskKind::integrated, rng);

  // Zero init: equal scores, uniform over the support.
  const PolicyParams zero;
  const std::vector<int> support = {3, 7, 11, 14, 0};
  const PolicyDist uniform = full_policy_topk(zero, obs, support);
  for (int i = 0; i < 5; ++i) CHECK(uniform.prob(i) == doctest::Approx(0.2).epsilon(1e-12));

  const std::vector<int> singleton = {5};
  const PolicyDist point = full_policy_topk(zero, obs, singleton);
  CHECK(point.prob(0) == doctest::Approx(1.0).epsilon(1e-15));

  const PolicyParams params = random_params(31);
  const PolicyDist d = full_policy_topk(params, obs, support);
  double total = 0.0;
  for (int i = 0; i < d.size(); ++i) total += d.prob(i);
  CHECK(total == doctest::Approx(1.0).epsilon(1e-9));

  const ObservationBundle wrong = random_bundle(TaskKind::direction, rng);
  CHECK_THROWS_AS(full_policy_topk(params, wrong, support), DomainError);
}

TEST_CASE("consistency loss is the KL divergence over a shared support") {
  PolicyDist p, q;
  p.kind = DistKind::joint_topk;
  p.support = {0, 1};
  p.log_probs = {std::log(0.7), std::log(0.3)};
  q.kind = DistKind::full_topk;
  q.support = {0, 1};
  q.log_probs = {std::log(0.5), std::log(0.5)};

  CHECK(consistency_loss(p, q) == doctest::Approx(0.0822828785050518).epsilon(1e-9));
  CHECK(consistency_loss(p, p) == 0.0);

  PolicyDist mismatched = q;
  mismatched.support = {0, 2};
  CHECK_THROWS_AS(consistency_loss(p, mismatched), DomainError);
}

TEST_CASE("KL divergence is nonnegative on random distribution pairs") {
  Rng rng(37);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 2 + static_cast<int>(rng.below(7));
    std::vector<double> sp(n), sq(n);
    for (int i = 0; i < n; ++i) {
      sp[i] = rng.uniform(-3, 3);
      sq[i] = rng.uniform(-3, 3);
    }
    std::vector<int> support(n);
    std::iota(support.begin(), support.end(), 0);
    const PolicyDist p = dist_from_scores(DistKind::joint_topk, support, sp);
    const PolicyDist q = dist_from_scores(DistKind::full_topk, support, sq);
    CHECK(consistency_loss(p, q) >= -1e-15);
  }
}

TEST_CASE("sampling is categorical, reproducible, and respects point masses") {
  PolicyDist point;
  point.kind = DistKind::sub;
  point.support = {4};
  point.log_probs = {0.0};
  Rng rng(41);
  for (int i = 0; i < 10; ++i) CHECK(sample(point, rng).first == 4);

  PolicyDist uniform;
  uniform.kind = DistKind::joint;
  for (int i = 0; i < 15; ++i) {
    uniform.support.push_back(i);
    uniform.log_probs.push_back(-std::log(15.0));
  }
  std::vector<int> counts(15, 0);
  Rng sampler(43);
  const int draws = 15000;
  for (int i = 0; i < draws; ++i) ++counts[sample(uniform, sampler).first];
  // 5 sigma of Binomial(15000, 1/15): sigma ~ 30.6.
  for (int c : counts) CHECK(std::fabs(c - 1000.0) <= 5.0 * 30.6);

  Rng a(47), b(47);
  for (int i = 0; i < 50; ++i) CHECK(sample(uniform, a).first == sample(uniform, b).first);
}

TEST_CASE("parameters round-trip through checkpoints bit-exactly") {
  Checkpoint ckpt;
  ckpt.task = TaskKind::integrated;
  ckpt.k_topk = 5;
  Rng rng(53);
  ckpt.policy.init(rng, 0.2);
  ckpt.value.init(rng, 0.2);

  const std::string path = "test_checkpoint_roundtrip.bin";
  save_checkpoint(path, ckpt);
  const Checkpoint loaded = load_checkpoint(path);
  CHECK(loaded.task == ckpt.task);
  CHECK(loaded.k_topk == ckpt.k_topk);
  CHECK(loaded.policy.values == ckpt.policy.values);
  CHECK(loaded.value.values == ckpt.value.values);
  std::remove(path.c_str());
}

TEST_CASE("checkpoints with a corrupted config hash refuse to load") {
  Checkpoint ckpt;
  ckpt.task = TaskKind::direction;
  const std::string path = "test_checkpoint_corrupt.bin";
  save_checkpoint(path, ckpt);

  // The hash lives right after magic+version; flip a byte of it.
  std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
  f.seekp(9);
  char byte = 0;
  f.seekg(9);
  f.read(&byte, 1);
  byte = static_cast<char>(byte ^ 0xff);
  f.seekp(9);
  f.write(&byte, 1);
  f.close();

  CHECK_THROWS_WITH_AS(load_checkpoint(path), doctest::Contains("hash"), ConfigError);
  std::remove(path.c_str());
}
