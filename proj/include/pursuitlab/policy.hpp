#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "pursuitlab/observe.hpp"
#include "pursuitlab/rng.hpp"
#include "pursuitlab/vocab.hpp"

namespace pursuitlab {

inline constexpr int kHiddenWidth = 32;
// Network input: task tag + observation features + token bag + position.
inline constexpr int kPolicyInputWidth = kTaskTagWidth + kFeatureWidth + kVocabSize + 1;
inline constexpr double kPositionScale = 0.25;

// Flat parameter layout of the two-layer trunk (tanh hidden, logits over the
// vocabulary). W1 is input-major, W2 hidden-major.
inline constexpr int kW1Offset = 0;
inline constexpr int kB1Offset = kW1Offset + kPolicyInputWidth * kHiddenWidth;
inline constexpr int kW2Offset = kB1Offset + kHiddenWidth;
inline constexpr int kB2Offset = kW2Offset + kHiddenWidth * kVocabSize;
inline constexpr int kPolicyParamCount = kB2Offset + kVocabSize;

struct PolicyParams {
  std::vector<double> values;

  PolicyParams() : values(kPolicyParamCount, 0.0) {}

  // Small uniform weights; zero keeps the policy exactly uniform, small
  // scales keep it near-uniform while breaking symmetry.
  void init(Rng& rng, double scale);

  double w1(int input, int hidden) const { return values[kW1Offset + input * kHiddenWidth + hidden]; }
  double w2(int hidden, int out) const { return values[kW2Offset + hidden * kVocabSize + out]; }
};

// Token counts of the already-emitted prefix w_{1:i-1}.
struct PrefixEncoding {
  std::array<int, kVocabSize> bag{};
  int position = 0;

  void push(int token) {
    ++bag[token];
    ++position;
  }
};

// Hidden pre-activations of the observation-dependent input slice, shared by
// every token evaluation under one observation.
struct ObsContext {
  const ObservationBundle* obs = nullptr;
  std::array<double, kHiddenWidth> fixed_preact{};
};

ObsContext make_obs_context(const PolicyParams& params, const ObservationBundle& obs);

// Everything the backward pass needs about one token evaluation.
struct TokenEvalCache {
  PrefixEncoding prefix;
  int token = 0;
  std::array<double, kHiddenWidth> hidden{};  // tanh activations
  std::array<double, kVocabSize> probs{};     // softmax over the vocabulary
};

// Log-softmax over the full vocabulary at this prefix; not masked to valid
// continuations, mirroring how an LLM scores candidate text.
void token_logprobs(const PolicyParams& params, const ObsContext& ctx,
                    const PrefixEncoding& prefix, std::span<double> out_logp,
                    TokenEvalCache* cache = nullptr);

double token_logprob(const PolicyParams& params, const ObservationBundle& obs,
                     const PrefixEncoding& prefix, int token);

// Sum of per-token conditional log-probabilities (the product rule in logs).
double action_logprob(const PolicyParams& params, const ObservationBundle& obs,
                      const CandidateAction& action);
double action_logprob(const PolicyParams& params, const ObsContext& ctx,
                      const CandidateAction& action,
                      std::vector<TokenEvalCache>* caches = nullptr);

enum class DistKind { sub, joint, joint_topk, full_topk };

// A probability distribution over candidate actions, kept in log space.
// `support` holds indices into the owning task's canonical candidate set.
struct PolicyDist {
  DistKind kind = DistKind::sub;
  std::vector<int> support;
  std::vector<double> log_probs;

  int size() const { return static_cast<int>(support.size()); }
  double prob(int i) const;
  double entropy() const;
  int argmax() const;  // ties resolve to the lowest support position
};

// Length-normalized candidate scores and their softmax, with the per-token
// caches the gradient pass consumes.
struct ScoredSet {
  std::vector<double> scores;  // action_logprob / L(a)
  std::vector<double> log_probs;
  std::vector<std::vector<TokenEvalCache>> caches;
};

// Softmax a score vector into a distribution over the given support.
PolicyDist dist_from_scores(DistKind kind, std::vector<int> support,
                            std::span<const double> scores);

ScoredSet score_candidates(const PolicyParams& params, const ObsContext& ctx,
                           const CandidateSet& cands, bool want_caches);
ScoredSet score_support(const PolicyParams& params, const ObsContext& ctx,
                        const CandidateSet& cands, std::span<const int> support,
                        bool want_caches);

// Softmax over length-normalized action log-probabilities for one sub-task.
PolicyDist sub_policy(const PolicyParams& params, const ObservationBundle& obs,
                      const CandidateSet& cands);

// Product distribution over the direction x distance Cartesian product.
PolicyDist joint_policy(const PolicyDist& dist_dir, const PolicyDist& dist_dist);

// Keep the k most probable actions (ties to the lower index) and renormalize.
PolicyDist topk(const PolicyDist& joint, int k);

// Composite-observation policy restricted to a given top-k support.
PolicyDist full_policy_topk(const PolicyParams& params, const ObservationBundle& composite_obs,
                            std::span<const int> support);

// D_KL(target || model) over identical supports. The target is a constant
// input here; no gradient machinery touches it.
double consistency_loss(const PolicyDist& target, const PolicyDist& model);

// Categorical draw; returns (support entry, stored log-probability).
std::pair<int, double> sample(const PolicyDist& dist, Rng& rng);

// Accumulate d(loss)/d(params) given d(loss)/d(score) for the candidates a
// ScoredSet covers. `candidate_index(i)` maps position i of the scored set to
// its candidate in `cands` (identity for score_candidates, support entry for
// score_support).
void backprop_scores(const PolicyParams& params, const ObsContext& ctx,
                     const CandidateSet& cands, std::span<const int> positions_to_candidates,
                     const ScoredSet& scored, std::span<const double> dscore,
                     std::span<double> grad);

}  // namespace pursuitlab
