#include "pursuitlab/policy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "pursuitlab/errors.hpp"

namespace pursuitlab {

namespace {

double logsumexp(std::span<const double> v) {
  double hi = -INFINITY;
  for (double x : v) hi = std::max(hi, x);
  double acc = 0.0;
  for (double x : v) acc += std::exp(x - hi);
  return hi + std::log(acc);
}

void softmax_from_scores(std::span<const double> scores, std::vector<double>& out_logp) {
  const double lse = logsumexp(scores);
  out_logp.resize(scores.size());
  for (size_t i = 0; i < scores.size(); ++i) out_logp[i] = scores[i] - lse;
}

}  // namespace

void PolicyParams::init(Rng& rng, double scale) {
  for (double& v : values) v = rng.uniform(-scale, scale);
}

ObsContext make_obs_context(const PolicyParams& params, const ObservationBundle& obs) {
  ObsContext ctx;
  ctx.obs = &obs;
  for (int h = 0; h < kHiddenWidth; ++h) ctx.fixed_preact[h] = params.values[kB1Offset + h];
  for (int j = 0; j < kTaskTagWidth; ++j) {
    const double x = obs.task_tag[j];
    if (x == 0.0) continue;
    const double* col = &params.values[kW1Offset + j * kHiddenWidth];
    for (int h = 0; h < kHiddenWidth; ++h) ctx.fixed_preact[h] += x * col[h];
  }
  for (int j = 0; j < kFeatureWidth; ++j) {
    const double x = obs.features[j];
    if (x == 0.0) continue;
    const double* col = &params.values[kW1Offset + (kTaskTagWidth + j) * kHiddenWidth];
    for (int h = 0; h < kHiddenWidth; ++h) ctx.fixed_preact[h] += x * col[h];
  }
  return ctx;
}

void token_logprobs(const PolicyParams& params, const ObsContext& ctx,
                    const PrefixEncoding& prefix, std::span<double> out_logp,
                    TokenEvalCache* cache) {
  std::array<double, kHiddenWidth> z = ctx.fixed_preact;
  for (int t = 0; t < kVocabSize; ++t) {
    if (prefix.bag[t] == 0) continue;
    const double x = static_cast<double>(prefix.bag[t]);
    const double* col = &params.values[kW1Offset + (kTaskTagWidth + kFeatureWidth + t) * kHiddenWidth];
    for (int h = 0; h < kHiddenWidth; ++h) z[h] += x * col[h];
  }
  if (prefix.position != 0) {
    const double x = prefix.position * kPositionScale;
    const double* col = &params.values[kW1Offset + (kPolicyInputWidth - 1) * kHiddenWidth];
    for (int h = 0; h < kHiddenWidth; ++h) z[h] += x * col[h];
  }

  std::array<double, kHiddenWidth> hidden;
  for (int h = 0; h < kHiddenWidth; ++h) hidden[h] = std::tanh(z[h]);

  std::array<double, kVocabSize> logits;
  for (int o = 0; o < kVocabSize; ++o) logits[o] = params.values[kB2Offset + o];
  for (int h = 0; h < kHiddenWidth; ++h) {
    const double hv = hidden[h];
    const double* row = &params.values[kW2Offset + h * kVocabSize];
    for (int o = 0; o < kVocabSize; ++o) logits[o] += hv * row[o];
  }

  const double lse = logsumexp(logits);
  if (!std::isfinite(lse)) throw NumericalError("non-finite activation in token scoring");
  for (int o = 0; o < kVocabSize; ++o) out_logp[o] = logits[o] - lse;

  if (cache) {
    cache->prefix = prefix;
    cache->hidden = hidden;
    for (int o = 0; o < kVocabSize; ++o) cache->probs[o] = std::exp(out_logp[o]);
  }
}

double token_logprob(const PolicyParams& params, const ObservationBundle& obs,
                     const PrefixEncoding& prefix, int token) {
  if (token < 0 || token >= kVocabSize) throw DomainError("token id out of range");
  const ObsContext ctx = make_obs_context(params, obs);
  std::array<double, kVocabSize> logp;
  token_logprobs(params, ctx, prefix, logp);
  return logp[token];
}

double action_logprob(const PolicyParams& params, const ObsContext& ctx,
                      const CandidateAction& action, std::vector<TokenEvalCache>* caches) {
  PrefixEncoding prefix;
  std::array<double, kVocabSize> logp;
  double total = 0.0;
  if (caches) caches->resize(action.tokens.size());
  for (size_t i = 0; i < action.tokens.size(); ++i) {
    TokenEvalCache* cache = caches ? &(*caches)[i] : nullptr;
    token_logprobs(params, ctx, prefix, logp, cache);
    const int tok = action.tokens[i];
    if (cache) cache->token = tok;
    total += logp[tok];
    prefix.push(tok);
  }
  return total;
}

double action_logprob(const PolicyParams& params, const ObservationBundle& obs,
                      const CandidateAction& action) {
  const ObsContext ctx = make_obs_context(params, obs);
  return action_logprob(params, ctx, action);
}

PolicyDist dist_from_scores(DistKind kind, std::vector<int> support,
                            std::span<const double> scores) {
  if (support.size() != scores.size()) throw DomainError("support/score size mismatch");
  PolicyDist d;
  d.kind = kind;
  d.support = std::move(support);
  softmax_from_scores(scores, d.log_probs);
  return d;
}

double PolicyDist::prob(int i) const { return std::exp(log_probs.at(i)); }

double PolicyDist::entropy() const {
  double h = 0.0;
  for (double lp : log_probs) h -= std::exp(lp) * lp;
  return h;
}

int PolicyDist::argmax() const {
  int best = 0;
  for (int i = 1; i < size(); ++i)
    if (log_probs[i] > log_probs[best]) best = i;
  return best;
}

ScoredSet score_candidates(const PolicyParams& params, const ObsContext& ctx,
                           const CandidateSet& cands, bool want_caches) {
  if (cands.actions.empty()) throw DomainError("empty candidate set");
  ScoredSet s;
  s.scores.resize(cands.size());
  if (want_caches) s.caches.resize(cands.size());
  for (int i = 0; i < cands.size(); ++i) {
    const CandidateAction& a = cands.actions[i];
    std::vector<TokenEvalCache>* c = want_caches ? &s.caches[i] : nullptr;
    s.scores[i] = action_logprob(params, ctx, a, c) / a.length();
  }
  softmax_from_scores(s.scores, s.log_probs);
  return s;
}

ScoredSet score_support(const PolicyParams& params, const ObsContext& ctx,
                        const CandidateSet& cands, std::span<const int> support,
                        bool want_caches) {
  if (support.empty()) throw DomainError("empty support");
  ScoredSet s;
  s.scores.resize(support.size());
  if (want_caches) s.caches.resize(support.size());
  for (size_t i = 0; i < support.size(); ++i) {
    const CandidateAction& a = cands.actions.at(support[i]);
    std::vector<TokenEvalCache>* c = want_caches ? &s.caches[i] : nullptr;
    s.scores[i] = action_logprob(params, ctx, a, c) / a.length();
  }
  softmax_from_scores(s.scores, s.log_probs);
  return s;
}

PolicyDist sub_policy(const PolicyParams& params, const ObservationBundle& obs,
                      const CandidateSet& cands) {
  if (obs.task != cands.task) throw DomainError("observation task does not match candidate set");
  if (cands.task == TaskKind::integrated)
    throw DomainError("sub_policy is defined for direction/distance tasks only");
  const ObsContext ctx = make_obs_context(params, obs);
  ScoredSet s = score_candidates(params, ctx, cands, false);
  PolicyDist d;
  d.kind = DistKind::sub;
  d.support.resize(cands.size());
  std::iota(d.support.begin(), d.support.end(), 0);
  d.log_probs = std::move(s.log_probs);
  return d;
}

PolicyDist joint_policy(const PolicyDist& dist_dir, const PolicyDist& dist_dist) {
  PolicyDist d;
  d.kind = DistKind::joint;
  d.support.reserve(dist_dir.size() * dist_dist.size());
  d.log_probs.reserve(dist_dir.size() * dist_dist.size());
  for (int i = 0; i < dist_dir.size(); ++i) {
    for (int j = 0; j < dist_dist.size(); ++j) {
      d.support.push_back(dist_dir.support[i] * 3 + dist_dist.support[j]);
      d.log_probs.push_back(dist_dir.log_probs[i] + dist_dist.log_probs[j]);
    }
  }
  return d;
}

PolicyDist topk(const PolicyDist& joint, int k) {
  const int n = joint.size();
  if (k < 1 || k > n) throw DomainError("topk k=" + std::to_string(k) + " out of range");
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if (joint.log_probs[a] != joint.log_probs[b]) return joint.log_probs[a] > joint.log_probs[b];
    return joint.support[a] < joint.support[b];  // ties: canonical order
  });

  PolicyDist d;
  d.kind = DistKind::joint_topk;
  std::vector<double> kept(k);
  for (int i = 0; i < k; ++i) {
    d.support.push_back(joint.support[order[i]]);
    kept[i] = joint.log_probs[order[i]];
  }
  const double lse = logsumexp(kept);
  for (int i = 0; i < k; ++i) d.log_probs.push_back(kept[i] - lse);
  return d;
}

PolicyDist full_policy_topk(const PolicyParams& params, const ObservationBundle& composite_obs,
                            std::span<const int> support) {
  if (composite_obs.task != TaskKind::integrated)
    throw DomainError("full_policy_topk requires a composite observation");
  const ObsContext ctx = make_obs_context(params, composite_obs);
  ScoredSet s = score_support(params, ctx, candidate_set(TaskKind::integrated), support, false);
  PolicyDist d;
  d.kind = DistKind::full_topk;
  d.support.assign(support.begin(), support.end());
  d.log_probs = std::move(s.log_probs);
  return d;
}

double consistency_loss(const PolicyDist& target, const PolicyDist& model) {
  if (target.support != model.support)
    throw DomainError("consistency_loss requires identical supports in identical order");
  double kl = 0.0;
  for (int i = 0; i < target.size(); ++i)
    kl += std::exp(target.log_probs[i]) * (target.log_probs[i] - model.log_probs[i]);
  return kl;
}

std::pair<int, double> sample(const PolicyDist& dist, Rng& rng) {
  const double u = rng.uniform01();
  double acc = 0.0;
  for (int i = 0; i < dist.size(); ++i) {
    acc += dist.prob(i);
    if (u < acc) return {dist.support[i], dist.log_probs[i]};
  }
  return {dist.support.back(), dist.log_probs.back()};
}

void backprop_scores(const PolicyParams& params, const ObsContext& ctx,
                     const CandidateSet& cands, std::span<const int> positions_to_candidates,
                     const ScoredSet& scored, std::span<const double> dscore,
                     std::span<double> grad) {
  for (size_t pos = 0; pos < positions_to_candidates.size(); ++pos) {
    if (dscore[pos] == 0.0) continue;
    const CandidateAction& action = cands.actions.at(positions_to_candidates[pos]);
    const double token_weight = dscore[pos] / action.length();
    const auto& caches = scored.caches.at(pos);

    for (const TokenEvalCache& cache : caches) {
      // d(loss)/d(logits) of this evaluation: w * (onehot(token) - probs).
      std::array<double, kVocabSize> dlogits;
      for (int o = 0; o < kVocabSize; ++o) dlogits[o] = -token_weight * cache.probs[o];
      dlogits[cache.token] += token_weight;

      std::array<double, kHiddenWidth> dhidden{};
      for (int h = 0; h < kHiddenWidth; ++h) {
        const double hv = cache.hidden[h];
        double* w2_row = &grad[kW2Offset + h * kVocabSize];
        const double* w2_vals = &params.values[kW2Offset + h * kVocabSize];
        double acc = 0.0;
        for (int o = 0; o < kVocabSize; ++o) {
          w2_row[o] += hv * dlogits[o];
          acc += w2_vals[o] * dlogits[o];
        }
        dhidden[h] = acc;
      }
      for (int o = 0; o < kVocabSize; ++o) grad[kB2Offset + o] += dlogits[o];

      std::array<double, kHiddenWidth> dz;
      for (int h = 0; h < kHiddenWidth; ++h)
        dz[h] = dhidden[h] * (1.0 - cache.hidden[h] * cache.hidden[h]);
      for (int h = 0; h < kHiddenWidth; ++h) grad[kB1Offset + h] += dz[h];

      auto add_input = [&](int input_index, double x) {
        if (x == 0.0) return;
        double* col = &grad[kW1Offset + input_index * kHiddenWidth];
        for (int h = 0; h < kHiddenWidth; ++h) col[h] += x * dz[h];
      };
      for (int j = 0; j < kTaskTagWidth; ++j) add_input(j, ctx.obs->task_tag[j]);
      for (int j = 0; j < kFeatureWidth; ++j) add_input(kTaskTagWidth + j, ctx.obs->features[j]);
      for (int t = 0; t < kVocabSize; ++t)
        add_input(kTaskTagWidth + kFeatureWidth + t, static_cast<double>(cache.prefix.bag[t]));
      add_input(kPolicyInputWidth - 1, cache.prefix.position * kPositionScale);
    }
  }
}

}  // namespace pursuitlab
