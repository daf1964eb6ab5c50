#include "mdo/rollout.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mdo/errors.hpp"

namespace mdo {
namespace {

void require_finite(std::span<const double> logits, std::size_t step) {
  for (const double l : logits) {
    if (!std::isfinite(l)) {
      throw NumericalError("non-finite logits at generation step " + std::to_string(step));
    }
  }
}

Token sample(std::span<const double> logprobs, CounterRng& rng) {
  const double u = rng.uniform();
  double cumulative = 0.0;
  std::size_t last_nonzero = 0;
  for (std::size_t j = 0; j < logprobs.size(); ++j) {
    const double p = std::exp(logprobs[j]);
    if (p > 0.0) last_nonzero = j;
    cumulative += p;
    if (u < cumulative) return static_cast<Token>(j);
  }
  return static_cast<Token>(last_nonzero);
}

}  // namespace

Trajectory rollout(const PolicyParams& policy, const PolicyParams& reference,
                   std::shared_ptr<const Document> doc, const EpisodeConfig& cfg,
                   CounterRng& rng) {
  cfg.validate();
  if (!(policy.shape == reference.shape)) {
    throw ConfigError("policy and reference must have identical shapes");
  }
  if (!doc) throw ConfigError("rollout needs a document");
  const auto m = static_cast<std::size_t>(policy.shape.num_values);
  const auto horizon = static_cast<std::size_t>(cfg.max_summary_len);

  Trajectory traj;
  traj.doc = doc;
  traj.horizon = cfg.max_summary_len;
  std::vector<double> value_rows;
  while (traj.tokens.size() < horizon) {
    const std::size_t step = traj.tokens.size();
    const auto out = forward(policy, *doc, traj.tokens, cfg.max_summary_len);
    require_finite(out.logits, step);
    const auto lp = log_softmax(out.logits);
    const Token action = sample(lp, rng);
    const auto ref = forward(reference, *doc, traj.tokens, cfg.max_summary_len);
    require_finite(ref.logits, step);
    const auto lp_ref = log_softmax(ref.logits);

    traj.tokens.push_back(action);
    traj.logprobs_rl.push_back(lp[static_cast<std::size_t>(action)]);
    traj.logprobs_ft.push_back(lp_ref[static_cast<std::size_t>(action)]);
    value_rows.insert(value_rows.end(), out.values.begin(), out.values.end());
    if (action == Vocabulary::kEos) break;
  }
  traj.truncated = traj.tokens.back() != Vocabulary::kEos;
  traj.values = StepMatrix(traj.tokens.size(), m);
  for (std::size_t t = 0; t < traj.tokens.size(); ++t) {
    std::copy_n(value_rows.begin() + static_cast<std::ptrdiff_t>(t * m), m, traj.values.row(t).begin());
  }
  return traj;
}

GreedyEpisode greedy_decode(const PolicyParams& policy, const PolicyParams& reference,
                            const Document& doc, int max_summary_len) {
  if (max_summary_len < 1) throw ConfigError("max_summary_len must be positive");
  GreedyEpisode ep;
  double kl_sum = 0.0;
  while (ep.tokens.size() < static_cast<std::size_t>(max_summary_len)) {
    const std::size_t step = ep.tokens.size();
    const auto out = forward(policy, doc, ep.tokens, max_summary_len);
    require_finite(out.logits, step);
    const auto ref = forward(reference, doc, ep.tokens, max_summary_len);
    require_finite(ref.logits, step);
    const auto lp = log_softmax(out.logits);
    const auto lp_ref = log_softmax(ref.logits);
    double kl = 0.0;
    for (std::size_t j = 0; j < lp.size(); ++j) kl += std::exp(lp[j]) * (lp[j] - lp_ref[j]);
    kl_sum += kl;
    const auto best = std::max_element(out.logits.begin(), out.logits.end()) - out.logits.begin();
    ep.tokens.push_back(static_cast<Token>(best));
    if (ep.tokens.back() == Vocabulary::kEos) break;
  }
  ep.mean_kl = kl_sum / static_cast<double>(ep.tokens.size());
  return ep;
}

}  // namespace mdo
