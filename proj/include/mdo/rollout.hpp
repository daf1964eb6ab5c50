#pragma once

#include <memory>
#include <vector>

#include "mdo/policy.hpp"
#include "mdo/rng.hpp"
#include "mdo/toyenv.hpp"
#include "mdo/trajectory.hpp"

namespace mdo {

/// Samples a summary from policy (temperature 1) starting at BOS until EOS or
/// cfg.max_summary_len tokens. Records per-step log-probabilities under both
/// policies and the policy's value predictions. Reward fields are left empty.
Trajectory rollout(const PolicyParams& policy, const PolicyParams& reference,
                   std::shared_ptr<const Document> doc, const EpisodeConfig& cfg,
                   CounterRng& rng);

struct GreedyEpisode {
  std::vector<Token> tokens;
  double mean_kl = 0.0;  // mean over steps of KL(policy || reference) at visited states
};

/// Argmax decoding (ties to the lowest id). Never modifies either policy.
GreedyEpisode greedy_decode(const PolicyParams& policy, const PolicyParams& reference,
                            const Document& doc, int max_summary_len);

}  // namespace mdo
