#pragma once

// Multi-dimensional optimization strategies. Each turns a scored rollout
// batch into parameter updates:
//   min    reward each episode with its lowest dimension score
//   pro    one PPO loss per dimension, gradients combined by conflict projection
//   sum-r  reward each episode with the sum of its dimension scores
//   sum-l  one PPO loss per dimension, losses summed

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "mdo/optimizer.hpp"
#include "mdo/policy.hpp"
#include "mdo/ppo.hpp"
#include "mdo/rewards.hpp"
#include "mdo/rng.hpp"

namespace mdo {

enum class Strategy { Min, Pro, SumR, SumL };

std::string_view strategy_name(Strategy s) noexcept;
/// Accepts "min", "pro", "sum-r", "sum-l".
std::optional<Strategy> parse_strategy(std::string_view name) noexcept;
/// Like parse_strategy but throws ConfigError for unknown names.
Strategy strategy_from_string(std::string_view name);

/// Lowest-scoring dimension in the fixed order; ties go to the lowest index.
std::pair<Dim, double> select_min_dimension(const DimScores& scores) noexcept;

/// Index of the smallest entry (first one on ties).
std::size_t argmin_channel(std::span<const double> values);

/// One processed (p, q) pair of a projection sweep.
struct ProjectionStep {
  std::size_t p = 0;
  std::size_t q = 0;
  double dot_before = 0.0;  // g_p^PC . g_q before this step
  double dot_after = 0.0;   // g_p^PC . g_q after this step
  double norm_after = 0.0;  // |g_p^PC| after this step
  bool projected = false;
};

/// For each task p, visits the other tasks in rng-shuffled order and removes
/// from g_p^PC its component along the original g_q whenever they conflict.
/// Returns the sum of the projected gradients. Projectors with squared norm
/// below 1e-24 are skipped. A projection that leaves only rounding noise
/// (antiparallel inputs) yields exactly zero. Throws ConfigError on length mismatch.
std::vector<double> pcgrad_project(std::span<const std::vector<double>> grads, CounterRng& rng,
                                   std::vector<ProjectionStep>* trace = nullptr);

/// Combines per-dimension gradients: plain sum for SumL, projection for Pro.
/// Min and SumR produce a single gradient, which is returned unchanged.
std::vector<double> combine_gradients(Strategy strategy,
                                      std::span<const std::vector<double>> grads,
                                      CounterRng& rng);

/// Builds the loss targets a strategy optimizes, normalized when enabled.
std::vector<ChannelSelector> strategy_targets(Strategy strategy, const RolloutBatch& batch,
                                              const Hyperparams& hp);

struct StepMetrics {
  LossBreakdown loss;        // mean over inner epochs, summed over per-dimension losses
  double grad_norm = 0.0;    // pre-clip norm of the last combined gradient
  int epochs = 0;
};

/// Runs hp.ppo_epochs inner passes of gradient, combination, norm clipping
/// and one optimizer step each. rng drives the projection order for Pro.
StepMetrics mdo_update(Strategy strategy, const RolloutBatch& batch, PolicyParams& params,
                       const Hyperparams& hp, OptimizerState& optimizer, CounterRng& rng);

}  // namespace mdo
