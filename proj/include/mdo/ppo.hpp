#pragma once

// PPO machinery: KL-shaped per-token rewards against a frozen reference,
// generalized advantage estimation, and the clipped-surrogate / value /
// entropy loss with its exact gradient.

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "mdo/optimizer.hpp"
#include "mdo/policy.hpp"
#include "mdo/toyenv.hpp"
#include "mdo/trajectory.hpp"

namespace mdo {

struct Hyperparams {
  double gamma = 0.9;
  double gae_lambda = 0.95;
  double kl_beta = 0.2;
  double clip_epsilon = 0.2;
  double value_coef = 0.5;
  double entropy_coef = 0.01;
  double learning_rate = 1.41e-4;
  int ppo_epochs = 4;
  int batch_size = 4;
  bool normalize_advantages = true;
  double max_grad_norm = 1.0;
  OptimizerKind optimizer = OptimizerKind::Adam;

  /// Throws ConfigError for any out-of-range field.
  void validate() const;
};

/// Minimization convention: total = -clip_loss + c1 * value_loss - c2 * entropy.
struct LossBreakdown {
  double clip_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double total = 0.0;

  LossBreakdown& operator+=(const LossBreakdown& o) noexcept {
    clip_loss += o.clip_loss;
    value_loss += o.value_loss;
    entropy += o.entropy;
    total += o.total;
    return *this;
  }
};

struct RolloutBatch {
  std::vector<Trajectory> trajectories;
  /// Behaviour-policy log-probabilities, frozen before any update of this iteration.
  std::vector<std::vector<double>> old_logprobs;

  [[nodiscard]] std::size_t size() const noexcept { return trajectories.size(); }
  [[nodiscard]] std::size_t total_steps() const noexcept;
  [[nodiscard]] std::size_t channels() const;
};

/// reward[t][k] = -beta * (logprobs_rl[t] - logprobs_ft[t]), plus terminal[k] at the last step.
StepMatrix shape_rewards(const Trajectory& traj, double beta, std::span<const double> terminal);

struct GaeResult {
  std::vector<double> advantages;
  std::vector<double> returns;
};

/// Backward-recursion GAE with a zero bootstrap after the last step.
GaeResult compute_gae(std::span<const double> rewards, std::span<const double> values,
                      double gamma, double lambda);

/// Fills shaped_rewards, advantages and returns for every channel from terminal_rewards.
void fill_advantages(Trajectory& traj, const Hyperparams& hp);

/// Per-trajectory training target: which combination of value channels is
/// regressed and the advantages/returns that go with it.
struct LossTarget {
  std::vector<double> value_weights;
  std::vector<double> advantages;
  std::vector<double> returns;
};

/// One LossTarget per trajectory of a batch.
using ChannelSelector = std::vector<LossTarget>;

/// Channel k for every trajectory.
ChannelSelector select_channel(const RolloutBatch& batch, std::size_t k);
/// channel_of[i] for trajectory i.
ChannelSelector select_channels(const RolloutBatch& batch, std::span<const std::size_t> channel_of);
/// Summed-reward target: terminal reward is the sum over channels, the value
/// estimate is the sum of the value channels, and the KL term is counted once.
ChannelSelector select_summed(const RolloutBatch& batch, const Hyperparams& hp);

/// Standardizes advantages across the whole selector in place. Skipped (returns
/// false) when the batch variance is below 1e-12.
bool normalize_advantages(ChannelSelector& selector);

LossBreakdown ppo_loss(const RolloutBatch& batch, const PolicyParams& params,
                       const Hyperparams& hp, const ChannelSelector& selector);

struct LossAndGradient {
  LossBreakdown loss;
  std::vector<double> grad;
};

LossAndGradient ppo_loss_gradient(const RolloutBatch& batch, const PolicyParams& params,
                                  const Hyperparams& hp, const ChannelSelector& selector);

/// One loss and gradient per selector, sharing a single forward pass.
std::vector<LossAndGradient> ppo_loss_gradients(const RolloutBatch& batch,
                                                const PolicyParams& params,
                                                const Hyperparams& hp,
                                                std::span<const ChannelSelector> selectors);

/// Per-trajectory ratio-gap limit; beyond it exp() of the log-ratio is treated as a failure.
inline constexpr double kMaxLogRatio = 40.0;

/// Rolls out one episode per document (episode i uses the stream keyed by
/// (seed, first_episode + i)), scores it and fills rewards and advantages for
/// all four dimension channels.
RolloutBatch collect_rollouts(const PolicyParams& policy, const PolicyParams& reference,
                              std::span<const std::shared_ptr<const Document>> docs,
                              std::span<const std::size_t> doc_ids, const EpisodeConfig& cfg,
                              const Hyperparams& hp, std::uint64_t seed,
                              std::uint64_t first_episode);

}  // namespace mdo
