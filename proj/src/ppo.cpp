#include "mdo/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mdo/errors.hpp"
#include "mdo/rewards.hpp"
#include "mdo/rollout.hpp"

namespace mdo {

void Hyperparams::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError("hyperparameter " + what); };
  if (!(gamma > 0.0 && gamma <= 1.0)) fail("gamma must lie in (0, 1]");
  if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0)) fail("gae_lambda must lie in [0, 1]");
  if (!(kl_beta >= 0.0)) fail("kl_beta must be >= 0");
  if (!(clip_epsilon > 0.0)) fail("clip_epsilon must be > 0");
  if (!(value_coef >= 0.0)) fail("value_coef must be >= 0");
  if (!(entropy_coef >= 0.0)) fail("entropy_coef must be >= 0");
  if (!(learning_rate > 0.0)) fail("learning_rate must be > 0");
  if (ppo_epochs < 1) fail("ppo_epochs must be >= 1");
  if (batch_size < 1) fail("batch_size must be >= 1");
  if (!(max_grad_norm > 0.0)) fail("max_grad_norm must be > 0");
}

std::size_t RolloutBatch::total_steps() const noexcept {
  std::size_t n = 0;
  for (const auto& t : trajectories) n += t.length();
  return n;
}

std::size_t RolloutBatch::channels() const {
  if (trajectories.empty()) throw ConfigError("empty rollout batch");
  return trajectories.front().channels();
}

StepMatrix shape_rewards(const Trajectory& traj, double beta, std::span<const double> terminal) {
  const std::size_t len = traj.length();
  if (len == 0) throw ConfigError("cannot shape rewards of an empty trajectory");
  if (traj.logprobs_rl.size() != len || traj.logprobs_ft.size() != len) {
    throw ConfigError("trajectory log-probability streams do not match its length");
  }
  StepMatrix out(len, terminal.size());
  for (std::size_t t = 0; t < len; ++t) {
    const double kl = -beta * (traj.logprobs_rl[t] - traj.logprobs_ft[t]);
    for (std::size_t k = 0; k < terminal.size(); ++k) out(t, k) = kl;
  }
  for (std::size_t k = 0; k < terminal.size(); ++k) out(len - 1, k) += terminal[k];
  return out;
}

GaeResult compute_gae(std::span<const double> rewards, std::span<const double> values,
                      double gamma, double lambda) {
  if (rewards.size() != values.size()) {
    throw ConfigError("compute_gae: " + std::to_string(rewards.size()) + " rewards but " +
                      std::to_string(values.size()) + " values");
  }
  if (rewards.empty()) throw ConfigError("compute_gae needs at least one step");
  const std::size_t len = rewards.size();
  GaeResult out{std::vector<double>(len), std::vector<double>(len)};
  double next_advantage = 0.0;
  for (std::size_t i = len; i-- > 0;) {
    const double next_value = i + 1 < len ? values[i + 1] : 0.0;
    const double delta = rewards[i] + gamma * next_value - values[i];
    next_advantage = delta + gamma * lambda * next_advantage;
    out.advantages[i] = next_advantage;
    out.returns[i] = next_advantage + values[i];
  }
  return out;
}

void fill_advantages(Trajectory& traj, const Hyperparams& hp) {
  const std::size_t m = traj.channels();
  if (traj.terminal_rewards.size() != m) {
    throw ConfigError("terminal reward count does not match the value channels");
  }
  traj.shaped_rewards = shape_rewards(traj, hp.kl_beta, traj.terminal_rewards);
  traj.advantages = StepMatrix(traj.length(), m);
  traj.returns = StepMatrix(traj.length(), m);
  for (std::size_t k = 0; k < m; ++k) {
    const auto gae = compute_gae(traj.shaped_rewards.column(k), traj.values.column(k), hp.gamma,
                                 hp.gae_lambda);
    traj.advantages.set_column(k, gae.advantages);
    traj.returns.set_column(k, gae.returns);
  }
}

ChannelSelector select_channels(const RolloutBatch& batch,
                                std::span<const std::size_t> channel_of) {
  if (channel_of.size() != batch.size()) {
    throw ConfigError("channel selection needs one channel per trajectory");
  }
  ChannelSelector sel;
  sel.reserve(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& traj = batch.trajectories[i];
    const std::size_t k = channel_of[i];
    if (k >= traj.channels()) throw ConfigError("channel index out of range");
    LossTarget target;
    target.value_weights.assign(traj.channels(), 0.0);
    target.value_weights[k] = 1.0;
    target.advantages = traj.advantages.column(k);
    target.returns = traj.returns.column(k);
    sel.push_back(std::move(target));
  }
  return sel;
}

ChannelSelector select_channel(const RolloutBatch& batch, std::size_t k) {
  const std::vector<std::size_t> channel_of(batch.size(), k);
  return select_channels(batch, channel_of);
}

ChannelSelector select_summed(const RolloutBatch& batch, const Hyperparams& hp) {
  ChannelSelector sel;
  sel.reserve(batch.size());
  for (const auto& traj : batch.trajectories) {
    double terminal = 0.0;
    for (const double r : traj.terminal_rewards) terminal += r;
    const auto shaped = shape_rewards(traj, hp.kl_beta, std::span<const double>(&terminal, 1));
    std::vector<double> value_sum(traj.length(), 0.0);
    for (std::size_t t = 0; t < traj.length(); ++t) {
      for (const double v : traj.values.row(t)) value_sum[t] += v;
    }
    auto gae = compute_gae(shaped.column(0), value_sum, hp.gamma, hp.gae_lambda);
    sel.push_back({std::vector<double>(traj.channels(), 1.0), std::move(gae.advantages),
                   std::move(gae.returns)});
  }
  return sel;
}

bool normalize_advantages(ChannelSelector& selector) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& t : selector) {
    for (const double a : t.advantages) sum += a;
    n += t.advantages.size();
  }
  if (n == 0) return false;
  const double mean = sum / static_cast<double>(n);
  double var = 0.0;
  for (const auto& t : selector) {
    for (const double a : t.advantages) var += (a - mean) * (a - mean);
  }
  var /= static_cast<double>(n);
  if (var < 1e-12) return false;
  const double inv_std = 1.0 / std::sqrt(var);
  for (auto& t : selector) {
    for (double& a : t.advantages) a = (a - mean) * inv_std;
  }
  return true;
}

namespace {

struct StepStats {
  std::vector<double> logprobs;  // log-softmax per state, flattened
  std::vector<double> entropy;
  std::vector<double> ratio;
  std::vector<std::size_t> action;
};

std::vector<StateRef> batch_states(const RolloutBatch& batch) {
  std::vector<StateRef> states;
  states.reserve(batch.total_steps());
  for (const auto& traj : batch.trajectories) {
    if (!traj.doc) throw ConfigError("trajectory has no document");
    const std::span<const Token> tokens(traj.tokens);
    for (std::size_t t = 0; t < traj.length(); ++t) {
      states.push_back({traj.doc.get(), tokens.first(t), traj.horizon});
    }
  }
  return states;
}

const std::vector<double>& old_logprobs_of(const RolloutBatch& batch, std::size_t i) {
  if (batch.old_logprobs.size() == batch.size()) return batch.old_logprobs[i];
  return batch.trajectories[i].logprobs_rl;
}

StepStats step_stats(const RolloutBatch& batch, const Tape& tape) {
  const auto vocab = static_cast<std::size_t>(tape.shape().vocab_size);
  StepStats s;
  s.logprobs.resize(tape.size() * vocab);
  s.entropy.resize(tape.size());
  s.ratio.resize(tape.size());
  s.action.resize(tape.size());
  std::size_t idx = 0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& traj = batch.trajectories[i];
    const auto& old = old_logprobs_of(batch, i);
    if (old.size() != traj.length()) throw ConfigError("old log-probabilities do not match trajectory");
    for (std::size_t t = 0; t < traj.length(); ++t, ++idx) {
      auto lp = std::span<double>(s.logprobs).subspan(idx * vocab, vocab);
      log_softmax(tape.logits(idx), lp);
      double h = 0.0;
      for (const double l : lp) h -= std::exp(l) * l;
      s.entropy[idx] = h;
      const auto a = static_cast<std::size_t>(traj.tokens[t]);
      s.action[idx] = a;
      const double gap = lp[a] - old[t];
      if (!std::isfinite(gap) || std::abs(gap) > kMaxLogRatio) {
        throw NumericalError("non-finite importance ratio in trajectory " + std::to_string(i) +
                             " at step " + std::to_string(t));
      }
      s.ratio[idx] = std::exp(gap);
    }
  }
  return s;
}

// Loss for one selector; writes d(total)/d(outputs) into seeds when given.
LossBreakdown evaluate(const RolloutBatch& batch, const Tape& tape, const StepStats& stats,
                       const Hyperparams& hp, const ChannelSelector& sel, Seeds* seeds) {
  if (sel.size() != batch.size()) throw ConfigError("selector does not match batch size");
  const auto vocab = static_cast<std::size_t>(tape.shape().vocab_size);
  const double n = static_cast<double>(tape.size());
  const double lo = 1.0 - hp.clip_epsilon;
  const double hi = 1.0 + hp.clip_epsilon;
  LossBreakdown out;
  std::size_t idx = 0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& target = sel[i];
    const auto len = batch.trajectories[i].length();
    if (target.advantages.size() != len || target.returns.size() != len ||
        target.value_weights.size() != static_cast<std::size_t>(tape.shape().num_values)) {
      throw ConfigError("loss target does not match trajectory " + std::to_string(i));
    }
    for (std::size_t t = 0; t < len; ++t, ++idx) {
      const double adv = target.advantages[t];
      const double ratio = stats.ratio[idx];
      const double unclipped = ratio * adv;
      const double clipped = std::clamp(ratio, lo, hi) * adv;
      const bool unclipped_active = unclipped <= clipped;
      out.clip_loss += std::min(unclipped, clipped);

      const auto values = tape.values(idx);
      double v_pred = 0.0;
      for (std::size_t k = 0; k < values.size(); ++k) v_pred += target.value_weights[k] * values[k];
      const double v_err = v_pred - target.returns[t];
      out.value_loss += v_err * v_err;
      out.entropy += stats.entropy[idx];

      if (seeds == nullptr) continue;
      const auto lp = std::span<const double>(stats.logprobs).subspan(idx * vocab, vocab);
      const double surrogate_grad = unclipped_active ? unclipped : 0.0;
      auto dl = seeds->logits(idx);
      for (std::size_t j = 0; j < vocab; ++j) {
        const double p = std::exp(lp[j]);
        dl[j] = (surrogate_grad * p + hp.entropy_coef * p * (lp[j] + stats.entropy[idx])) / n;
      }
      dl[stats.action[idx]] -= surrogate_grad / n;
      auto dv = seeds->values(idx);
      for (std::size_t k = 0; k < dv.size(); ++k) {
        dv[k] = hp.value_coef * 2.0 * target.value_weights[k] * v_err / n;
      }
    }
  }
  out.clip_loss /= n;
  out.value_loss /= n;
  out.entropy /= n;
  out.total = -out.clip_loss + hp.value_coef * out.value_loss - hp.entropy_coef * out.entropy;
  return out;
}

}  // namespace

LossBreakdown ppo_loss(const RolloutBatch& batch, const PolicyParams& params,
                       const Hyperparams& hp, const ChannelSelector& selector) {
  const auto states = batch_states(batch);
  const Tape tape(params, states);
  const auto stats = step_stats(batch, tape);
  return evaluate(batch, tape, stats, hp, selector, nullptr);
}

std::vector<LossAndGradient> ppo_loss_gradients(const RolloutBatch& batch,
                                                const PolicyParams& params,
                                                const Hyperparams& hp,
                                                std::span<const ChannelSelector> selectors) {
  const auto states = batch_states(batch);
  const Tape tape(params, states);
  const auto stats = step_stats(batch, tape);
  std::vector<LossAndGradient> out;
  out.reserve(selectors.size());
  Seeds seeds(tape.size(), params.shape);
  for (const auto& sel : selectors) {
    seeds.clear();
    LossAndGradient lg;
    lg.loss = evaluate(batch, tape, stats, hp, sel, &seeds);
    if (!std::isfinite(lg.loss.total)) throw NumericalError("PPO loss is not finite");
    lg.grad.assign(params.flat.size(), 0.0);
    backward(params, tape, seeds, lg.grad);
    for (const double g : lg.grad) {
      if (!std::isfinite(g)) throw NumericalError("PPO gradient is not finite");
    }
    out.push_back(std::move(lg));
  }
  return out;
}

LossAndGradient ppo_loss_gradient(const RolloutBatch& batch, const PolicyParams& params,
                                  const Hyperparams& hp, const ChannelSelector& selector) {
  return std::move(ppo_loss_gradients(batch, params, hp, std::span(&selector, 1)).front());
}

RolloutBatch collect_rollouts(const PolicyParams& policy, const PolicyParams& reference,
                              std::span<const std::shared_ptr<const Document>> docs,
                              std::span<const std::size_t> doc_ids, const EpisodeConfig& cfg,
                              const Hyperparams& hp, std::uint64_t seed,
                              std::uint64_t first_episode) {
  if (policy.shape.num_values != static_cast<int>(kNumDims)) {
    throw ConfigError("collect_rollouts needs one value channel per reward dimension");
  }
  RolloutBatch batch;
  batch.trajectories.reserve(doc_ids.size());
  for (std::size_t i = 0; i < doc_ids.size(); ++i) {
    if (doc_ids[i] >= docs.size()) throw ConfigError("document id out of range");
    auto rng = CounterRng::stream(seed, StreamTag::Episode, first_episode + i);
    auto traj = rollout(policy, reference, docs[doc_ids[i]], cfg, rng);
    traj.doc_id = doc_ids[i];
    traj.dim_scores = score_dimensions(*traj.doc, traj.tokens);
    const auto scores = traj.dim_scores.as_array();
    traj.terminal_rewards.assign(scores.begin(), scores.end());
    fill_advantages(traj, hp);
    batch.old_logprobs.push_back(traj.logprobs_rl);
    batch.trajectories.push_back(std::move(traj));
  }
  return batch;
}

}  // namespace mdo
