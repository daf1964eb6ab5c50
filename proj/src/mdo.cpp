#include "mdo/mdo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "mdo/errors.hpp"
#include "mdo/kernels.hpp"

namespace mdo {

std::string_view strategy_name(Strategy s) noexcept {
  switch (s) {
    case Strategy::Min:
      return "min";
    case Strategy::Pro:
      return "pro";
    case Strategy::SumR:
      return "sum-r";
    case Strategy::SumL:
      return "sum-l";
  }
  return "unknown";
}

std::optional<Strategy> parse_strategy(std::string_view name) noexcept {
  for (const auto s : {Strategy::Min, Strategy::Pro, Strategy::SumR, Strategy::SumL}) {
    if (name == strategy_name(s)) return s;
  }
  return std::nullopt;
}

Strategy strategy_from_string(std::string_view name) {
  if (const auto s = parse_strategy(name)) return *s;
  throw ConfigError("unknown strategy '" + std::string(name) +
                    "' (expected min, pro, sum-r or sum-l)");
}

std::size_t argmin_channel(std::span<const double> values) {
  if (values.empty()) throw ConfigError("argmin of an empty score list");
  return static_cast<std::size_t>(std::min_element(values.begin(), values.end()) - values.begin());
}

std::pair<Dim, double> select_min_dimension(const DimScores& scores) noexcept {
  const auto a = scores.as_array();
  const auto k = static_cast<std::size_t>(std::min_element(a.begin(), a.end()) - a.begin());
  return {static_cast<Dim>(k), a[k]};
}

std::vector<double> pcgrad_project(std::span<const std::vector<double>> grads, CounterRng& rng,
                                   std::vector<ProjectionStep>* trace) {
  if (grads.empty()) throw ConfigError("pcgrad_project needs at least one gradient");
  const std::size_t n = grads.front().size();
  for (const auto& g : grads) {
    if (g.size() != n) throw ConfigError("pcgrad_project: gradient lengths differ");
  }
  const std::size_t tasks = grads.size();
  std::vector<double> sq_norm(tasks);
  for (std::size_t q = 0; q < tasks; ++q) sq_norm[q] = kernels::squared_norm(grads[q]);

  std::vector<double> out;
  std::vector<double> projected;
  std::vector<std::size_t> others;
  for (std::size_t p = 0; p < tasks; ++p) {
    projected = grads[p];
    others.clear();
    for (std::size_t q = 0; q < tasks; ++q) {
      if (q != p) others.push_back(q);
    }
    rng.shuffle(std::span<std::size_t>(others));
    for (const std::size_t q : others) {
      ProjectionStep step{p, q, kernels::dot(projected, grads[q]), 0.0, false};
      if (step.dot_before < 0.0 && sq_norm[q] >= 1e-24) {
        const double before_sq = kernels::squared_norm(projected);
        kernels::axpy(-step.dot_before / sq_norm[q], grads[q], projected);
        const double residual = kernels::dot(projected, grads[q]);
        if (residual < 0.0) kernels::axpy(-residual / sq_norm[q], grads[q], projected);
        if (kernels::squared_norm(projected) <= 1e-24 * before_sq) {
          std::fill(projected.begin(), projected.end(), 0.0);
        }
        step.projected = true;
        if (trace) step.dot_after = kernels::dot(projected, grads[q]);
      } else {
        step.dot_after = step.dot_before;
      }
      if (trace) {
        step.norm_after = std::sqrt(kernels::squared_norm(projected));
        trace->push_back(step);
      }
    }
    if (p == 0) {
      out = projected;
    } else {
      for (std::size_t i = 0; i < n; ++i) out[i] += projected[i];
    }
  }
  return out;
}

std::vector<double> combine_gradients(Strategy strategy,
                                      std::span<const std::vector<double>> grads,
                                      CounterRng& rng) {
  if (grads.empty()) throw ConfigError("combine_gradients needs at least one gradient");
  switch (strategy) {
    case Strategy::Pro:
      return pcgrad_project(grads, rng);
    case Strategy::SumL: {
      std::vector<double> out = grads.front();
      for (std::size_t k = 1; k < grads.size(); ++k) {
        if (grads[k].size() != out.size()) throw ConfigError("gradient lengths differ");
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += grads[k][i];
      }
      return out;
    }
    case Strategy::Min:
    case Strategy::SumR:
      if (grads.size() != 1) throw ConfigError("single-loss strategies expect one gradient");
      return grads.front();
  }
  throw ConfigError("unknown strategy");
}

std::vector<ChannelSelector> strategy_targets(Strategy strategy, const RolloutBatch& batch,
                                              const Hyperparams& hp) {
  std::vector<ChannelSelector> targets;
  switch (strategy) {
    case Strategy::Min: {
      std::vector<std::size_t> channel_of;
      for (const auto& traj : batch.trajectories) channel_of.push_back(argmin_channel(traj.terminal_rewards));
      targets.push_back(select_channels(batch, channel_of));
      break;
    }
    case Strategy::SumR:
      targets.push_back(select_summed(batch, hp));
      break;
    case Strategy::SumL:
    case Strategy::Pro:
      for (std::size_t k = 0; k < batch.channels(); ++k) targets.push_back(select_channel(batch, k));
      break;
  }
  if (hp.normalize_advantages) {
    for (auto& t : targets) normalize_advantages(t);
  }
  return targets;
}

StepMetrics mdo_update(Strategy strategy, const RolloutBatch& batch, PolicyParams& params,
                       const Hyperparams& hp, OptimizerState& optimizer, CounterRng& rng) {
  hp.validate();
  if (batch.size() == 0) throw ConfigError("mdo_update needs a non-empty batch");
  if (optimizer.kind != hp.optimizer) throw ConfigError("optimizer state kind does not match hyperparameters");
  const auto targets = strategy_targets(strategy, batch, hp);

  StepMetrics metrics;
  std::vector<std::vector<double>> grads;
  for (int epoch = 0; epoch < hp.ppo_epochs; ++epoch) {
    auto results = ppo_loss_gradients(batch, params, hp, targets);
    grads.clear();
    for (auto& r : results) {
      metrics.loss += r.loss;
      grads.push_back(std::move(r.grad));
    }
    auto combined = combine_gradients(strategy, grads, rng);
    metrics.grad_norm = clip_grad_norm(combined, hp.max_grad_norm);
    optimizer_step(optimizer, params.flat, combined, hp.learning_rate);
    ++metrics.epochs;
  }
  const double inv = 1.0 / static_cast<double>(metrics.epochs);
  metrics.loss.clip_loss *= inv;
  metrics.loss.value_loss *= inv;
  metrics.loss.entropy *= inv;
  metrics.loss.total *= inv;
  if (!params.all_finite()) throw NumericalError("parameters became non-finite after update");
  return metrics;
}

}  // namespace mdo
