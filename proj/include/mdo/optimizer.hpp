#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace mdo {

enum class OptimizerKind { Sgd, Adam };

std::string_view optimizer_name(OptimizerKind kind) noexcept;
std::optional<OptimizerKind> parse_optimizer(std::string_view name) noexcept;

/// Optimizer state carried between steps. Moments are empty for SGD.
struct OptimizerState {
  OptimizerKind kind = OptimizerKind::Adam;
  std::uint64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::vector<double> m;
  std::vector<double> v;

  static OptimizerState make(OptimizerKind kind, std::size_t param_count);
};

/// SGD: params -= lr * grad. Adam: bias-corrected moment update.
/// Throws ConfigError when lengths disagree.
void optimizer_step(OptimizerState& state, std::span<double> params,
                    std::span<const double> grad, double lr);

/// Rescales grad in place so that its L2 norm is at most max_norm; returns the original norm.
double clip_grad_norm(std::span<double> grad, double max_norm);

}  // namespace mdo
