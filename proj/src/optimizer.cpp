#include "mdo/optimizer.hpp"

#include <cmath>
#include <string>

#include "mdo/errors.hpp"
#include "mdo/kernels.hpp"

namespace mdo {

std::string_view optimizer_name(OptimizerKind kind) noexcept {
  return kind == OptimizerKind::Sgd ? "sgd" : "adam";
}

std::optional<OptimizerKind> parse_optimizer(std::string_view name) noexcept {
  if (name == "sgd") return OptimizerKind::Sgd;
  if (name == "adam") return OptimizerKind::Adam;
  return std::nullopt;
}

OptimizerState OptimizerState::make(OptimizerKind kind, std::size_t param_count) {
  OptimizerState s;
  s.kind = kind;
  if (kind == OptimizerKind::Adam) {
    s.m.assign(param_count, 0.0);
    s.v.assign(param_count, 0.0);
  }
  return s;
}

void optimizer_step(OptimizerState& state, std::span<double> params,
                    std::span<const double> grad, double lr) {
  if (params.size() != grad.size()) {
    throw ConfigError("gradient length " + std::to_string(grad.size()) +
                      " does not match parameter length " + std::to_string(params.size()));
  }
  ++state.step;
  if (state.kind == OptimizerKind::Sgd) {
    kernels::axpy(-lr, grad, params);
    return;
  }
  if (state.m.size() != params.size() || state.v.size() != params.size()) {
    throw ConfigError("Adam moment buffers do not match parameter length");
  }
  const auto t = static_cast<double>(state.step);
  const kernels::AdamCoeffs c{
      .lr = lr,
      .beta1 = state.beta1,
      .beta2 = state.beta2,
      .eps = state.eps,
      .bias1 = 1.0 - std::pow(state.beta1, t),
      .bias2 = 1.0 - std::pow(state.beta2, t),
  };
  kernels::active().adam(params.data(), grad.data(), state.m.data(), state.v.data(),
                         params.size(), c);
}

double clip_grad_norm(std::span<double> grad, double max_norm) {
  const double norm = std::sqrt(kernels::squared_norm(grad));
  if (norm > max_norm && norm > 0.0) kernels::scale(max_norm / norm, grad);
  return norm;
}

}  // namespace mdo
