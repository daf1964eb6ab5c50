#pragma once

// Small stochastic policy: token embeddings, a two-layer tanh trunk, a
// vocabulary logits head and a multi-channel value head, all stored in one
// flat parameter vector. Gradients are exact reverse-mode derivatives through
// a hand-written backward pass over a recorded forward tape.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "mdo/toyenv.hpp"

namespace mdo {

inline constexpr int kPrefixWindow = 4;

struct PolicyShape {
  int vocab_size = 64;
  int embed_dim = 32;
  int hidden = 64;
  int num_values = 4;

  void validate() const;
  [[nodiscard]] std::size_t feature_dim() const noexcept {
    return 2 * static_cast<std::size_t>(embed_dim) + 1;
  }
  [[nodiscard]] std::size_t param_count() const noexcept;

  friend bool operator==(const PolicyShape&, const PolicyShape&) = default;
};

/// Offsets of each parameter block inside the flat vector.
struct ParamLayout {
  std::size_t embedding, w1, b1, w2, b2, w_logits, b_logits, w_values, b_values, total;

  explicit ParamLayout(const PolicyShape& s) noexcept;
};

struct PolicyParams {
  PolicyShape shape;
  std::vector<double> flat;

  static PolicyParams zeros(const PolicyShape& shape);
  /// Entries uniform in [-scale, scale], deterministic in seed.
  static PolicyParams random(const PolicyShape& shape, std::uint64_t seed, double scale = 0.08);

  [[nodiscard]] ParamLayout layout() const noexcept { return ParamLayout(shape); }
  /// Throws ConfigError if flat.size() does not match the shape.
  void validate() const;
  [[nodiscard]] bool all_finite() const noexcept;

  [[nodiscard]] std::span<double> block(std::size_t offset, std::size_t count) {
    return std::span<double>(flat).subspan(offset, count);
  }
  [[nodiscard]] std::span<const double> block(std::size_t offset, std::size_t count) const {
    return std::span<const double>(flat).subspan(offset, count);
  }
};

struct ForwardOutput {
  std::vector<double> logits;
  std::vector<double> values;
};

/// Logits and value predictions for the state (doc, prefix); horizon is the
/// episode's maximum summary length and scales the position feature.
ForwardOutput forward(const PolicyParams& params, const Document& doc,
                      std::span<const Token> prefix, int horizon);

/// A decoding state. The referenced document and prefix must outlive any Tape built from it.
struct StateRef {
  const Document* doc = nullptr;
  std::span<const Token> prefix;
  int horizon = 16;
};

class Seeds;

/// Forward activations for a list of states, kept for the backward pass.
class Tape {
 public:
  Tape(const PolicyParams& params, std::span<const StateRef> states);

  [[nodiscard]] std::size_t size() const noexcept { return states_.size(); }
  [[nodiscard]] const PolicyShape& shape() const noexcept { return shape_; }
  [[nodiscard]] std::span<const double> logits(std::size_t i) const noexcept;
  [[nodiscard]] std::span<const double> values(std::size_t i) const noexcept;
  [[nodiscard]] const StateRef& state(std::size_t i) const noexcept { return states_[i]; }

 private:
  friend void backward(const PolicyParams&, const Tape&, const Seeds&, std::span<double>);

  PolicyShape shape_;
  std::vector<StateRef> states_;
  std::vector<double> features_;
  std::vector<double> h1_;
  std::vector<double> h2_;
  std::vector<double> logits_;
  std::vector<double> values_;
};

/// d(loss)/d(outputs) for every state of a tape.
class Seeds {
 public:
  Seeds(std::size_t states, const PolicyShape& shape);

  [[nodiscard]] std::span<double> logits(std::size_t i) noexcept;
  [[nodiscard]] std::span<double> values(std::size_t i) noexcept;
  [[nodiscard]] std::span<const double> logits(std::size_t i) const noexcept;
  [[nodiscard]] std::span<const double> values(std::size_t i) const noexcept;
  [[nodiscard]] std::size_t size() const noexcept { return states_; }

  void clear() noexcept;
  /// this += alpha * other
  void add_scaled(double alpha, const Seeds& other);

 private:
  std::size_t states_;
  std::size_t vocab_;
  std::size_t values_per_state_;
  std::vector<double> dlogits_;
  std::vector<double> dvalues_;
};

/// Accumulates d(loss)/d(params) into grad given output seeds.
void backward(const PolicyParams& params, const Tape& tape, const Seeds& seeds,
              std::span<double> grad);

/// Evaluates a scalar loss over the tape's outputs; fills seeds with the loss's
/// derivative with respect to each state's logits and values.
using LossFunction = std::function<double(const Tape&, Seeds&)>;

struct GradientResult {
  double loss = 0.0;
  std::vector<double> grad;
};

/// Exact gradient of loss(forward(params, states)); throws NumericalError on non-finite values.
GradientResult gradient(const PolicyParams& params, std::span<const StateRef> states,
                        const LossFunction& loss);

/// Numerically stable log-softmax.
void log_softmax(std::span<const double> logits, std::span<double> out);
std::vector<double> log_softmax(std::span<const double> logits);

// -- supervised pretraining ---------------------------------------------------

struct PretrainOptions {
  int epochs = 30;
  double lr = 1e-2;
  int minibatch = 8;
  int horizon = 16;
  std::uint64_t seed = 0;
};

struct PretrainResult {
  PolicyParams params;
  double initial_loss = 0.0;
  std::vector<double> epoch_losses;  // mean loss over the training set after each epoch
};

/// Mean per-token cross-entropy of the reference summaries under teacher forcing.
double teacher_forced_loss(const PolicyParams& params, std::span<const Document> docs, int horizon);

/// Adam on teacher-forced cross-entropy; throws TrainingError naming the epoch on divergence.
PretrainResult supervised_pretrain(std::span<const Document> docs, PolicyParams init,
                                   const PretrainOptions& options);

}  // namespace mdo
