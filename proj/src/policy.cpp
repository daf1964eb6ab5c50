#include "mdo/policy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "mdo/errors.hpp"
#include "mdo/kernels.hpp"
#include "mdo/optimizer.hpp"
#include "mdo/rng.hpp"

namespace mdo {

void PolicyShape::validate() const {
  if (vocab_size < 3 || embed_dim < 1 || hidden < 1 || num_values < 1) {
    throw ConfigError("policy shape must have vocab_size >= 3 and positive widths");
  }
}

std::size_t PolicyShape::param_count() const noexcept { return ParamLayout(*this).total; }

ParamLayout::ParamLayout(const PolicyShape& s) noexcept {
  const auto v = static_cast<std::size_t>(s.vocab_size);
  const auto d = static_cast<std::size_t>(s.embed_dim);
  const auto h = static_cast<std::size_t>(s.hidden);
  const auto m = static_cast<std::size_t>(s.num_values);
  const std::size_t f = s.feature_dim();
  embedding = 0;
  w1 = embedding + v * d;
  b1 = w1 + h * f;
  w2 = b1 + h;
  b2 = w2 + h * h;
  w_logits = b2 + h;
  b_logits = w_logits + v * h;
  w_values = b_logits + v;
  b_values = w_values + m * h;
  total = b_values + m;
}

PolicyParams PolicyParams::zeros(const PolicyShape& shape) {
  shape.validate();
  return {shape, std::vector<double>(shape.param_count(), 0.0)};
}

PolicyParams PolicyParams::random(const PolicyShape& shape, std::uint64_t seed, double scale) {
  auto p = zeros(shape);
  auto rng = CounterRng::stream(seed, StreamTag::Init);
  for (auto& w : p.flat) w = rng.uniform(-scale, scale);
  return p;
}

void PolicyParams::validate() const {
  shape.validate();
  if (flat.size() != shape.param_count()) {
    throw ConfigError("parameter vector has " + std::to_string(flat.size()) +
                      " entries, shape requires " + std::to_string(shape.param_count()));
  }
}

bool PolicyParams::all_finite() const noexcept {
  return std::all_of(flat.begin(), flat.end(), [](double x) { return std::isfinite(x); });
}

namespace {

struct Dims {
  std::size_t v, d, h, m, f;
  explicit Dims(const PolicyShape& s)
      : v(static_cast<std::size_t>(s.vocab_size)),
        d(static_cast<std::size_t>(s.embed_dim)),
        h(static_cast<std::size_t>(s.hidden)),
        m(static_cast<std::size_t>(s.num_values)),
        f(s.feature_dim()) {}
};

void check_tokens(std::span<const Token> tokens, std::size_t vocab, const char* what) {
  for (const Token t : tokens) {
    if (t < 0 || static_cast<std::size_t>(t) >= vocab) {
      throw ConfigError(std::string(what) + " token " + std::to_string(t) +
                        " outside policy vocabulary of size " + std::to_string(vocab));
    }
  }
}

std::span<const Token> prefix_window(std::span<const Token> prefix) noexcept {
  const auto k = std::min<std::size_t>(kPrefixWindow, prefix.size());
  return prefix.last(k);
}

void compute_features(const PolicyParams& p, const ParamLayout& lay, const Dims& dm,
                      const StateRef& s, double* x) {
  if (s.doc == nullptr) throw ConfigError("state has no document");
  if (s.horizon < 1) throw ConfigError("state horizon must be positive");
  const auto doc = s.doc->tokens();
  check_tokens(doc, dm.v, "document");
  check_tokens(s.prefix, dm.v, "prefix");
  const auto& k = kernels::active();
  const double* emb = p.flat.data() + lay.embedding;

  std::fill(x, x + dm.f, 0.0);
  for (const Token t : doc) k.axpy(1.0, emb + static_cast<std::size_t>(t) * dm.d, x, dm.d);
  k.scale(1.0 / static_cast<double>(doc.size()), x, dm.d);

  double* px = x + dm.d;
  const auto window = prefix_window(s.prefix);
  if (window.empty()) {
    std::copy_n(emb + static_cast<std::size_t>(Vocabulary::kBos) * dm.d, dm.d, px);
  } else {
    for (const Token t : window) k.axpy(1.0, emb + static_cast<std::size_t>(t) * dm.d, px, dm.d);
    k.scale(1.0 / static_cast<double>(window.size()), px, dm.d);
  }
  x[2 * dm.d] = static_cast<double>(s.prefix.size()) / static_cast<double>(s.horizon);
}

void run_trunk_and_heads(const PolicyParams& p, const ParamLayout& lay, const Dims& dm,
                         const double* x, double* h1, double* h2, double* logits, double* values) {
  const auto& k = kernels::active();
  const double* w = p.flat.data();
  k.affine(w + lay.w1, w + lay.b1, x, h1, dm.h, dm.f);
  for (std::size_t i = 0; i < dm.h; ++i) h1[i] = std::tanh(h1[i]);
  k.affine(w + lay.w2, w + lay.b2, h1, h2, dm.h, dm.h);
  for (std::size_t i = 0; i < dm.h; ++i) h2[i] = std::tanh(h2[i]);
  k.affine(w + lay.w_logits, w + lay.b_logits, h2, logits, dm.v, dm.h);
  k.affine(w + lay.w_values, w + lay.b_values, h2, values, dm.m, dm.h);
}

}  // namespace

ForwardOutput forward(const PolicyParams& params, const Document& doc,
                      std::span<const Token> prefix, int horizon) {
  params.validate();
  const Dims dm(params.shape);
  const ParamLayout lay(params.shape);
  std::vector<double> x(dm.f), h1(dm.h), h2(dm.h);
  ForwardOutput out{std::vector<double>(dm.v), std::vector<double>(dm.m)};
  compute_features(params, lay, dm, StateRef{&doc, prefix, horizon}, x.data());
  run_trunk_and_heads(params, lay, dm, x.data(), h1.data(), h2.data(), out.logits.data(),
                      out.values.data());
  return out;
}

Tape::Tape(const PolicyParams& params, std::span<const StateRef> states)
    : shape_(params.shape), states_(states.begin(), states.end()) {
  params.validate();
  const Dims dm(shape_);
  const ParamLayout lay(shape_);
  const std::size_t n = states_.size();
  features_.resize(n * dm.f);
  h1_.resize(n * dm.h);
  h2_.resize(n * dm.h);
  logits_.resize(n * dm.v);
  values_.resize(n * dm.m);
  for (std::size_t i = 0; i < n; ++i) {
    compute_features(params, lay, dm, states_[i], features_.data() + i * dm.f);
    run_trunk_and_heads(params, lay, dm, features_.data() + i * dm.f, h1_.data() + i * dm.h,
                        h2_.data() + i * dm.h, logits_.data() + i * dm.v,
                        values_.data() + i * dm.m);
  }
}

std::span<const double> Tape::logits(std::size_t i) const noexcept {
  const auto v = static_cast<std::size_t>(shape_.vocab_size);
  return std::span<const double>(logits_).subspan(i * v, v);
}

std::span<const double> Tape::values(std::size_t i) const noexcept {
  const auto m = static_cast<std::size_t>(shape_.num_values);
  return std::span<const double>(values_).subspan(i * m, m);
}

Seeds::Seeds(std::size_t states, const PolicyShape& shape)
    : states_(states),
      vocab_(static_cast<std::size_t>(shape.vocab_size)),
      values_per_state_(static_cast<std::size_t>(shape.num_values)),
      dlogits_(states * vocab_, 0.0),
      dvalues_(states * values_per_state_, 0.0) {}

std::span<double> Seeds::logits(std::size_t i) noexcept {
  return std::span<double>(dlogits_).subspan(i * vocab_, vocab_);
}
std::span<double> Seeds::values(std::size_t i) noexcept {
  return std::span<double>(dvalues_).subspan(i * values_per_state_, values_per_state_);
}
std::span<const double> Seeds::logits(std::size_t i) const noexcept {
  return std::span<const double>(dlogits_).subspan(i * vocab_, vocab_);
}
std::span<const double> Seeds::values(std::size_t i) const noexcept {
  return std::span<const double>(dvalues_).subspan(i * values_per_state_, values_per_state_);
}

void Seeds::clear() noexcept {
  std::fill(dlogits_.begin(), dlogits_.end(), 0.0);
  std::fill(dvalues_.begin(), dvalues_.end(), 0.0);
}

void Seeds::add_scaled(double alpha, const Seeds& other) {
  if (other.dlogits_.size() != dlogits_.size() || other.dvalues_.size() != dvalues_.size()) {
    throw ConfigError("seed buffers have different shapes");
  }
  kernels::axpy(alpha, other.dlogits_, dlogits_);
  kernels::axpy(alpha, other.dvalues_, dvalues_);
}

void backward(const PolicyParams& params, const Tape& tape, const Seeds& seeds,
              std::span<double> grad) {
  if (!(params.shape == tape.shape_) || grad.size() != params.flat.size() ||
      seeds.size() != tape.size()) {
    throw ConfigError("backward: tape, seeds and gradient do not match the parameters");
  }
  const Dims dm(params.shape);
  const ParamLayout lay(params.shape);
  const auto& k = kernels::active();
  const double* w = params.flat.data();
  double* g = grad.data();
  std::vector<double> dh2(dm.h), dh1(dm.h), dx(dm.f);

  for (std::size_t i = 0; i < tape.size(); ++i) {
    const auto dl = seeds.logits(i);
    const auto dv = seeds.values(i);
    const bool silent = std::all_of(dl.begin(), dl.end(), [](double x) { return x == 0.0; }) &&
                        std::all_of(dv.begin(), dv.end(), [](double x) { return x == 0.0; });
    if (silent) continue;
    const double* x = tape.features_.data() + i * dm.f;
    const double* h1 = tape.h1_.data() + i * dm.h;
    const double* h2 = tape.h2_.data() + i * dm.h;

    k.outer_acc(dl.data(), h2, g + lay.w_logits, dm.v, dm.h);
    k.axpy(1.0, dl.data(), g + lay.b_logits, dm.v);
    k.outer_acc(dv.data(), h2, g + lay.w_values, dm.m, dm.h);
    k.axpy(1.0, dv.data(), g + lay.b_values, dm.m);

    std::fill(dh2.begin(), dh2.end(), 0.0);
    k.affine_t_acc(w + lay.w_logits, dl.data(), dh2.data(), dm.v, dm.h);
    k.affine_t_acc(w + lay.w_values, dv.data(), dh2.data(), dm.m, dm.h);
    for (std::size_t j = 0; j < dm.h; ++j) dh2[j] *= 1.0 - h2[j] * h2[j];

    k.outer_acc(dh2.data(), h1, g + lay.w2, dm.h, dm.h);
    k.axpy(1.0, dh2.data(), g + lay.b2, dm.h);
    std::fill(dh1.begin(), dh1.end(), 0.0);
    k.affine_t_acc(w + lay.w2, dh2.data(), dh1.data(), dm.h, dm.h);
    for (std::size_t j = 0; j < dm.h; ++j) dh1[j] *= 1.0 - h1[j] * h1[j];

    k.outer_acc(dh1.data(), x, g + lay.w1, dm.h, dm.f);
    k.axpy(1.0, dh1.data(), g + lay.b1, dm.h);
    std::fill(dx.begin(), dx.end(), 0.0);
    k.affine_t_acc(w + lay.w1, dh1.data(), dx.data(), dm.h, dm.f);

    const StateRef& s = tape.state(i);
    const auto doc = s.doc->tokens();
    const double doc_scale = 1.0 / static_cast<double>(doc.size());
    for (const Token t : doc) {
      k.axpy(doc_scale, dx.data(), g + lay.embedding + static_cast<std::size_t>(t) * dm.d, dm.d);
    }
    const auto window = prefix_window(s.prefix);
    if (window.empty()) {
      k.axpy(1.0, dx.data() + dm.d,
             g + lay.embedding + static_cast<std::size_t>(Vocabulary::kBos) * dm.d, dm.d);
    } else {
      const double pre_scale = 1.0 / static_cast<double>(window.size());
      for (const Token t : window) {
        k.axpy(pre_scale, dx.data() + dm.d,
               g + lay.embedding + static_cast<std::size_t>(t) * dm.d, dm.d);
      }
    }
  }
}

GradientResult gradient(const PolicyParams& params, std::span<const StateRef> states,
                        const LossFunction& loss) {
  const Tape tape(params, states);
  Seeds seeds(tape.size(), params.shape);
  GradientResult out;
  out.loss = loss(tape, seeds);
  if (!std::isfinite(out.loss)) throw NumericalError("loss is not finite");
  out.grad.assign(params.flat.size(), 0.0);
  backward(params, tape, seeds, out.grad);
  for (std::size_t i = 0; i < out.grad.size(); ++i) {
    if (!std::isfinite(out.grad[i])) {
      throw NumericalError("gradient entry " + std::to_string(i) + " is not finite");
    }
  }
  return out;
}

void log_softmax(std::span<const double> logits, std::span<double> out) {
  const double hi = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (const double l : logits) sum += std::exp(l - hi);
  const double lse = hi + std::log(sum);
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] - lse;
}

std::vector<double> log_softmax(std::span<const double> logits) {
  std::vector<double> out(logits.size());
  log_softmax(logits, out);
  return out;
}

// -- supervised pretraining ---------------------------------------------------

namespace {

struct TeacherBatch {
  std::vector<std::vector<Token>> targets;
  std::vector<StateRef> states;
  std::vector<Token> labels;
};

TeacherBatch teacher_states(std::span<const Document> docs, std::span<const std::size_t> order,
                            int horizon) {
  TeacherBatch b;
  b.targets.reserve(order.size());
  for (const std::size_t i : order) b.targets.push_back(reference_summary(docs[i]));
  for (std::size_t j = 0; j < order.size(); ++j) {
    const auto& target = b.targets[j];
    for (std::size_t t = 0; t < target.size(); ++t) {
      b.states.push_back({&docs[order[j]], std::span<const Token>(target).first(t), horizon});
      b.labels.push_back(target[t]);
    }
  }
  return b;
}

// Mean cross-entropy over the batch's labels; seeds get (softmax - onehot) / n.
double cross_entropy(const Tape& tape, std::span<const Token> labels, Seeds* seeds) {
  const auto n = static_cast<double>(labels.size());
  std::vector<double> lp(static_cast<std::size_t>(tape.shape().vocab_size));
  double total = 0.0;
  for (std::size_t i = 0; i < tape.size(); ++i) {
    log_softmax(tape.logits(i), lp);
    const auto label = static_cast<std::size_t>(labels[i]);
    total -= lp[label];
    if (seeds != nullptr) {
      auto d = seeds->logits(i);
      for (std::size_t j = 0; j < lp.size(); ++j) d[j] = std::exp(lp[j]) / n;
      d[label] -= 1.0 / n;
    }
  }
  return total / n;
}

}  // namespace

double teacher_forced_loss(const PolicyParams& params, std::span<const Document> docs,
                           int horizon) {
  if (docs.empty()) throw ConfigError("teacher_forced_loss needs at least one document");
  std::vector<std::size_t> order(docs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto batch = teacher_states(docs, order, horizon);
  const Tape tape(params, batch.states);
  return cross_entropy(tape, batch.labels, nullptr);
}

PretrainResult supervised_pretrain(std::span<const Document> docs, PolicyParams init,
                                   const PretrainOptions& options) {
  if (docs.empty()) throw ConfigError("supervised_pretrain needs at least one document");
  if (options.epochs < 0 || options.minibatch < 1 || !(options.lr > 0.0)) {
    throw ConfigError("pretraining needs epochs >= 0, minibatch >= 1 and lr > 0");
  }
  init.validate();
  PretrainResult result{std::move(init), 0.0, {}};
  auto& params = result.params;
  result.initial_loss = teacher_forced_loss(params, docs, options.horizon);
  auto opt = OptimizerState::make(OptimizerKind::Adam, params.flat.size());

  std::vector<std::size_t> order(docs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto mb = static_cast<std::size_t>(options.minibatch);
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    auto rng = CounterRng::stream(options.seed, StreamTag::Pretrain, static_cast<std::uint64_t>(epoch));
    rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t start = 0; start < order.size(); start += mb) {
      const auto chunk = std::span<const std::size_t>(order).subspan(
          start, std::min(mb, order.size() - start));
      const auto batch = teacher_states(docs, chunk, options.horizon);
      GradientResult g;
      try {
        g = gradient(params, batch.states, [&](const Tape& tape, Seeds& seeds) {
          return cross_entropy(tape, batch.labels, &seeds);
        });
      } catch (const NumericalError& e) {
        throw TrainingError("pretraining diverged in epoch " + std::to_string(epoch) + ": " +
                            e.what());
      }
      optimizer_step(opt, params.flat, g.grad, options.lr);
    }
    const double loss = teacher_forced_loss(params, docs, options.horizon);
    if (!std::isfinite(loss) || !params.all_finite()) {
      throw TrainingError("pretraining diverged in epoch " + std::to_string(epoch));
    }
    result.epoch_losses.push_back(loss);
  }
  return result;
}

}  // namespace mdo
