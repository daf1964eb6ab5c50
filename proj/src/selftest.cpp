#include "mdo/selftest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>

#include "mdo/kernels.hpp"
#include "mdo/mdo.hpp"
#include "mdo/policy.hpp"
#include "mdo/ppo.hpp"
#include "mdo/rewards.hpp"
#include "mdo/rng.hpp"
#include "mdo/rollout.hpp"

namespace mdo {
namespace {

std::string format(const char* fmt, double a, double b = 0.0) {
  char buf[160];
  std::snprintf(buf, sizeof buf, fmt, a, b);
  return buf;
}

SelftestCheck kernel_equivalence(CounterRng& rng) {
  const auto& ref = kernels::scalar_table();
  const auto& act = kernels::active();
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto n = static_cast<std::size_t>(rng.uniform_int(0, 67));
    std::vector<double> a(n), b(n);
    for (auto& x : a) x = rng.uniform(-1, 1);
    for (auto& x : b) x = rng.uniform(-1, 1);
    double scale = 1.0;
    for (std::size_t i = 0; i < n; ++i) scale += std::abs(a[i] * b[i]);
    worst = std::max(worst, std::abs(ref.dot(a.data(), b.data(), n) - act.dot(a.data(), b.data(), n)) / scale);
    auto y1 = b, y2 = b;
    ref.axpy(0.37, a.data(), y1.data(), n);
    act.axpy(0.37, a.data(), y2.data(), n);
    for (std::size_t i = 0; i < n; ++i) worst = std::max(worst, std::abs(y1[i] - y2[i]));
  }
  return {"kernel equivalence (" + std::string(kernels::isa_name(act.isa)) + " vs scalar)",
          worst <= 1e-14, format("max relative deviation %.3g", worst)};
}

SelftestCheck gae_equivalence(CounterRng& rng) {
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto len = static_cast<std::size_t>(rng.uniform_int(1, 10));
    const double gamma = rng.uniform(0.0, 1.0), lambda = rng.uniform(0.0, 1.0);
    std::vector<double> r(len), v(len);
    for (auto& x : r) x = rng.uniform(-1, 1);
    for (auto& x : v) x = rng.uniform(-1, 1);
    const auto gae = compute_gae(r, v, gamma, lambda);
    for (std::size_t t = 0; t < len; ++t) {
      double explicit_sum = 0.0, weight = 1.0;
      for (std::size_t i = t; i < len; ++i) {
        const double next = i + 1 < len ? v[i + 1] : 0.0;
        explicit_sum += weight * (r[i] + gamma * next - v[i]);
        weight *= gamma * lambda;
      }
      worst = std::max(worst, std::abs(explicit_sum - gae.advantages[t]));
    }
  }
  return {"GAE recursion equals explicit sum", worst <= 1e-10, format("max deviation %.3g", worst)};
}

SelftestCheck projection_invariants(CounterRng& rng) {
  bool ok = true;
  double worst = 0.0;
  for (int trial = 0; trial < 200 && ok; ++trial) {
    const auto dim = static_cast<std::size_t>(rng.uniform_int(1, 50));
    std::vector<std::vector<double>> g(4, std::vector<double>(dim));
    for (auto& v : g) {
      for (auto& x : v) x = rng.uniform(-1, 1);
    }
    std::vector<ProjectionStep> trace;
    auto shuffle_rng = rng.split(static_cast<std::uint64_t>(trial));
    pcgrad_project(g, shuffle_rng, &trace);
    for (const auto& s : trace) {
      const double bound = 1e-9 * s.norm_after * std::sqrt(kernels::squared_norm(g[s.q]));
      worst = std::min(worst, s.dot_after);
      if (s.dot_after < -bound) ok = false;
    }
  }
  const std::vector<std::vector<double>> worked = {{1.0, 0.0}, {-1.0, 1.0}};
  auto r = rng.split(999);
  const auto out = pcgrad_project(worked, r);
  ok = ok && std::abs(out[0] - 0.5) < 1e-15 && std::abs(out[1] - 1.5) < 1e-15;
  return {"projection removes conflicts", ok, format("most negative post-step dot %.3g", worst)};
}

SelftestCheck kl_shaping(CounterRng& rng) {
  const Vocabulary vocab;
  const auto params = PolicyParams::random(PolicyShape{}, rng());
  bool ok = true;
  for (int trial = 0; trial < 20 && ok; ++trial) {
    auto doc = std::make_shared<const Document>(generate_document(vocab, rng()));
    auto ep_rng = rng.split(static_cast<std::uint64_t>(trial));
    auto traj = rollout(params, params, doc, EpisodeConfig{}, ep_rng);
    const auto scores = score_dimensions(*doc, traj.tokens).as_array();
    const auto shaped = shape_rewards(traj, 0.2, scores);
    for (std::size_t t = 0; t + 1 < traj.length(); ++t) {
      for (std::size_t k = 0; k < kNumDims; ++k) ok = ok && shaped(t, k) == 0.0;
    }
    for (std::size_t k = 0; k < kNumDims; ++k) ok = ok && shaped(traj.length() - 1, k) == scores[k];
  }
  return {"KL shaping vanishes for identical policies", ok, ""};
}

SelftestCheck gradient_check(CounterRng& rng) {
  const Vocabulary vocab;
  const PolicyShape shape{vocab.size, 8, 12, 4};
  auto params = PolicyParams::random(shape, rng(), 0.3);
  const Document doc = generate_document(vocab, rng());
  const std::vector<Token> prefix = {5, 7, 30};
  std::vector<StateRef> states;
  for (std::size_t t = 0; t <= prefix.size(); ++t) states.push_back({&doc, std::span(prefix).first(t), 16});
  const std::vector<double> coef = {0.3, -1.1, 0.7, 0.2};
  const LossFunction loss = [&](const Tape& tape, Seeds& seeds) {
    double total = 0.0;
    for (std::size_t i = 0; i < tape.size(); ++i) {
      const auto lp = log_softmax(tape.logits(i));
      const auto a = static_cast<std::size_t>(prefix[std::min(i, prefix.size() - 1)]);
      total -= lp[a];
      auto dl = seeds.logits(i);
      for (std::size_t j = 0; j < lp.size(); ++j) dl[j] = std::exp(lp[j]);
      dl[a] -= 1.0;
      for (std::size_t k = 0; k < coef.size(); ++k) {
        total += coef[k] * tape.values(i)[k];
        seeds.values(i)[k] = coef[k];
      }
    }
    return total;
  };
  const auto g = gradient(params, states, loss);
  double worst = 0.0;
  for (int c = 0; c < 16; ++c) {
    const auto idx = static_cast<std::size_t>(rng.below(params.flat.size()));
    const double orig = params.flat[idx];
    const double h = 1e-5;
    params.flat[idx] = orig + h;
    const double up = gradient(params, states, loss).loss;
    params.flat[idx] = orig - h;
    const double down = gradient(params, states, loss).loss;
    params.flat[idx] = orig;
    const double fd = (up - down) / (2 * h);
    const double denom = std::max({std::abs(fd), std::abs(g.grad[idx]), 1e-6});
    worst = std::max(worst, std::abs(fd - g.grad[idx]) / denom);
  }
  return {"analytic gradient matches finite differences", worst <= 1e-4,
          format("max relative error %.3g", worst)};
}

SelftestCheck reference_is_perfect(CounterRng& rng) {
  const Vocabulary vocab;
  bool ok = true;
  for (int i = 0; i < 50 && ok; ++i) {
    const auto doc = generate_document(vocab, rng());
    const auto s = score_dimensions(doc, reference_summary(doc));
    ok = s.coherence == 1.0 && s.consistency == 1.0 && s.fluency == 1.0 && s.relevance == 1.0;
  }
  return {"reference summaries score 1 on every dimension", ok, ""};
}

}  // namespace

std::vector<SelftestCheck> run_selftest(std::uint64_t seed) {
  auto rng = CounterRng::stream(seed, StreamTag::Init, 0x5e1f);
  std::vector<SelftestCheck> out;
  const std::vector<std::function<SelftestCheck(CounterRng&)>> checks = {
      kernel_equivalence, gae_equivalence, projection_invariants,
      kl_shaping,         gradient_check,  reference_is_perfect};
  for (std::size_t i = 0; i < checks.size(); ++i) {
    auto sub = rng.split(i);
    try {
      out.push_back(checks[i](sub));
    } catch (const std::exception& e) {
      out.push_back({"check " + std::to_string(i), false, e.what()});
    }
  }
  return out;
}

}  // namespace mdo
