#include <memory>
#include <set>

#include "doctest.h"
#include "mdo/errors.hpp"
#include "mdo/policy.hpp"
#include "mdo/rollout.hpp"
#include "mdo/toyenv.hpp"

using namespace mdo;

namespace {

PolicyParams forced_eos_policy(double eos_logit) {
  auto p = PolicyParams::zeros(PolicyShape{});
  const auto lay = p.layout();
  auto bias = p.block(lay.b_logits, 64);
  for (auto& b : bias) b = -eos_logit;
  bias[Vocabulary::kEos] = eos_logit;
  return p;
}

}  // namespace

TEST_SUITE("toyenv") {

TEST_CASE("vocabulary ranges") {
  Vocabulary v;
  CHECK_NOTHROW(v.validate());
  int reserved = 0, salient = 0, filler = 0;
  for (Token t = 0; t < v.size; ++t) {
    const int hits = int(v.is_reserved(t)) + int(v.is_salient(t)) + int(v.is_filler(t));
    CHECK(hits == 1);
    reserved += v.is_reserved(t);
    salient += v.is_salient(t);
    filler += v.is_filler(t);
  }
  CHECK(reserved == 3);
  CHECK(salient == 16);
  CHECK(filler == 45);

  Vocabulary small = v;
  small.size = 19;
  CHECK_THROWS_AS(small.validate(), ConfigError);
  Vocabulary overlap = v;
  overlap.filler_first = 18;
  CHECK_THROWS_AS(overlap.validate(), ConfigError);
  CHECK_THROWS_AS(generate_document(overlap, 1), ConfigError);
}

TEST_CASE("generation is deterministic in the seed") {
  const Vocabulary v;
  CHECK(generate_document(v, 7) == generate_document(v, 7));
  CHECK_FALSE(generate_document(v, 7) == generate_document(v, 8));
}

TEST_CASE("seed 42 golden document") {
  const auto d = generate_document(Vocabulary{}, 42);
  const std::vector<Token> tokens = {
      38, 46, 8,  31, 23, 18, 51, 58, 5,  22, 36, 15, 37, 57, 63, 14, 35,
      40, 25, 49, 25, 40, 32, 54, 26, 23, 48, 52, 27, 28, 25, 52, 36, 36,
      54, 13, 52, 20, 50, 24, 33, 19, 28, 43, 61, 54, 40, 33, 11, 19};
  const std::vector<Token> salient = {8, 18, 5, 15, 14, 13, 11};
  CHECK(std::vector<Token>(d.tokens().begin(), d.tokens().end()) == tokens);
  CHECK(std::vector<Token>(d.salient_order().begin(), d.salient_order().end()) == salient);
}

TEST_CASE("generated documents satisfy every invariant") {
  const Vocabulary v;
  for (std::uint64_t seed = 0; seed < 500; ++seed) {
    const auto d = generate_document(v, seed);
    const auto toks = d.tokens();
    REQUIRE(toks.size() >= 20);
    REQUIRE(toks.size() <= 60);
    REQUIRE(d.salient_count() >= 3);
    REQUIRE(d.salient_count() <= 8);
    std::set<Token> seen;
    int last_pos = -1;
    for (const Token s : d.salient_order()) {
      REQUIRE(v.is_salient(s));
      REQUIRE(seen.insert(s).second);
      const int pos = d.first_position(s);
      REQUIRE(pos > last_pos);
      last_pos = pos;
    }
    std::set<Token> salient_in_doc;
    for (const Token t : toks) {
      REQUIRE_FALSE(v.is_reserved(t));
      REQUIRE(v.contains(t));
      if (v.is_salient(t)) salient_in_doc.insert(t);
    }
    REQUIRE(salient_in_doc == seen);
  }
}

TEST_CASE("document constructor rejects broken invariants") {
  const Vocabulary v;
  std::vector<Token> toks(25, 30);
  toks[2] = 5;
  toks[4] = 6;
  toks[9] = 7;
  CHECK_NOTHROW(Document(toks, {5, 6, 7}, v));
  CHECK_THROWS_AS(Document(toks, {6, 5, 7}, v), ConfigError);
  CHECK_THROWS_AS(Document(toks, {5, 6}, v), ConfigError);
  auto with_reserved = toks;
  with_reserved[0] = Vocabulary::kEos;
  CHECK_THROWS_AS(Document(with_reserved, {5, 6, 7}, v), ConfigError);
  CHECK_THROWS_AS(Document(std::vector<Token>(10, 30), {}, v), ConfigError);
  CHECK(Document::from_tokens(toks, v) == Document(toks, {5, 6, 7}, v));
}

TEST_CASE("reference summary") {
  const Vocabulary v;
  std::vector<Token> toks(30, 40);
  toks[1] = 10;
  toks[5] = 5;
  toks[20] = 12;
  const auto d = Document::from_tokens(toks, v);
  CHECK(reference_summary(d) == std::vector<Token>{10, 5, 12, Vocabulary::kEos});
  for (std::uint64_t s = 0; s < 50; ++s) {
    const auto g = generate_document(v, s);
    CHECK(reference_summary(g).size() == static_cast<std::size_t>(g.salient_count()) + 1);
  }
}

TEST_CASE("episode config validation") {
  CHECK_NOTHROW((EpisodeConfig{2, 0}.validate()));
  CHECK_THROWS_AS((EpisodeConfig{1, 0}.validate()), ConfigError);
}

TEST_CASE("forced termination and forced truncation") {
  auto doc = std::make_shared<const Document>(generate_document(Vocabulary{}, 3));
  const EpisodeConfig cfg{16, 0};
  {
    const auto p = forced_eos_policy(20.0);
    auto rng = CounterRng::stream(0, StreamTag::Episode, 0);
    const auto t = rollout(p, p, doc, cfg, rng);
    CHECK(t.tokens == std::vector<Token>{Vocabulary::kEos});
    CHECK_FALSE(t.truncated);
  }
  {
    const auto p = forced_eos_policy(-20.0);
    auto rng = CounterRng::stream(0, StreamTag::Episode, 0);
    const auto t = rollout(p, p, doc, cfg, rng);
    CHECK(t.length() == 16);
    CHECK(t.truncated);
    for (const Token tok : t.tokens) CHECK(tok != Vocabulary::kEos);
  }
}

TEST_CASE("recorded log-probabilities replay exactly") {
  const auto policy = PolicyParams::random(PolicyShape{}, 11, 0.5);
  const auto reference = PolicyParams::random(PolicyShape{}, 12, 0.5);
  for (std::uint64_t e = 0; e < 20; ++e) {
    auto doc = std::make_shared<const Document>(generate_document(Vocabulary{}, 100 + e));
    auto rng = CounterRng::stream(5, StreamTag::Episode, e);
    const auto t = rollout(policy, reference, doc, EpisodeConfig{16, 5}, rng);
    REQUIRE(t.length() >= 1);
    REQUIRE(t.length() <= 16);
    CHECK(t.truncated == (t.tokens.back() != Vocabulary::kEos));
    for (std::size_t i = 0; i < t.length(); ++i) {
      const auto prefix = std::span<const Token>(t.tokens).first(i);
      const auto a = static_cast<std::size_t>(t.tokens[i]);
      const auto lp_rl = log_softmax(forward(policy, *doc, prefix, 16).logits);
      const auto lp_ft = log_softmax(forward(reference, *doc, prefix, 16).logits);
      CHECK(std::abs(lp_rl[a] - t.logprobs_rl[i]) <= 1e-12);
      CHECK(std::abs(lp_ft[a] - t.logprobs_ft[i]) <= 1e-12);
    }
  }
}

TEST_CASE("rollouts are deterministic and the reference stream ignores the policy") {
  const auto ref = PolicyParams::random(PolicyShape{}, 1, 0.5);
  const auto pol_a = PolicyParams::random(PolicyShape{}, 2, 0.5);
  auto doc = std::make_shared<const Document>(generate_document(Vocabulary{}, 9));
  auto r1 = CounterRng::stream(0, StreamTag::Episode, 4);
  auto r2 = CounterRng::stream(0, StreamTag::Episode, 4);
  const auto t1 = rollout(pol_a, ref, doc, EpisodeConfig{}, r1);
  const auto t2 = rollout(pol_a, ref, doc, EpisodeConfig{}, r2);
  CHECK(t1.tokens == t2.tokens);
  CHECK(t1.logprobs_rl == t2.logprobs_rl);
  CHECK(t1.values == t2.values);
  for (std::size_t i = 0; i < t1.length(); ++i) {
    const auto lp = log_softmax(forward(ref, *doc, std::span<const Token>(t1.tokens).first(i), 16).logits);
    CHECK(lp[static_cast<std::size_t>(t1.tokens[i])] == t1.logprobs_ft[i]);
  }
}

TEST_CASE("rollout rejects mismatched shapes and non-finite logits") {
  auto doc = std::make_shared<const Document>(generate_document(Vocabulary{}, 9));
  const auto a = PolicyParams::random(PolicyShape{}, 1);
  const auto b = PolicyParams::random(PolicyShape{64, 16, 64, 4}, 1);
  auto rng = CounterRng::stream(0, StreamTag::Episode, 0);
  CHECK_THROWS_AS(rollout(a, b, doc, EpisodeConfig{}, rng), ConfigError);
  auto bad = a;
  bad.flat[bad.layout().b_logits] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(rollout(bad, a, doc, EpisodeConfig{}, rng), NumericalError);
}

}
