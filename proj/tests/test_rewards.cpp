#include <algorithm>

#include "doctest.h"
#include "mdo/rewards.hpp"
#include "mdo/rng.hpp"
#include "mdo/toyenv.hpp"
#include "oracles.hpp"

using namespace mdo;

namespace {

constexpr Token kEos = Vocabulary::kEos;

// Salient order [10, 11, 12]; 12 appears after 10.
Document small_doc() {
  std::vector<Token> toks(24, 40);
  toks[2] = 10;
  toks[7] = 11;
  toks[15] = 12;
  toks[20] = 33;
  return Document::from_tokens(toks, Vocabulary{});
}

std::vector<Token> random_summary(CounterRng& rng, const Document& doc) {
  std::vector<Token> s;
  const auto len = rng.uniform_int(0, 16);
  for (int i = 0; i < len; ++i) {
    if (rng.uniform() < 0.3) {
      s.push_back(doc.salient_order()[rng.below(doc.salient_order().size())]);
    } else if (rng.uniform() < 0.3 && !s.empty()) {
      s.push_back(s.back());
    } else {
      s.push_back(static_cast<Token>(rng.uniform_int(3, 63)));
    }
  }
  if (rng.uniform() < 0.7) s.push_back(kEos);
  return s;
}

}  // namespace

TEST_SUITE("rewards") {

TEST_CASE("reference summaries are perfect") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto d = generate_document(Vocabulary{}, seed);
    const auto s = score_dimensions(d, reference_summary(d));
    CHECK(s.coherence == 1.0);
    CHECK(s.consistency == 1.0);
    CHECK(s.fluency == 1.0);
    CHECK(s.relevance == 1.0);
  }
}

TEST_CASE("out-of-order pair") {
  const auto d = small_doc();
  const auto s = score_dimensions(d, std::vector<Token>{12, 10, kEos});
  CHECK(s.consistency == 1.0);
  CHECK(s.relevance == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(s.coherence == 0.0);
  CHECK(s.fluency == 1.0);
}

TEST_CASE("repeated absent filler, truncated") {
  const auto d = small_doc();
  REQUIRE_FALSE(d.contains(21));
  const auto s = score_dimensions(d, std::vector<Token>{21, 21});
  CHECK(s.consistency == 0.0);
  CHECK(s.relevance == 0.0);
  CHECK(s.coherence == 1.0);
  CHECK(s.fluency == 0.0);
}

TEST_CASE("empty summary conventions") {
  const auto d = small_doc();
  const auto with_eos = score_dimensions(d, std::vector<Token>{kEos});
  CHECK(with_eos.consistency == 1.0);
  CHECK(with_eos.relevance == 0.0);
  CHECK(with_eos.coherence == 1.0);
  CHECK(with_eos.fluency == 1.0);
  const auto nothing = score_dimensions(d, std::vector<Token>{});
  CHECK(nothing.fluency == 0.5);
  CHECK(coverage(d, std::vector<Token>{}) == 1.0);
  CHECK(coverage(d, std::vector<Token>{kEos}) == 1.0);
}

TEST_CASE("coverage and length examples") {
  const auto d = small_doc();
  REQUIRE_FALSE(d.contains(50));
  CHECK(coverage(d, std::vector<Token>{10, 50}) == 0.5);
  CHECK(coverage(d, std::vector<Token>{10, 11, 40}) == 1.0);
  CHECK(summary_length(std::vector<Token>{10, 5, 12, kEos}) == 3);
  CHECK(summary_length(std::vector<Token>{kEos}) == 0);
  CHECK(summary_length(reference_summary(d)) == 3);
}

TEST_CASE("scorers agree with the direct-definition oracle") {
  auto rng = CounterRng::stream(3, StreamTag::Init, 77);
  for (int trial = 0; trial < 2000; ++trial) {
    const auto d = generate_document(Vocabulary{}, rng());
    const auto summary = random_summary(rng, d);
    const bool eos = !summary.empty() && summary.back() == kEos;
    const std::vector<int> content(summary.begin(), summary.end() - (eos ? 1 : 0));
    const auto want = oracle::score(oracle::as_ints(d.tokens()), oracle::as_ints(d.salient_order()),
                                    content, eos);
    const auto got = score_dimensions(d, summary);
    REQUIRE(got.coherence == doctest::Approx(want.coherence).epsilon(1e-15));
    REQUIRE(got.consistency == doctest::Approx(want.consistency).epsilon(1e-15));
    REQUIRE(got.fluency == doctest::Approx(want.fluency).epsilon(1e-15));
    REQUIRE(got.relevance == doctest::Approx(want.relevance).epsilon(1e-15));
    for (const double x : got.as_array()) {
      REQUIRE(x >= 0.0);
      REQUIRE(x <= 1.0);
    }
    REQUIRE(got.consistency == coverage(d, summary));
  }
}

TEST_CASE("relevance is monotone when a missing salient token is appended") {
  auto rng = CounterRng::stream(4, StreamTag::Init, 1);
  for (int trial = 0; trial < 300; ++trial) {
    const auto d = generate_document(Vocabulary{}, rng());
    auto summary = random_summary(rng, d);
    if (!summary.empty() && summary.back() == kEos) summary.pop_back();
    for (const Token s : d.salient_order()) {
      if (std::find(summary.begin(), summary.end(), s) != summary.end()) continue;
      const double before = score_dimensions(d, summary).relevance;
      auto longer = summary;
      longer.push_back(s);
      CHECK(score_dimensions(d, longer).relevance > before);
      break;
    }
  }
}

TEST_CASE("permutation leaves consistency and relevance unchanged") {
  auto rng = CounterRng::stream(5, StreamTag::Init, 1);
  for (int trial = 0; trial < 300; ++trial) {
    const auto d = generate_document(Vocabulary{}, rng());
    auto summary = random_summary(rng, d);
    if (!summary.empty() && summary.back() == kEos) summary.pop_back();
    const auto a = score_dimensions(d, summary);
    rng.shuffle(std::span<Token>(summary));
    const auto b = score_dimensions(d, summary);
    CHECK(a.consistency == b.consistency);
    CHECK(a.relevance == b.relevance);
  }
  const auto d = small_doc();
  CHECK(score_dimensions(d, std::vector<Token>{10, 12, kEos}).coherence == 1.0);
  CHECK(score_dimensions(d, std::vector<Token>{12, 10, kEos}).coherence == 0.0);
}

TEST_CASE("scores do not depend on other documents") {
  const auto d = small_doc();
  const std::vector<Token> s{10, 40, 11, 11, kEos};
  const auto before = score_dimensions(d, s);
  for (std::uint64_t seed = 0; seed < 10; ++seed) (void)generate_document(Vocabulary{}, seed);
  const auto after = score_dimensions(d, s);
  CHECK(before.as_array() == after.as_array());
}

TEST_CASE("summary view strips one trailing EOS") {
  const std::vector<Token> t{10, 11, kEos};
  const auto v = SummaryView::of(t);
  CHECK(v.emitted_eos);
  CHECK(v.content.size() == 2);
  const auto w = SummaryView::of(std::span<const Token>(t).first(2));
  CHECK_FALSE(w.emitted_eos);
}

}
