#pragma once

// Synthetic summarization environment. A document is a run of filler tokens
// with a handful of salient tokens scattered through it; the ideal summary
// lists the salient tokens in order of appearance and then stops.

#include <cstdint>
#include <span>
#include <vector>

namespace mdo {

using Token = int;

struct Vocabulary {
  static constexpr Token kPad = 0;
  static constexpr Token kBos = 1;
  static constexpr Token kEos = 2;

  int size = 64;
  Token salient_first = 3;
  Token salient_last = 18;
  Token filler_first = 19;  // filler runs to size - 1

  /// Throws ConfigError unless reserved/salient/filler ranges partition [0, size).
  void validate() const;

  [[nodiscard]] Token filler_last() const noexcept { return size - 1; }
  [[nodiscard]] int salient_count() const noexcept { return salient_last - salient_first + 1; }
  [[nodiscard]] bool is_reserved(Token t) const noexcept { return t >= 0 && t < salient_first; }
  [[nodiscard]] bool is_salient(Token t) const noexcept {
    return t >= salient_first && t <= salient_last;
  }
  [[nodiscard]] bool is_filler(Token t) const noexcept {
    return t >= filler_first && t <= filler_last();
  }
  [[nodiscard]] bool contains(Token t) const noexcept { return t >= 0 && t < size; }
};

inline constexpr int kMinDocLength = 20;
inline constexpr int kMaxDocLength = 60;
inline constexpr int kMinSalient = 3;
inline constexpr int kMaxSalient = 8;

/// Immutable source document with a precomputed first-occurrence index.
class Document {
 public:
  /// Validates every document invariant; throws ConfigError on violation.
  Document(std::vector<Token> tokens, std::vector<Token> salient_order, const Vocabulary& vocab);

  /// Derives salient_order from the salient ids in order of first appearance.
  static Document from_tokens(std::vector<Token> tokens, const Vocabulary& vocab);

  [[nodiscard]] std::span<const Token> tokens() const noexcept { return tokens_; }
  [[nodiscard]] std::span<const Token> salient_order() const noexcept { return salient_order_; }
  [[nodiscard]] int salient_count() const noexcept {
    return static_cast<int>(salient_order_.size());
  }

  /// Position of the first occurrence of t, or -1 when t is absent.
  [[nodiscard]] int first_position(Token t) const noexcept {
    if (t < 0 || static_cast<std::size_t>(t) >= first_position_.size()) return -1;
    return first_position_[static_cast<std::size_t>(t)];
  }
  [[nodiscard]] bool contains(Token t) const noexcept { return first_position(t) >= 0; }

  friend bool operator==(const Document& a, const Document& b) noexcept {
    return a.tokens_ == b.tokens_ && a.salient_order_ == b.salient_order_;
  }

 private:
  std::vector<Token> tokens_;
  std::vector<Token> salient_order_;
  std::vector<int> first_position_;
};

struct EpisodeConfig {
  int max_summary_len = 16;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Deterministic in (vocab, seed).
Document generate_document(const Vocabulary& vocab, std::uint64_t seed);

/// salient_order followed by EOS.
std::vector<Token> reference_summary(const Document& doc);

}  // namespace mdo
