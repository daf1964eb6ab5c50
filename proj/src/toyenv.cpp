#include "mdo/toyenv.hpp"

#include <algorithm>
#include <numeric>
#include <string>
#include <utility>

#include "mdo/errors.hpp"
#include "mdo/rng.hpp"

namespace mdo {

void Vocabulary::validate() const {
  if (size < 20) throw ConfigError("vocabulary size must be at least 20, got " + std::to_string(size));
  if (salient_first != kEos + 1)
    throw ConfigError("salient range must start right after the reserved ids");
  if (salient_last < salient_first)
    throw ConfigError("salient range is empty");
  if (filler_first != salient_last + 1)
    throw ConfigError("salient and filler ranges must be adjacent and disjoint");
  if (filler_first > filler_last()) throw ConfigError("filler range is empty");
  if (salient_count() < kMaxSalient)
    throw ConfigError("salient range must hold at least " + std::to_string(kMaxSalient) + " ids");
}

Document::Document(std::vector<Token> tokens, std::vector<Token> salient_order,
                   const Vocabulary& vocab)
    : tokens_(std::move(tokens)), salient_order_(std::move(salient_order)) {
  vocab.validate();
  const auto n = static_cast<int>(tokens_.size());
  if (n < kMinDocLength || n > kMaxDocLength)
    throw ConfigError("document length " + std::to_string(n) + " outside [20, 60]");
  const auto k = static_cast<int>(salient_order_.size());
  if (k < kMinSalient || k > kMaxSalient)
    throw ConfigError("salient count " + std::to_string(k) + " outside [3, 8]");

  first_position_.assign(static_cast<std::size_t>(vocab.size), -1);
  for (int i = 0; i < n; ++i) {
    const Token t = tokens_[static_cast<std::size_t>(i)];
    if (!vocab.contains(t) || vocab.is_reserved(t))
      throw ConfigError("document token " + std::to_string(t) + " is reserved or out of range");
    auto& pos = first_position_[static_cast<std::size_t>(t)];
    if (pos < 0) pos = i;
  }
  int previous = -1;
  for (const Token t : salient_order_) {
    if (!vocab.is_salient(t)) throw ConfigError("salient_order holds non-salient id " + std::to_string(t));
    const int pos = first_position(t);
    if (pos < 0) throw ConfigError("salient id " + std::to_string(t) + " does not occur in document");
    if (pos <= previous)
      throw ConfigError("salient_order must be distinct and sorted by first occurrence");
    previous = pos;
  }
}

Document Document::from_tokens(std::vector<Token> tokens, const Vocabulary& vocab) {
  std::vector<Token> order;
  for (const Token t : tokens) {
    if (vocab.is_salient(t) && std::find(order.begin(), order.end(), t) == order.end())
      order.push_back(t);
  }
  return Document(std::move(tokens), std::move(order), vocab);
}

void EpisodeConfig::validate() const {
  if (max_summary_len < 2)
    throw ConfigError("max_summary_len must be at least 2, got " + std::to_string(max_summary_len));
}

Document generate_document(const Vocabulary& vocab, std::uint64_t seed) {
  vocab.validate();
  auto rng = CounterRng::stream(seed, StreamTag::Document);
  const auto length = static_cast<int>(rng.uniform_int(kMinDocLength, kMaxDocLength));
  const auto k = static_cast<std::size_t>(rng.uniform_int(kMinSalient, kMaxSalient));

  std::vector<Token> ids(static_cast<std::size_t>(vocab.salient_count()));
  std::iota(ids.begin(), ids.end(), vocab.salient_first);
  std::vector<int> positions(static_cast<std::size_t>(length));
  std::iota(positions.begin(), positions.end(), 0);
  // Partial Fisher-Yates: the first k slots end up a uniform k-subset.
  for (std::size_t i = 0; i < k; ++i) {
    std::swap(ids[i], ids[i + rng.below(ids.size() - i)]);
    std::swap(positions[i], positions[i + rng.below(positions.size() - i)]);
  }

  std::vector<Token> tokens(static_cast<std::size_t>(length));
  for (auto& t : tokens) t = static_cast<Token>(rng.uniform_int(vocab.filler_first, vocab.filler_last()));
  std::vector<std::pair<int, Token>> placed;
  for (std::size_t i = 0; i < k; ++i) {
    tokens[static_cast<std::size_t>(positions[i])] = ids[i];
    placed.emplace_back(positions[i], ids[i]);
  }
  std::sort(placed.begin(), placed.end());
  std::vector<Token> order;
  for (const auto& [pos, id] : placed) order.push_back(id);
  return Document(std::move(tokens), std::move(order), vocab);
}

std::vector<Token> reference_summary(const Document& doc) {
  std::vector<Token> out(doc.salient_order().begin(), doc.salient_order().end());
  out.push_back(Vocabulary::kEos);
  return out;
}

}  // namespace mdo
