#include "mdo/rewards.hpp"

#include <algorithm>
#include <vector>

namespace mdo {

SummaryView SummaryView::of(std::span<const Token> tokens) noexcept {
  if (!tokens.empty() && tokens.back() == Vocabulary::kEos)
    return {tokens.first(tokens.size() - 1), true};
  return {tokens, false};
}

namespace {

double in_document_fraction(const Document& doc, std::span<const Token> content) {
  if (content.empty()) return 1.0;
  const auto hits = std::count_if(content.begin(), content.end(),
                                  [&](Token t) { return doc.contains(t); });
  return static_cast<double>(hits) / static_cast<double>(content.size());
}

double relevance(const Document& doc, std::span<const Token> content) {
  const auto salient = doc.salient_order();
  const auto recalled = std::count_if(salient.begin(), salient.end(), [&](Token s) {
    return std::find(content.begin(), content.end(), s) != content.end();
  });
  return static_cast<double>(recalled) / static_cast<double>(salient.size());
}

double coherence(const Document& doc, std::span<const Token> content) {
  std::vector<int> positions;
  for (const Token t : content) {
    if (const int p = doc.first_position(t); p >= 0) positions.push_back(p);
  }
  if (positions.size() < 2) return 1.0;
  std::size_t ordered = 0;
  for (std::size_t i = 1; i < positions.size(); ++i) ordered += positions[i - 1] <= positions[i];
  return static_cast<double>(ordered) / static_cast<double>(positions.size() - 1);
}

double fluency(SummaryView s) {
  std::size_t repeats = 0;
  for (std::size_t i = 1; i < s.content.size(); ++i) repeats += s.content[i] == s.content[i - 1];
  const auto pairs = std::max<std::size_t>(s.content.size(), 2) - 1;
  const double eos_factor = s.emitted_eos ? 1.0 : 0.5;
  return (1.0 - static_cast<double>(repeats) / static_cast<double>(pairs)) * eos_factor;
}

}  // namespace

DimScores score_dimensions(const Document& doc, SummaryView summary) {
  return {
      .coherence = coherence(doc, summary.content),
      .consistency = in_document_fraction(doc, summary.content),
      .fluency = fluency(summary),
      .relevance = relevance(doc, summary.content),
  };
}

DimScores score_dimensions(const Document& doc, std::span<const Token> summary) {
  return score_dimensions(doc, SummaryView::of(summary));
}

double coverage(const Document& doc, std::span<const Token> summary) {
  return in_document_fraction(doc, SummaryView::of(summary).content);
}

std::size_t summary_length(std::span<const Token> summary) noexcept {
  return SummaryView::of(summary).content.size();
}

}  // namespace mdo
