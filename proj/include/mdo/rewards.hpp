#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string_view>

#include "mdo/toyenv.hpp"

namespace mdo {

inline constexpr std::size_t kNumDims = 4;

/// Fixed dimension order used everywhere (value-head channels, CSV columns).
enum class Dim : std::size_t { Coherence = 0, Consistency = 1, Fluency = 2, Relevance = 3 };

inline constexpr std::array<std::string_view, kNumDims> kDimNames = {
    "coherence", "consistency", "fluency", "relevance"};

inline constexpr std::string_view dim_name(Dim d) noexcept {
  return kDimNames[static_cast<std::size_t>(d)];
}

struct DimScores {
  double coherence = 0.0;
  double consistency = 0.0;
  double fluency = 0.0;
  double relevance = 0.0;

  [[nodiscard]] double operator[](Dim d) const noexcept { return as_array()[static_cast<std::size_t>(d)]; }
  [[nodiscard]] std::array<double, kNumDims> as_array() const noexcept {
    return {coherence, consistency, fluency, relevance};
  }
  static DimScores from_array(const std::array<double, kNumDims>& a) noexcept {
    return {a[0], a[1], a[2], a[3]};
  }
  [[nodiscard]] double mean() const noexcept {
    return (coherence + consistency + fluency + relevance) / 4.0;
  }
};

/// Splits a generated token sequence into its content and whether it ended in EOS.
struct SummaryView {
  std::span<const Token> content;
  bool emitted_eos = false;

  static SummaryView of(std::span<const Token> tokens) noexcept;
};

/// Scores a generated sequence; a trailing EOS marks a terminated episode.
DimScores score_dimensions(const Document& doc, std::span<const Token> summary);
DimScores score_dimensions(const Document& doc, SummaryView summary);

/// Fraction of content tokens present in the document; 1.0 when empty.
double coverage(const Document& doc, std::span<const Token> summary);

/// Content-token count, EOS excluded.
std::size_t summary_length(std::span<const Token> summary) noexcept;

}  // namespace mdo
