#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "mdo/rewards.hpp"
#include "mdo/toyenv.hpp"

namespace mdo {

/// Row-major [steps x channels] table of per-step, per-channel values.
class StepMatrix {
 public:
  StepMatrix() = default;
  StepMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
  [[nodiscard]] std::size_t cols() const noexcept { return cols_; }
  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }
  [[nodiscard]] std::span<double> row(std::size_t r) noexcept {
    return std::span<double>(data_).subspan(r * cols_, cols_);
  }
  [[nodiscard]] std::span<const double> row(std::size_t r) const noexcept {
    return std::span<const double>(data_).subspan(r * cols_, cols_);
  }
  [[nodiscard]] std::vector<double> column(std::size_t c) const {
    std::vector<double> out(rows_);
    for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
    return out;
  }
  void set_column(std::size_t c, std::span<const double> values) noexcept {
    for (std::size_t r = 0; r < rows_; ++r) (*this)(r, c) = values[r];
  }
  [[nodiscard]] std::span<const double> data() const noexcept { return data_; }

  friend bool operator==(const StepMatrix&, const StepMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// One generated summary episode. Step t is the state (doc, tokens[0..t)) and
/// action tokens[t]; per-step arrays all have length() rows.
struct Trajectory {
  std::size_t doc_id = 0;
  std::shared_ptr<const Document> doc;
  std::vector<Token> tokens;
  std::vector<double> logprobs_rl;
  std::vector<double> logprobs_ft;
  StepMatrix values;  // value-head prediction per channel
  DimScores dim_scores;
  std::vector<double> terminal_rewards;  // one per channel
  StepMatrix shaped_rewards;
  StepMatrix advantages;
  StepMatrix returns;
  bool truncated = false;
  int horizon = 16;

  [[nodiscard]] std::size_t length() const noexcept { return tokens.size(); }
  [[nodiscard]] std::size_t channels() const noexcept { return values.cols(); }
};

}  // namespace mdo
