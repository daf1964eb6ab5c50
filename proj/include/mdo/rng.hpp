#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <utility>

namespace mdo {

/// SplitMix64 finalizer; a bijective 64-bit mixer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Named purposes for independent random streams.
enum class StreamTag : std::uint64_t {
  Document = 0x646f63,
  Init = 0x696e6974,
  Episode = 0x657069,
  BatchOrder = 0x6261746368,
  Projection = 0x70726f6a,
  Pretrain = 0x707265,
};

/// Counter-based generator: the n-th draw is a pure function of (key, n).
///
/// Streams are derived from a global seed by hashing in a tag and an index,
/// so any number of independent streams (one per episode, one per shuffle)
/// can be created without sharing state. Satisfies UniformRandomBitGenerator.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit constexpr CounterRng(std::uint64_t key) noexcept : key_(key) {}

  static constexpr CounterRng stream(std::uint64_t seed, StreamTag tag,
                                     std::uint64_t index = 0) noexcept {
    return CounterRng(mix64(mix64(seed ^ 0x6d646f5f72756e00ULL) ^
                            mix64(static_cast<std::uint64_t>(tag)) ^
                            mix64(index + 0x9e3779b97f4a7c15ULL)));
  }

  /// Child stream; does not advance this one.
  [[nodiscard]] constexpr CounterRng split(std::uint64_t index) const noexcept {
    return CounterRng(mix64(key_ ^ mix64(index * 0xd1b54a32d192ed03ULL + 1)));
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  constexpr result_type operator()() noexcept {
    ++counter_;
    return mix64(key_ + counter_ * 0x9e3779b97f4a7c15ULL);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  constexpr double uniform() noexcept {
    return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
  }

  /// Uniform double in [lo, hi).
  constexpr double uniform(double lo, double hi) noexcept {
    return lo + (hi - lo) * uniform();
  }

  /// Unbiased integer in [0, n); n must be positive.
  constexpr std::uint64_t below(std::uint64_t n) noexcept {
    const std::uint64_t limit = max() - max() % n;
    std::uint64_t x = (*this)();
    while (x >= limit) x = (*this)();
    return x % n;
  }

  /// Uniform integer in the closed range [lo, hi].
  constexpr std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) noexcept {
    return lo + static_cast<std::int64_t>(below(static_cast<std::uint64_t>(hi - lo) + 1));
  }

  template <typename T>
  constexpr void shuffle(std::span<T> items) noexcept {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

  [[nodiscard]] constexpr std::uint64_t key() const noexcept { return key_; }
  [[nodiscard]] constexpr std::uint64_t draws() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace mdo
