#pragma once

// Counter-based random streams.
//
// Every draw is a pure function of (stream key, counter): the n-th output of
// a stream is the SplitMix64 finalizer applied to key + (n + 1) * gamma.
// Stream keys are derived from (seed, item id, purpose, substream) by chained
// mixing, so streams for different items or purposes never overlap in any
// practical sense and do not depend on evaluation order. Uniform doubles use
// the top 53 bits, which keeps results bit-identical on any IEEE-754 platform.

#include <cmath>
#include <cstdint>

namespace tsg {

enum class Purpose : std::uint64_t {
  kEstimation = 1,
  kEvaluation = 2,
  kCelf = 3,
  kTest = 4,
  kGeneration = 5,
  kSplit = 6,
  kVerify = 7,
  kCurvature = 8,
};

namespace detail {

inline constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t combine(std::uint64_t key, std::uint64_t value) noexcept {
  // The key passes through one more mixing round than the value, so
  // combine(mix(a), b) and combine(mix(b), a) differ.
  return mix64(mix64(key) ^ mix64(value + kGamma));
}

}  // namespace detail

/// Derives the key of a named stream.
constexpr std::uint64_t stream_key(std::uint64_t seed, std::uint64_t item_id, Purpose purpose,
                                   std::uint64_t substream = 0) noexcept {
  std::uint64_t key = detail::mix64(seed + detail::kGamma);
  key = detail::combine(key, item_id);
  key = detail::combine(key, static_cast<std::uint64_t>(purpose));
  key = detail::combine(key, substream);
  return key;
}

/// Derives a child seed, e.g. per (experiment cell, instance index).
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) noexcept {
  return detail::combine(detail::combine(detail::mix64(seed), a), b);
}

class RandomStream {
 public:
  using result_type = std::uint64_t;

  constexpr explicit RandomStream(std::uint64_t key, std::uint64_t counter = 0) noexcept
      : key_(key), counter_(counter) {}

  RandomStream(std::uint64_t seed, std::uint64_t item_id, Purpose purpose, std::uint64_t substream = 0) noexcept
      : key_(stream_key(seed, item_id, purpose, substream)) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return ~result_type{0}; }

  constexpr result_type operator()() noexcept { return at(counter_++); }

  /// Output at an absolute position, without advancing.
  constexpr result_type at(std::uint64_t position) const noexcept {
    return detail::mix64(key_ + (position + 1) * detail::kGamma);
  }

  /// Uniform in [0, 1).
  double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, bound) by rejection; bound > 0.
  std::uint64_t below(std::uint64_t bound) noexcept {
    const std::uint64_t limit = max() - max() % bound;
    std::uint64_t x;
    do {
      x = (*this)();
    } while (x >= limit);
    return x % bound;
  }

  constexpr std::uint64_t key() const noexcept { return key_; }
  constexpr std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace tsg
