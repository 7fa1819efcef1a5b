#pragma once

#include <cstdint>
#include <limits>
#include <random>

namespace lrdhom {

// SplitMix64 finalizer (Steele, Lea & Flood). Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

/// Counter-based stream: the k-th output is mix64(key + (k+1)*golden).
///
/// Streams are addressed by a 64-bit key, so any (master, experiment,
/// replicate) triple maps to its own sequence without shared state. Satisfies
/// UniformRandomBitGenerator and can drive the <random> distributions.
class CounterStream {
 public:
  using result_type = std::uint64_t;

  constexpr explicit CounterStream(std::uint64_t key) noexcept : key_(key) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  constexpr result_type operator()() noexcept {
    ++counter_;
    return mix64(key_ + counter_ * kGolden);
  }

  constexpr std::uint64_t key() const noexcept { return key_; }
  constexpr std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Key for replicate `replicate` of experiment `experiment` under `master`.
constexpr std::uint64_t stream_key(std::uint64_t master, std::uint64_t experiment,
                                   std::uint64_t replicate) noexcept {
  std::uint64_t h = mix64(master + kGolden);
  h = mix64(h ^ (experiment + 2 * kGolden));
  h = mix64(h ^ (replicate + 3 * kGolden));
  return h;
}

/// Standard normal source over a CounterStream.
class NormalSource {
 public:
  explicit NormalSource(std::uint64_t key) : stream_(key) {}
  double operator()() { return dist_(stream_); }
  double uniform() {
    return static_cast<double>(stream_() >> 11) * 0x1.0p-53;
  }

 private:
  CounterStream stream_;
  std::normal_distribution<double> dist_{0.0, 1.0};
};

}  // namespace lrdhom
