#pragma once

#include <cstdint>
#include <limits>
#include <string_view>

namespace hsn {

/// Stafford's variant-13 64-bit finalizer (the SplitMix64 output function).
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/**
 * Counter-based generator: the k-th output is a keyed hash of k, so a stream is
 * fully described by (key, counter) and can be copied, skipped or replayed.
 * Satisfies UniformRandomBitGenerator.
 */
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t key, std::uint64_t counter = 0) noexcept
      : key_(key), counter_(counter) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    const std::uint64_t x = key_ + 0x9e3779b97f4a7c15ULL * (++counter_);
    return mix64(mix64(x) ^ (key_ >> 32 | key_ << 32));
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform01() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  void discard(std::uint64_t n) noexcept { counter_ += n; }

  std::uint64_t key() const noexcept { return key_; }
  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_;
};

/// Child seed for a named purpose ("theta", "stream", "shuffle", ...) and an index
/// (replication, shard). Distinct (purpose, index) pairs give independent keys.
std::uint64_t derive_seed(std::uint64_t parent, std::string_view purpose, std::uint64_t index = 0);

/// 64-bit FNV-1a over bytes.
std::uint64_t fnv1a64(std::string_view bytes) noexcept;

}  // namespace hsn
