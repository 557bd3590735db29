#pragma once

#include <cstdint>

namespace cshift {

/// SplitMix64 output function (Steele, Lea & Flood). Used both to derive
/// stream keys and as the counter-to-output map of CounterStream.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline constexpr std::uint64_t kGoldenGamma = 0x9e3779b97f4a7c15ull;

/// Key for element `index` of stream `stream_id` under `seed`. Every random
/// quantity in the library is drawn from a CounterStream built on one of
/// these keys, so draw `index` never depends on how many other indices were
/// generated before it or on which thread generated them.
constexpr std::uint64_t stream_key(std::uint64_t seed, std::uint64_t stream_id,
                                   std::uint64_t index) noexcept {
  std::uint64_t k = mix64(seed + kGoldenGamma);
  k = mix64(k ^ (stream_id * 0xd1b54a32d192ed03ull + 0x8bb84b93962eacc9ull));
  k = mix64(k ^ (index * 0xaef17502108ef2d9ull + 0xdb4f0b9175ae2165ull));
  return k;
}

/// Counter-based generator: output j is mix64(key + (j + 1) * gamma).
class CounterStream {
 public:
  explicit constexpr CounterStream(std::uint64_t key) noexcept : key_(key) {}
  constexpr CounterStream(std::uint64_t seed, std::uint64_t stream_id,
                          std::uint64_t index) noexcept
      : key_(stream_key(seed, stream_id, index)) {}

  constexpr std::uint64_t next_u64() noexcept {
    ++counter_;
    return mix64(key_ + counter_ * kGoldenGamma);
  }

  /// Uniform on the open interval (0, 1) with 53 random bits.
  double next_uniform() noexcept {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal (ziggurat).
  double next_normal() noexcept;

  // UniformRandomBitGenerator interface over next_u64.
  using result_type = std::uint64_t;
  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return ~result_type{0}; }
  constexpr result_type operator()() noexcept { return next_u64(); }

  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

// Stream ids reserved by the library. User-facing stream ids are offset
// past these so they never alias.
namespace streams {
inline constexpr std::uint64_t kTargets = 0x7a7a0001ull;
inline constexpr std::uint64_t kIntensityMc = 0x7a7a0002ull;
inline constexpr std::uint64_t kIntensityPilot = 0x7a7a0003ull;
inline constexpr std::uint64_t kClassifierInit = 0x7a7a0004ull;
}  // namespace streams

}  // namespace cshift
