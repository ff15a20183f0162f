#pragma once

#include <cstdint>
#include <limits>

namespace asmsleep {

// SplitMix64 generator. Small state, so one stream per replication is cheap,
// and substream() gives a counter-based split of a master seed: replication i
// always sees the same draws no matter which thread runs it.
class RandomStream {
 public:
  using result_type = std::uint64_t;

  explicit RandomStream(std::uint64_t seed) noexcept : state_(seed) {}

  static RandomStream substream(std::uint64_t master_seed,
                                std::uint64_t index) noexcept {
    return RandomStream(mix(master_seed ^ mix(index + 0x632be59bd9b4e019ULL)));
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() noexcept {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix(state_);
  }

  // Uniform on the open interval (0, 1), 53 random bits.
  double uniform() noexcept {
    return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
  }

 private:
  static constexpr std::uint64_t mix(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t state_;
};

}  // namespace asmsleep
