#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>

namespace mixmemb {

/// Counter-based 64-bit generator: the n-th output is mix(key + n * golden).
/// Satisfies UniformRandomBitGenerator so it plugs into <random> distributions.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t key = 0) noexcept : state_(key) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() noexcept {
    state_ += 0x9E3779B97F4A7C15ULL;
    return mix(state_);
  }

  static constexpr std::uint64_t mix(std::uint64_t x) noexcept {
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
  }

 private:
  std::uint64_t state_;
};

/// Stream identifiers for the update blocks of one sweep.
enum class Block : std::uint64_t {
  nu = 1,
  phi,
  chi,
  sigma2,
  tau,
  delta,
  gamma,
  a1,
  a2,
  z,
  pi,
  alpha3,
  tempered_choice,
  tempered_accept,
  prior_draw,
  data_draw,
};

/// Hash an ordered tuple of words into a single stream key.
inline std::uint64_t stream_key(std::initializer_list<std::uint64_t> words) noexcept {
  std::uint64_t h = 0x6A09E667F3BCC909ULL;
  for (std::uint64_t w : words) h = SplitMix64::mix(h ^ SplitMix64::mix(w + 0x9E3779B97F4A7C15ULL));
  return h;
}

/// Generator for (seed, iteration, rung, block). Rung 0 is the untempered
/// sweep; rungs 1..2*N_t are the steps of a tempered transition.
inline SplitMix64 make_stream(std::uint64_t seed, std::uint64_t iteration, std::uint64_t rung,
                              Block block) noexcept {
  return SplitMix64(stream_key({seed, iteration, rung, static_cast<std::uint64_t>(block)}));
}

}  // namespace mixmemb
