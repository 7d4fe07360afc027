#pragma once

#include <cmath>
#include <cstdint>

namespace raschkit::rng {

// Counter-based random streams. A Key names a stream; every draw is a pure
// function of (key, counter), so results do not depend on evaluation order
// or thread schedule. Streams for distinct purposes are separated by tags.

/// splitmix64 finalizer, the mixing primitive behind all streams.
constexpr std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

struct Key {
  std::uint64_t state = 0;
};

constexpr Key derive(Key k, std::uint64_t part) {
  return Key{mix(k.state ^ mix(part))};
}

/// Folds seed and any number of integer parts into a stream key.
template <typename... Parts>
constexpr Key key_of(std::uint64_t seed, Parts... parts) {
  Key k{mix(seed)};
  ((k = derive(k, static_cast<std::uint64_t>(parts))), ...);
  return k;
}

// Stream tags. One tag per purpose so streams never collide.
enum Tag : std::uint64_t {
  tag_theta_draw = 1,
  tag_b_draw = 2,
  tag_bernoulli = 3,
  tag_missing = 4,
  tag_shuffle = 5,
  tag_vi_step = 6,
  tag_split = 7,
  tag_fit_vi_vague = 8,
  tag_fit_vi_hier = 9,
};

namespace detail {
constexpr std::uint64_t word(Key k, std::uint64_t counter) {
  return mix(k.state ^ mix(counter ^ 0x5851f42d4c957f2dULL));
}
}  // namespace detail

/// Uniform draw in [0, 1).
inline double uniform(Key k, std::uint64_t counter = 0) {
  return static_cast<double>(detail::word(k, counter) >> 11) * 0x1.0p-53;
}

/// Standard normal draw (Box-Muller; consumes sub-counters 2c and 2c+1).
inline double normal(Key k, std::uint64_t counter = 0) {
  // u1 in (0, 1] so the log is finite.
  const double u1 =
      static_cast<double>((detail::word(k, 2 * counter) >> 11) + 1) * 0x1.0p-53;
  const double u2 =
      static_cast<double>(detail::word(k, 2 * counter + 1) >> 11) * 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * 3.14159265358979323846 * u2);
}

inline bool bernoulli(Key k, std::uint64_t counter, double p) {
  return uniform(k, counter) < p;
}

/// Uniform integer in [0, n) via multiply-shift reduction.
inline std::uint64_t below(Key k, std::uint64_t counter, std::uint64_t n) {
  return static_cast<std::uint64_t>(
      (static_cast<unsigned __int128>(detail::word(k, counter)) * n) >> 64);
}

}  // namespace raschkit::rng
