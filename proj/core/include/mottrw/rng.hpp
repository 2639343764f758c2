#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>

namespace mottrw {

inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

constexpr std::uint64_t splitmix64(std::uint64_t z) {
  z += kGolden;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Order-sensitive key derivation; every argument changes the result.
constexpr std::uint64_t mix_key(std::uint64_t seed, std::uint64_t a,
                                std::uint64_t b = 0, std::uint64_t c = 0) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ a);
  h = splitmix64(h ^ (b + 0x632be59bd9b4e019ULL));
  h = splitmix64(h ^ (c + 0x85157af5ULL));
  return h;
}

// 53-bit uniform on [0,1).
inline double to_unit(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

// SplitMix64 sequence started from a derived key. Cheap to construct, used
// for index-keyed environment draws.
class KeyedStream {
 public:
  using result_type = std::uint64_t;
  explicit KeyedStream(std::uint64_t key) : state_(key) {}
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }
  result_type operator()() {
    state_ += kGolden;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

// Walker streams: one engine per (seed, replica, purpose).
using Engine = std::mt19937_64;

inline Engine make_engine(std::uint64_t seed, std::uint64_t replica,
                          std::uint64_t purpose = 0) {
  return Engine(mix_key(seed, replica, purpose));
}

template <class G>
double uniform01(G& g) {
  return to_unit(static_cast<std::uint64_t>(g()));
}

// Open interval (0,1); safe for logarithms.
template <class G>
double uniform_open(G& g) {
  double u;
  do {
    u = uniform01(g);
  } while (u == 0.0);
  return u;
}

template <class G>
double exponential(G& g, double rate) {
  return -std::log(uniform_open(g)) / rate;
}

// Geometric on {1,2,...} with success probability p, returned as double so
// astronomically small p does not overflow.
template <class G>
double geometric_trials(G& g, double p) {
  if (p >= 1.0) return 1.0;
  const double u = uniform_open(g);
  return std::ceil(std::log(u) / std::log1p(-p));
}

}  // namespace mottrw
