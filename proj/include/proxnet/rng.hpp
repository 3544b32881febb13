#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "proxnet/common.hpp"

namespace proxnet {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) {
  return splitmix64(a ^ splitmix64(b + 0x632be59bd9b4e019ULL));
}

/// Sub-seed of one agent under a master seed.
inline std::uint64_t agent_seed(std::uint64_t master, std::uint64_t agent) {
  return hash_combine(master, agent);
}

/// Seeded 64-bit stream. Bounded integers use a multiply-shift reduction so
/// draws are identical across standard libraries.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform in [0, n).
  Index below(Index n) {
    const unsigned __int128 wide = static_cast<unsigned __int128>(engine_()) *
                                   static_cast<unsigned __int128>(static_cast<std::uint64_t>(n));
    return static_cast<Index>(wide >> 64);
  }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Standard normal via Box-Muller.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    constexpr double two_pi = 6.283185307179586476925286766559;
    spare_ = r * std::sin(two_pi * u2);
    has_spare_ = true;
    return r * std::cos(two_pi * u2);
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// The stream owned by (agent, iteration) under a master seed.
inline RngStream stream_for(std::uint64_t master, std::uint64_t agent, std::uint64_t iteration) {
  return RngStream(hash_combine(agent_seed(master, agent), iteration));
}

}  // namespace proxnet
