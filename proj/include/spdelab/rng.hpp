#pragma once

#include <cmath>
#include <cstdint>

// Counter-based random number generation (Philox4x32-10).
//
// Every normal variate in the library is a pure function of
// (seed, stream, replica, mode, step).  Replicas, modes and steps can be
// evaluated in any order, on any number of threads, and still produce the
// same bits.

namespace spdelab::rng {

enum class Stream : std::uint32_t {
  dynamics = 0,  // Langevin noise increments
  init = 1,      // per-replica initial conditions
  data = 2,      // data synthesis (whitened fluctuation Z)
  sampler = 3,   // exact Gaussian sampler draws
  audit = 4,     // assumption-audit pair sampling
  fernique = 5,  // exponential-moment Monte Carlo
};

struct Block {
  std::uint32_t x[4];
};

inline Block philox4x32(std::uint64_t seed, std::uint32_t c0, std::uint32_t c1,
                        std::uint32_t c2, std::uint32_t c3) {
  constexpr std::uint32_t kMul0 = 0xD2511F53u;
  constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  constexpr std::uint32_t kWey0 = 0x9E3779B9u;
  constexpr std::uint32_t kWey1 = 0xBB67AE85u;

  std::uint32_t k0 = static_cast<std::uint32_t>(seed);
  std::uint32_t k1 = static_cast<std::uint32_t>(seed >> 32);
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * c0;
    const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * c2;
    const std::uint32_t n0 = static_cast<std::uint32_t>(p1 >> 32) ^ c1 ^ k0;
    const std::uint32_t n1 = static_cast<std::uint32_t>(p1);
    const std::uint32_t n2 = static_cast<std::uint32_t>(p0 >> 32) ^ c3 ^ k1;
    const std::uint32_t n3 = static_cast<std::uint32_t>(p0);
    c0 = n0;
    c1 = n1;
    c2 = n2;
    c3 = n3;
    k0 += kWey0;
    k1 += kWey1;
  }
  return Block{{c0, c1, c2, c3}};
}

// Uniform on [0,1) from the first 64 bits of the block.
inline double uniform(std::uint64_t seed, Stream stream, std::uint32_t replica,
                      std::uint32_t mode, std::uint32_t step) {
  const Block b = philox4x32(seed ^ (0x9E3779B97F4A7C15ull *
                                     static_cast<std::uint64_t>(stream)),
                             replica, mode, step, 0u);
  const std::uint64_t u =
      (static_cast<std::uint64_t>(b.x[0]) << 32) | b.x[1];
  return static_cast<double>(u >> 11) * 0x1.0p-53;
}

// One standard normal variate per key (Box-Muller, cosine branch).
inline double normal(std::uint64_t seed, Stream stream, std::uint32_t replica,
                     std::uint32_t mode, std::uint32_t step) {
  const Block b = philox4x32(seed ^ (0x9E3779B97F4A7C15ull *
                                     static_cast<std::uint64_t>(stream)),
                             replica, mode, step, 0u);
  const std::uint64_t a =
      (static_cast<std::uint64_t>(b.x[0]) << 32) | b.x[1];
  const std::uint64_t c =
      (static_cast<std::uint64_t>(b.x[2]) << 32) | b.x[3];
  // u1 in (0,1] so the log is finite; u2 in [0,1).
  const double u1 = static_cast<double>((a >> 11) + 1) * 0x1.0p-53;
  const double u2 = static_cast<double>(c >> 11) * 0x1.0p-53;
  constexpr double two_pi = 6.283185307179586476925286766559;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
}

}  // namespace spdelab::rng
