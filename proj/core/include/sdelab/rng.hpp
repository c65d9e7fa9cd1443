#pragma once

#include <cstdint>

namespace sdelab {

// One splitmix64 round: advances `state` and returns the finalized output.
std::uint64_t splitmix64(std::uint64_t& state);

// Child seed for stream `index` of `master`. Two splitmix64 finalizations of
// master + (index + 1) * golden ratio; pure 64-bit integer arithmetic, so the
// value is identical on every platform.
std::uint64_t mixSeed(std::uint64_t master, std::uint64_t index);

// xoshiro256++ with hand-rolled variate transforms. The standard library
// distributions are implementation-defined, so they are avoided to keep
// trajectories reproducible across toolchains.
class Rng {
public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t nextU64();
  // Uniform on the open interval (0, 1).
  double uniform();
  // Standard normal (Marsaglia polar method, spare value cached).
  double normal();
  // Chi-squared with integer degrees of freedom, as a sum of squared normals.
  double chiSquared(int nu);
  // Standard Student-t: N(0,1) / sqrt(chi2_nu / nu).
  double studentT(int nu);

private:
  std::uint64_t s_[4];
  double spare_ = 0.0;
  bool hasSpare_ = false;
};

} // namespace sdelab
