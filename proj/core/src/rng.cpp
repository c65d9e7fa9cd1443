#include "sdelab/rng.hpp"

#include <cmath>

namespace sdelab {

namespace {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

inline std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

inline std::uint64_t finalize(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}
} // namespace

std::uint64_t splitmix64(std::uint64_t& state) {
  state += kGolden;
  return finalize(state);
}

std::uint64_t mixSeed(std::uint64_t master, std::uint64_t index) {
  return finalize(finalize(master + (index + 1) * kGolden) ^ index);
}

Rng::Rng(std::uint64_t seed) {
  std::uint64_t sm = seed;
  for (auto& w : s_) w = splitmix64(sm);
}

std::uint64_t Rng::nextU64() {
  const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double Rng::uniform() {
  // 53 random bits shifted by half an ulp keeps 0 out of the support
  return (static_cast<double>(nextU64() >> 11) + 0.5) * 0x1.0p-53;
}

double Rng::normal() {
  if (hasSpare_) {
    hasSpare_ = false;
    return spare_;
  }
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double f = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * f;
  hasSpare_ = true;
  return u * f;
}

double Rng::chiSquared(int nu) {
  double acc = 0.0;
  for (int i = 0; i < nu; ++i) {
    const double z = normal();
    acc += z * z;
  }
  return acc;
}

double Rng::studentT(int nu) {
  const double z = normal();
  return z / std::sqrt(chiSquared(nu) / nu);
}

} // namespace sdelab
