#pragma once

#include <cmath>
#include <cstdint>

// Counter-based RNG with cheap key splitting.
//
// Every stochastic component derives its own Stream from a StreamKey, so
// per-particle / per-trajectory work is reproducible bit-for-bit no matter
// how the surrounding loop is scheduled. Keys form a tree: child(tag) hashes
// the tag into the key, stream() turns a key into a generator.
//
// std::mt19937_64 is deliberately not used here: constructing one generator
// per particle per step would dominate the filter runtime, and the standard
// distributions are not bit-portable across library implementations.

namespace gpoid::rng {

inline std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xbf58476d1ce4e5b9ULL;
  z ^= z >> 27;
  z *= 0x94d049bb133111ebULL;
  z ^= z >> 31;
  return z;
}

// splitmix64 sequence generator.
class Stream {
 public:
  explicit Stream(std::uint64_t state) : state_(state) {}

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix64(state_);
  }

  // uniform on [0, 1), 53-bit resolution
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // uniform on (0, 1], safe for log()
  double uniform_pos() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  // Box-Muller; consumes exactly two uniforms per call
  double normal() {
    const double u1 = uniform_pos();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

 private:
  std::uint64_t state_;
};

class StreamKey {
 public:
  explicit StreamKey(std::uint64_t seed) : key_(mix64(seed ^ 0x632be59bd9b4e019ULL)) {}

  StreamKey child(std::uint64_t tag) const {
    StreamKey k(0);
    k.key_ = mix64(key_ ^ (0x9e3779b97f4a7c15ULL * (tag + 1)));
    return k;
  }

  Stream stream() const { return Stream(key_); }

  std::uint64_t value() const { return key_; }

 private:
  std::uint64_t key_;
};

}  // namespace gpoid::rng
