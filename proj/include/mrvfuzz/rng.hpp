#pragma once

#include <cstdint>
#include <random>

namespace mrvfuzz {

/// mt19937_64 with a fixed bounded-integer mapping. The standard
/// distributions are implementation-defined, and frozen fixtures (seed
/// programs, discovery counters) must not move with the standard library.
class Rng {
 public:
  explicit Rng(uint64_t seed) : eng_(seed) {}

  uint64_t next() { return eng_(); }
  uint32_t next32() { return static_cast<uint32_t>(eng_() >> 32); }

  /// Uniform in [0, n); n > 0. Multiply-shift with rejection (unbiased).
  uint64_t below(uint64_t n) {
    const uint64_t limit = (0 - n) % n;  // 2^64 mod n
    for (;;) {
      const unsigned __int128 m = static_cast<unsigned __int128>(eng_()) * n;
      if (static_cast<uint64_t>(m) >= limit) return static_cast<uint64_t>(m >> 64);
    }
  }

  /// Uniform in [lo, hi].
  int64_t range(int64_t lo, int64_t hi) {
    return lo + static_cast<int64_t>(below(static_cast<uint64_t>(hi - lo) + 1));
  }

  bool coin() { return eng_() >> 63; }

  /// Independent child stream (lane or repetition seeds).
  Rng fork() { return Rng(eng_() ^ 0x9E3779B97F4A7C15ull); }

 private:
  std::mt19937_64 eng_;
};

}  // namespace mrvfuzz
