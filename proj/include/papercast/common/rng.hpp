#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace papercast {

// Deterministic generator whose outputs do not depend on the standard
// library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  Rng(std::uint64_t seed, std::string_view salt);

  std::uint64_t next() { return engine_(); }
  // Uniform integer in [lo, hi].
  int uniform_int(int lo, int hi);
  // Uniform real in [0, 1).
  double unit();
  double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }
  bool chance(double p) { return unit() < p; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace papercast
