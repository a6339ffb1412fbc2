#include "papercast/common/rng.hpp"

#include "papercast/common/io.hpp"

namespace papercast {

Rng::Rng(std::uint64_t seed, std::string_view salt)
    : engine_(seed ^ stable_hash(salt)) {}

int Rng::uniform_int(int lo, int hi) {
  if (hi <= lo) return lo;
  auto span = static_cast<std::uint64_t>(hi - lo) + 1;
  return lo + static_cast<int>(engine_() % span);
}

double Rng::unit() {
  return static_cast<double>(engine_() >> 11) * (1.0 / 9007199254740992.0);
}

}  // namespace papercast
