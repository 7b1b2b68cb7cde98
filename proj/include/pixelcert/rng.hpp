// Deterministic, stream-splittable pseudo-randomness. Every consumer derives
// its own stream from (master_seed, stream_id), so results never depend on
// thread scheduling or evaluation order.
#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace pixelcert {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t master_seed, std::uint64_t stream_id) {
  std::uint64_t state = master_seed;
  std::uint64_t a = splitmix64(state);
  state = a ^ stream_id;
  std::uint64_t b = splitmix64(state);
  return splitmix64(state) ^ b;
}

}  // namespace detail

// One reproducible random stream. Instances are single-owner; to use the
// same logical stream elsewhere, reconstruct it from (master_seed, stream_id).
// Normal variates come from Box-Muller over the engine's uniforms, so the
// sequence is fixed by the standard-specified mt19937_64 alone.
class RngStream {
 public:
  RngStream(std::uint64_t master_seed, std::uint64_t stream_id)
      : engine_(detail::mix_seed(master_seed, stream_id)) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53-bit resolution.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Standard normal draw.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1], keeps log() finite
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  // Uniform integer in [0, bound). Rejection sampling, no modulo bias.
  std::uint64_t below(std::uint64_t bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
      const std::uint64_t x = engine_();
      if (x >= threshold) return x % bound;
    }
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i)
      std::swap(v[i - 1], v[static_cast<std::size_t>(below(i))]);
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace pixelcert
