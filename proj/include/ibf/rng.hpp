#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace ibf {

// splitmix64 finalizer. Bijective on 64-bit words.
constexpr std::uint64_t splitmix64_mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Stream seed for replica `index` under `master`:
//   mix(master + (index + 1) * 0x9E3779B97F4A7C15)   (mod 2^64)
// with mix the splitmix64 finalizer above. Distinct indices give distinct
// pre-images because the increment is odd, and mix is a bijection, so streams
// never collide for a fixed master.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return splitmix64_mix(master + (index + 1) * 0x9E3779B97F4A7C15ULL);
}

// A random stream: mt19937_64 plus a Box-Muller normal generator. The normal
// transform is implemented here rather than via std::normal_distribution so
// draws do not depend on the standard library vendor.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed = 0) : engine_(seed), seed_(seed) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double rad = std::sqrt(-2.0 * std::log(u1));
    const double ang = 6.283185307179586476925 * u2;
    spare_ = rad * std::sin(ang);
    has_spare_ = true;
    return rad * std::cos(ang);
  }

 private:
  std::mt19937_64 engine_;
  std::uint64_t seed_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

inline RngStream replica_stream(std::uint64_t master, std::uint64_t index) {
  return RngStream(derive_seed(master, index));
}

}  // namespace ibf
