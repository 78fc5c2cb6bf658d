#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <string_view>

namespace fracheat {

// Deterministic, platform-independent PRNG (splitmix64).
struct SplitMix64 {
  std::uint64_t state;

  explicit SplitMix64(std::uint64_t seed) : state(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  double next_double() {  // uniform in [0,1)
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }
};

inline std::uint64_t hash_name(std::string_view s, std::uint64_t seed) {
  std::uint64_t h = seed ^ 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Additive (Kronecker) low-discrepancy sequence in up to 6 dimensions.
// Prefix-nested: the first N points of a longer run are the same as a run
// of length N, which is what makes sample-doubling stability checks nest.
class LowDiscrepancy {
 public:
  LowDiscrepancy(int dims, std::uint64_t seed) : dims_(dims), k_(0) {
    static constexpr double irr[6] = {
        0.6180339887498949,   // frac(phi)
        0.4142135623730951,   // frac(sqrt 2)
        0.7320508075688772,   // frac(sqrt 3)
        0.2360679774997896,   // frac(sqrt 5)
        0.6457513110645906,   // frac(sqrt 7)
        0.3166247903553998};  // frac(sqrt 10)
    SplitMix64 rng(seed);
    for (int i = 0; i < 6; ++i) {
      alpha_[i] = irr[i];
      offset_[i] = rng.next_double();
    }
  }

  std::array<double, 6> next() {
    ++k_;
    std::array<double, 6> p{};
    for (int i = 0; i < dims_; ++i) {
      double v = offset_[i] + k_ * alpha_[i];
      p[i] = v - static_cast<std::uint64_t>(v);
    }
    return p;
  }

  int dims() const { return dims_; }

 private:
  int dims_;
  std::uint64_t k_;
  std::array<double, 6> alpha_{}, offset_{};
};

}  // namespace fracheat
