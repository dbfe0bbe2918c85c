#ifndef GR3DKIT_RNG_H_
#define GR3DKIT_RNG_H_

#include <cstdint>
#include <random>
#include <string_view>

namespace gr3dkit {

// Platform-independent draws on top of std::mt19937_64. The standard
// distributions are implementation-defined, so byte-identical outputs
// across standard libraries need these instead.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform in [0, 1) with 53 random bits.
  double uniform01();
  // Uniform in [lo, hi).
  double uniform(double lo, double hi);
  // Uniform integer in [0, bound); bound > 0.
  std::uint64_t below(std::uint64_t bound);

  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t fnv1a64(std::string_view bytes);

// Child seed for a named/indexed sub-stream of `seed`.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view key);
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace gr3dkit

#endif  // GR3DKIT_RNG_H_
