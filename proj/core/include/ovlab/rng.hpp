#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace ovlab {

// Seeded generator with platform-independent derived distributions.
//
// std::normal_distribution and std::shuffle are implementation-defined, so
// traces would differ between standard libraries. Only the raw mt19937_64
// stream is specified by the standard; everything here is derived from it.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n), unbiased by rejection.
  std::size_t below(std::size_t n);

  double normal();

  // Exponential(1), used for Dirichlet(1) simplex draws.
  double exponential();

  template <typename T>
  void shuffle(std::span<T> values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      std::size_t j = below(i);
      std::swap(values[i - 1], values[j]);
    }
  }

  template <typename T>
  void shuffle(std::vector<T>& values) {
    shuffle(std::span<T>(values));
  }

  std::vector<std::size_t> permutation(std::size_t n);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Mixes a base seed with a stream tag so per-epoch and per-member streams do
// not overlap (splitmix64 finalizer).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

}  // namespace ovlab
