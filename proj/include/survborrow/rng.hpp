#pragma once

#include <cstdint>
#include <random>

namespace survborrow {

// splitmix64; used to derive independent substream seeds from a master seed
// by a counter construction.
inline std::uint64_t mix_seed(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  return mix_seed(master ^ mix_seed(stream));
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  double uniform() {
    // open interval (0, 1); endpoints break inverse-cdf sampling
    double u;
    do {
      u = unif_(gen_);
    } while (u <= 0.0 || u >= 1.0);
    return u;
  }

  double normal() { return norm_(gen_); }

  bool bernoulli(double p) { return unif_(gen_) < p; }

  // uniform integer in [0, n)
  std::size_t index(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(gen_);
  }

  std::mt19937_64& engine() { return gen_; }

 private:
  std::mt19937_64 gen_;
  std::uniform_real_distribution<double> unif_{0.0, 1.0};
  std::normal_distribution<double> norm_{0.0, 1.0};
};

}  // namespace survborrow
