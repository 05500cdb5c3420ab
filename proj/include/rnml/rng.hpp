#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>

#include "rnml/errors.hpp"

namespace rnml {

inline std::uint64_t split_mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Hashes a master seed together with context words into a stream seed.
/// Streams for distinct contexts are independent of the order in which the
/// program happens to consume them.
inline std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = split_mix64(master ^ 0x6a09e667f3bcc909ULL);
  for (std::uint64_t p : parts) h = split_mix64(h ^ split_mix64(p));
  return h;
}

/// Deterministic sampler. The raw mt19937_64 sequence is pinned by the
/// standard, and every transform below is spelled out here, so identical seeds
/// give identical draws on any conforming platform. The std distribution
/// objects are avoided on purpose: their mappings are implementation defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  /// Uniform draw in (0, 1].
  double uniform01() {
    return ((gen_() >> 11) + 1.0) * 0x1.0p-53;
  }

  /// Standard normal via the Box-Muller transform.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform01();
    double u2 = uniform01();
    double r = std::sqrt(-2.0 * std::log(u1));
    double t = 2.0 * kPi * u2;
    spare_ = r * std::sin(t);
    has_spare_ = true;
    return r * std::cos(t);
  }

  /// Uniform integer in [0, n). Rejection keeps the draw unbiased.
  std::size_t uniform_index(std::size_t n) {
    if (n == 0) throw DomainError("Rng::uniform_index: empty range");
    const std::uint64_t limit = (UINT64_MAX / n) * n;
    std::uint64_t x = gen_();
    while (x >= limit) x = gen_();
    return static_cast<std::size_t>(x % n);
  }

  /// Index draw by CDF inversion over nonnegative weights summing to ~1.
  int categorical(std::span<const double> weights) {
    if (weights.empty()) throw DomainError("Rng::categorical: empty weight vector");
    double u = uniform01();
    double acc = 0.0;
    for (std::size_t k = 0; k < weights.size(); ++k) {
      acc += weights[k];
      if (u <= acc) return static_cast<int>(k);
    }
    return static_cast<int>(weights.size() - 1);
  }

 private:
  static constexpr double kPi = 3.14159265358979323846;
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace rnml
