#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <variant>
#include <vector>

#include "advaug/tensor.hpp"

namespace advaug {

/// Seeded pseudo-random stream.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the C++
/// standard. Everything built on top of it (uniform reals, bounded integers,
/// normals, shuffles) is implemented here rather than through the
/// <random> distributions, which differ between standard libraries. The
/// same seed therefore yields the same bits on every conforming platform.
///
/// Not thread-safe; one stream per consumer.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  /// Independent stream for sub-task `stream` of a run seeded with `root`.
  /// The child seed is a SplitMix64 mix of (root, stream).
  static Rng derive(std::uint64_t root, std::uint64_t stream);

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform in [0, 1) with 53 random mantissa bits.
  double uniform();
  /// Uniform in [lo, hi); requires lo < hi.
  double uniform(double lo, double hi);
  /// Uniform integer in [0, n); unbiased (rejection sampling). Requires n > 0.
  std::uint64_t below(std::uint64_t n);
  /// Standard normal via the Box-Muller transform (no cached second value).
  double normal();

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

struct Uniform {
  double lo = 0.0;
  double hi = 1.0;
};

struct Bernoulli {
  double p = 0.5;
};

using Distribution = std::variant<Uniform, Bernoulli>;

/// rows x cols tensor of independent draws, filled in row-major order.
/// Throws ConfigError unless lo < hi (uniform) or 0 <= p <= 1 (bernoulli).
Tensor draw(Rng& rng, std::size_t rows, std::size_t cols, const Distribution& dist);

/// Uniformly random permutation of 0..n-1 (Fisher-Yates, high index first).
std::vector<std::size_t> permutation(Rng& rng, std::size_t n);

}  // namespace advaug
