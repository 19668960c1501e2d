#include "advaug/rng.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

#include "advaug/error.hpp"

namespace advaug {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

Rng Rng::derive(std::uint64_t root, std::uint64_t stream) {
  return Rng(splitmix64(splitmix64(root) ^ stream));
}

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double Rng::uniform(double lo, double hi) {
  const double v = lo + (hi - lo) * uniform();
  // Rounding can land exactly on hi; keep the interval half-open.
  return v < hi ? v : std::nextafter(hi, lo);
}

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) throw UsageError("Rng::below requires n > 0");
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  std::uint64_t v;
  do {
    v = engine_();
  } while (v >= limit);
  return v % n;
}

double Rng::normal() {
  // 1 - u lies in (0, 1], so the log is finite.
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Tensor draw(Rng& rng, std::size_t rows, std::size_t cols, const Distribution& dist) {
  Tensor out(rows, cols);
  if (const auto* u = std::get_if<Uniform>(&dist)) {
    if (!(u->lo < u->hi)) throw ConfigError("uniform distribution requires lo < hi");
    for (double& v : out.data()) v = rng.uniform(u->lo, u->hi);
  } else {
    const double p = std::get<Bernoulli>(dist).p;
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("bernoulli probability must lie in [0, 1]");
    for (double& v : out.data()) v = rng.uniform() < p ? 1.0 : 0.0;
  }
  return out;
}

std::vector<std::size_t> permutation(Rng& rng, std::size_t n) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), std::size_t{0});
  for (std::size_t i = n; i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.below(i));
    std::swap(p[i - 1], p[j]);
  }
  return p;
}

}  // namespace advaug
