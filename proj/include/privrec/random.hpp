#pragma once

#include <gmpxx.h>

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>

namespace privrec {

/// Mixes words into a well-distributed 64-bit value (splitmix64 finalizer).
/// Used to derive independent sub-stream seeds from (seed, indices...).
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t seed) { return mix64(seed); }

template <class... Rest>
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t head, Rest... rest) {
  return mix_seed(mix64(seed ^ mix64(head)), static_cast<std::uint64_t>(rest)...);
}

/// Deterministic randomness source shared by the numeric and big-integer
/// code paths. Seeded construction gives reproducible streams; the
/// entropy-backed constructor serves the same interface for production
/// use. Not copyable: pass by reference and derive sub-streams with
/// mix_seed where independent deterministic streams are needed.
class Randomness {
 public:
  explicit Randomness(std::uint64_t seed)
      : seed_(seed), engine_(seed), gmp_(gmp_randinit_mt) {
    gmp_.seed(static_cast<unsigned long>(mix64(seed ^ 0xABCDEF0123456789ULL)));
  }

  static Randomness from_entropy() {
    std::random_device rd;
    std::uint64_t s = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
    return Randomness(s);
  }

  Randomness(const Randomness&) = delete;
  Randomness& operator=(const Randomness&) = delete;

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform integer in [0, n), exact via rejection sampling.
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) return 0;
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t v;
    do {
      v = engine_();
    } while (v >= limit);
    return v % n;
  }

  double uniform(double lo, double hi) {
    // 53 random bits -> [0,1)
    const double u =
        static_cast<double>(engine_() >> 11) * (1.0 / 9007199254740992.0);
    return lo + u * (hi - lo);
  }

  double gaussian(double mean, double sd) {
    // Box-Muller on two uniform draws; deterministic across platforms.
    double u1 = uniform(1e-300, 1.0);
    double u2 = uniform(0.0, 1.0);
    return mean + sd * std::sqrt(-2.0 * std::log(u1)) *
                      std::cos(6.283185307179586476925286766559 * u2);
  }

  /// Uniform big integer in [0, bound).
  mpz_class mpz_below(const mpz_class& bound) { return gmp_.get_z_range(bound); }

  /// Uniform big integer with exactly `bits` random bits.
  mpz_class mpz_bits(unsigned long bits) { return gmp_.get_z_bits(bits); }

  std::mt19937_64& engine() { return engine_; }

  /// Deterministic Fisher-Yates shuffle (independent of std::shuffle's
  /// implementation-defined draws).
  template <class Container>
  void shuffle(Container& c) {
    for (std::size_t i = c.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(c[i - 1], c[j]);
    }
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  gmp_randclass gmp_;
};

}  // namespace privrec
