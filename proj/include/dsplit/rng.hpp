#pragma once

// Counter-based substream RNG.
//
// Every consumer derives an independent engine from (seed, stream, path,
// interval) by hashing, so draws for one path/interval never depend on how
// many other paths were simulated or in what order.  That makes batches
// bit-reproducible across worker counts by construction.
//
// Distributions are hand-rolled (Box-Muller, Knuth Poisson, Marsaglia-Tsang
// Gamma) so streams are stable across standard-library versions.

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace dsplit {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t mix_key(std::uint64_t h, std::uint64_t v) {
  std::uint64_t s = h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2));
  return splitmix64(s);
}

class RngEngine {
 public:
  explicit RngEngine(std::uint64_t key) {
    for (auto& word : s_) word = splitmix64(key);
    if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 1;  // xoshiro forbids all-zero state
  }

  std::uint64_t next_u64() {
    auto rotl = [](std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); };
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Strictly inside (0,1): (k + 0.5) / 2^53.
  double uniform() { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  // Knuth multiplication method; halving keeps exp(-lambda) in range for large rates.
  long poisson(double lambda) {
    if (lambda < 0.0 || !std::isfinite(lambda)) throw std::invalid_argument("poisson: bad rate");
    if (lambda == 0.0) return 0;
    long count = 0;
    while (lambda > 30.0) {
      count += poisson_knuth(lambda / 2.0);
      lambda /= 2.0;
    }
    return count + poisson_knuth(lambda);
  }

  // Marsaglia-Tsang; beta is the rate (mean alpha/beta).
  double gamma(double alpha, double beta) {
    if (alpha <= 0.0 || beta <= 0.0) throw std::invalid_argument("gamma: bad shape/rate");
    if (alpha < 1.0) {
      const double boost = std::pow(uniform(), 1.0 / alpha);
      return gamma_mt(alpha + 1.0) * boost / beta;
    }
    return gamma_mt(alpha) / beta;
  }

 private:
  long poisson_knuth(double lambda) {
    const double limit = std::exp(-lambda);
    long k = 0;
    double p = 1.0;
    do {
      ++k;
      p *= uniform();
    } while (p > limit);
    return k - 1;
  }

  double gamma_mt(double alpha) {
    const double d = alpha - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x, v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  std::uint64_t s_[4];
  double spare_ = 0.0;
  bool have_spare_ = false;
};

// A logical stream: (seed, stream id).  `at(path, interval)` yields the
// engine for one path's work on one grid interval; `child(tag)` derives a
// disjoint stream for a different purpose (initial draws, mark cache, ...).
struct RngStream {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;

  RngStream child(std::uint64_t tag) const { return {seed, mix_key(stream, tag)}; }

  RngEngine at(std::uint64_t path, std::uint64_t interval) const {
    std::uint64_t key = mix_key(mix_key(mix_key(seed, stream), path), interval);
    return RngEngine(key);
  }

  RngEngine engine() const { return at(0, 0); }
};

}  // namespace dsplit
