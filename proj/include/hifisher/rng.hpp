#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace hifisher {

// Splittable pseudo-random generator built on the splitmix64 finalizer.
// Child streams are derived by hashing (state, stream id), never by
// sharing state, so a draw's value depends only on the root seed and the
// split path down to it. That property is what makes grid-parallel runs
// bit-identical regardless of thread count.
class SplitRng {
 public:
  explicit SplitRng(std::uint64_t seed) : state_(mix(seed ^ kPhi)) {}

  // Independent stream addressed by id. Deterministic, order-free.
  SplitRng split(std::uint64_t id) const {
    return SplitRng(mix(state_ + kPhi * (id + 1)));
  }

  std::uint64_t next_u64() {
    state_ += kPhi;
    return mix(state_);
  }

  // Uniform on [0,1) with 53 significant bits.
  double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform on (0,1); rejects exact zeros so logs stay finite.
  double uniform_pos() {
    double u;
    do { u = uniform(); } while (u <= 0.0);
    return u;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Marsaglia polar would vary its draw count; Box-Muller keeps the
  // uniform consumption fixed at two per pair.
  double normal() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    double u1 = uniform_pos();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    cached_ = r * std::sin(a);
    have_cached_ = true;
    return r * std::cos(a);
  }

  double exponential(double rate) { return -std::log(uniform_pos()) / rate; }

  // Gamma(shape, rate) by Marsaglia-Tsang squeeze; shape < 1 handled by
  // boosting shape+1 and scaling with u^{1/shape}.
  double gamma(double shape, double rate) {
    if (shape < 1.0) {
      double u = uniform_pos();
      return gamma(shape + 1.0, rate) * std::pow(u, 1.0 / shape);
    }
    double d = shape - 1.0 / 3.0;
    double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x, v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      double u = uniform_pos();
      double x2 = x * x;
      if (u < 1.0 - 0.0331 * x2 * x2) return d * v / rate;
      if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v / rate;
    }
  }

  // Index k with probability probs[k]; probs must sum to 1.
  int categorical(const std::vector<double>& probs) {
    double u = uniform();
    double acc = 0.0;
    for (std::size_t k = 0; k + 1 < probs.size(); ++k) {
      acc += probs[k];
      if (u < acc) return int(k);
    }
    return int(probs.size()) - 1;
  }

 private:
  static constexpr std::uint64_t kPhi = 0x9e3779b97f4a7c15ull;

  static std::uint64_t mix(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ull;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebull;
    z ^= z >> 31;
    return z;
  }

  std::uint64_t state_;
  bool have_cached_ = false;
  double cached_ = 0.0;
};

}  // namespace hifisher
