#pragma once

#include "sweep/common.hpp"

#include <cstdint>

namespace sweep {

// Counter-based deterministic random numbers. Every draw is a pure function
// of (seed, stream, counter), so parallel workers and grid refinements can
// regenerate exactly the same values without shared state.
struct RngSpec {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;

  RngSpec derive(std::uint64_t substream) const {
    // splits a stream into independent child streams
    return RngSpec{seed, stream * 0x9e3779b97f4a7c15ull + substream + 1};
  }
};

namespace detail {

inline std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xbf58476d1ce4e5b9ull;
  z ^= z >> 27;
  z *= 0x94d049bb133111ebull;
  z ^= z >> 31;
  return z;
}

}  // namespace detail

inline std::uint64_t counter_u64(const RngSpec& rng, std::uint64_t counter) {
  std::uint64_t z = rng.seed + 0x9e3779b97f4a7c15ull * (rng.stream + 1);
  z = detail::mix64(z ^ (counter + 0x9e3779b97f4a7c15ull));
  z = detail::mix64(z + rng.stream);
  return detail::mix64(z ^ counter);
}

// uniform in the open interval (0,1)
inline double counter_uniform(const RngSpec& rng, std::uint64_t counter) {
  return static_cast<double>(counter_u64(rng, counter) >> 11) * 0x1.0p-53 + 0x1.0p-54;
}

// Inverse standard normal CDF: Acklam's rational approximation followed by a
// Halley refinement against erfc, giving near machine precision.
inline double normal_quantile(double p) {
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;
  double x;
  if (p < plow) {
    double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - plow) {
    double q = p - 0.5, r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  // Halley step on F(x) - p = 0
  double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
  double u = e * std::sqrt(2.0 * M_PI) * std::exp(x * x / 2.0);
  x = x - u / (1.0 + x * u / 2.0);
  return x;
}

inline double counter_normal(const RngSpec& rng, std::uint64_t counter) {
  return normal_quantile(counter_uniform(rng, counter));
}

// Stateful convenience wrapper over the counter-based generator.
class Rng {
 public:
  explicit Rng(RngSpec spec) : spec_(spec) {}

  double uniform() { return counter_uniform(spec_, counter_++); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal() { return counter_normal(spec_, counter_++); }
  std::uint64_t u64() { return counter_u64(spec_, counter_++); }
  std::uint64_t index(std::uint64_t n) { return u64() % n; }

  Vec uniform_vec(const Vec& lo, const Vec& hi) {
    Vec v(lo.size());
    for (Eigen::Index i = 0; i < lo.size(); ++i) v[i] = uniform(lo[i], hi[i]);
    return v;
  }

  Vec normal_vec(Eigen::Index d) {
    Vec v(d);
    for (Eigen::Index i = 0; i < d; ++i) v[i] = normal();
    return v;
  }

  // uniform direction on the unit sphere
  Vec direction(Eigen::Index d) {
    for (;;) {
      Vec v = normal_vec(d);
      double n = v.norm();
      if (n > 1e-12) return v / n;
    }
  }

  const RngSpec& spec() const { return spec_; }

 private:
  RngSpec spec_;
  std::uint64_t counter_ = 0;
};

// Low-discrepancy points for set-inclusion sampling: additive recurrence
// based on the generalized golden ratio.
class QuasiRandom {
 public:
  explicit QuasiRandom(Eigen::Index d) : alpha_(d) {
    double phi = 2.0;
    for (int it = 0; it < 64; ++it) phi = std::pow(1.0 + phi, 1.0 / (d + 1.0));
    double a = 1.0 / phi;
    for (Eigen::Index i = 0; i < d; ++i) alpha_[i] = std::pow(a, double(i + 1));
  }

  // point in [0,1]^d
  Vec next() {
    ++k_;
    Vec v(alpha_.size());
    for (Eigen::Index i = 0; i < alpha_.size(); ++i) {
      double x = 0.5 + k_ * alpha_[i];
      v[i] = x - std::floor(x);
    }
    return v;
  }

 private:
  Vec alpha_;
  std::uint64_t k_ = 0;
};

}  // namespace sweep
