#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>

namespace roadlayout {

// SplitMix64 generator (constants from Steele, Lea & Flood, "Fast splittable
// pseudorandom number generators"). Pure uint64 arithmetic, so streams are
// reproducible across platforms and compilers.
class SplitMix64 {
 public:
  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    state_ += kGamma;
    return mix(state_);
  }

  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1), 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  bool bernoulli(double p) { return uniform() < p; }

  // Weighted draw over {0..n-1}; weights must be nonnegative with positive sum.
  int categorical(const double* weights, int n) {
    double total = 0.0;
    for (int i = 0; i < n; ++i) total += weights[i];
    double u = uniform() * total;
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
      acc += weights[i];
      if (u < acc) return i;
    }
    return n - 1;
  }

 private:
  std::uint64_t state_;
};

// Sub-seed for element `index` of a batch keyed by `seed`. One finalizer pass
// over the golden-ratio-offset counter; elements are independent streams.
inline std::uint64_t split_seed(std::uint64_t seed, std::uint64_t index) {
  return SplitMix64::mix(seed + (index + 1) * SplitMix64::kGamma);
}

// Inverse of the standard normal CDF, Acklam's rational approximation
// (|relative error| < 1.15e-9 over (0,1)).
inline double inverse_normal_cdf(double p) {
  static constexpr double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                  -2.759285104469687e+02, 1.383577518672690e+02,
                                  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                  -1.556989798598866e+02, 6.680131188771972e+01,
                                  -1.328068155288572e+01};
  static constexpr double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                  -2.400758277161838e+00, -2.549732539343734e+00,
                                  4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                                  2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;
  constexpr double p_high = 1.0 - p_low;

  p = std::clamp(p, 1e-300, 1.0 - 1e-16);
  if (p < p_low) {
    double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p > p_high) {
    double q = std::sqrt(-2.0 * std::log(1.0 - p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  double q = p - 0.5;
  double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x * 0.7071067811865475244); }

// Truncated normal via inverse-CDF mapping of one uniform draw. Exactly one
// draw is consumed regardless of the bounds.
inline double truncated_normal(SplitMix64& rng, double mean, double stddev, double lo,
                               double hi) {
  double cdf_lo = normal_cdf((lo - mean) / stddev);
  double cdf_hi = normal_cdf((hi - mean) / stddev);
  double u = cdf_lo + (cdf_hi - cdf_lo) * rng.uniform();
  double x = mean + stddev * inverse_normal_cdf(u);
  return std::clamp(x, lo, hi);
}

}  // namespace roadlayout
