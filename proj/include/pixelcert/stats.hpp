// Statistical primitives: inverse normal CDF, exact binomial tails, the
// per-pixel certification threshold, family-wise correction and the Cohen
// classification radius.
#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "pixelcert/types.hpp"

namespace pixelcert {

// Inverse CDF of the standard normal, Wichura's algorithm AS 241 (PPND16).
// Absolute error below 1e-9 over (0,1); the rational approximations are
// accurate to about 1e-16 in their respective regions.
inline double inv_norm_cdf(double p) {
  if (!(p > 0.0 && p < 1.0))
    throw std::domain_error("inv_norm_cdf: p must be in (0,1)");

  const double q = p - 0.5;
  if (std::fabs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    const double num =
        (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r +
              6.7265770927008700853e4) * r + 4.5921953931549871457e4) * r +
            1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r +
          1.3314166789178437745e2) * r + 3.3871328727963666080e0);
    const double den =
        (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r +
              3.9307895800092710610e4) * r + 2.1213794301586595867e4) * r +
            5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r +
          4.2313330701600911252e1) * r + 1.0);
    return q * num / den;
  }

  double r = (q < 0.0) ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double value;
  if (r <= 5.0) {
    r -= 1.6;
    const double num =
        (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
              2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r +
            3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r +
          4.63033784615654529590e0) * r + 1.42343711074968357734e0);
    const double den =
        (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
              1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
            6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r +
          2.05319162663775882187e0) * r + 1.0);
    value = num / den;
  } else {
    r -= 5.0;
    const double num =
        (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
              1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
            2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r +
          5.46378491116411436990e0) * r + 6.65790464350110377720e0);
    const double den =
        (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-9) * r +
              1.84631831751005468180e-6) * r + 7.86869131145613259100e-4) * r +
            1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
          5.99832206555887937690e-1) * r + 1.0);
    value = num / den;
  }
  return (q < 0.0) ? -value : value;
}

namespace detail {

inline double binom_log_pmf(int n, int i, double p) {
  return std::lgamma(n + 1.0) - std::lgamma(i + 1.0) - std::lgamma(n - i + 1.0) +
         i * std::log(p) + (n - i) * std::log1p(-p);
}

}  // namespace detail

// Exact upper tail P(Bin(n,p) >= k). The pmf is unimodal, so both wings of
// the tail are accumulated starting from their smallest terms and the modal
// term is added last.
inline double binom_sf(int k, int n, double p) {
  if (n < 0 || k < 0 || k > n)
    throw std::domain_error("binom_sf: require 0 <= k <= n");
  if (!(p >= 0.0 && p <= 1.0))
    throw std::domain_error("binom_sf: p must be in [0,1]");
  if (k == 0) return 1.0;
  if (p == 0.0) return 0.0;
  if (p == 1.0) return 1.0;

  int mode = static_cast<int>(std::floor((n + 1.0) * p));
  mode = std::clamp(mode, k, n);

  double sum = 0.0;
  for (int i = n; i > mode; --i) sum += std::exp(detail::binom_log_pmf(n, i, p));
  for (int i = k; i < mode; ++i) sum += std::exp(detail::binom_log_pmf(n, i, p));
  sum += std::exp(detail::binom_log_pmf(n, mode, p));
  return std::min(sum, 1.0);
}

// Minimal vote count c* such that P(Bin(n,tau) >= c*) <= alpha_per_test.
// Returns n+1 as a sentinel when even a unanimous vote cannot reach
// significance at this (n, tau, alpha_per_test).
inline int certify_threshold(int n, double tau, double alpha_per_test) {
  if (n < 1) throw std::domain_error("certify_threshold: n must be >= 1");
  if (!(tau >= 0.5 && tau < 1.0))
    throw std::domain_error("certify_threshold: tau must be in [0.5, 1)");
  if (!(alpha_per_test > 0.0 && alpha_per_test < 1.0))
    throw std::domain_error("certify_threshold: alpha_per_test must be in (0, 1)");

  if (binom_sf(n, n, tau) > alpha_per_test) return n + 1;

  // binom_sf is non-increasing in k, so binary search for the first count
  // at or below alpha_per_test.
  int lo = 0, hi = n;
  while (lo < hi) {
    const int mid = lo + (hi - lo) / 2;
    if (binom_sf(mid, n, tau) <= alpha_per_test)
      hi = mid;
    else
      lo = mid + 1;
  }
  return hi;
}

// Per-test significance level after family-wise correction over num_tests
// pixels. Holm is a step-down procedure; its most stringent step equals the
// Bonferroni level, which is what callers use as the base level. The
// step-down itself lives in the certify routine.
inline double fwer_alpha(double alpha, int num_tests, Correction correction) {
  if (num_tests < 1) throw std::domain_error("fwer_alpha: num_tests must be >= 1");
  (void)correction;
  return alpha / num_tests;
}

// Classification-smoothing radius (sigma/2) * (Phi^-1(pa) - Phi^-1(pb)).
inline double cohen_radius(double pa_lower, double pb_upper, double sigma) {
  if (!(pb_upper > 0.0 && pa_lower < 1.0 && pb_upper <= pa_lower))
    throw std::domain_error("cohen_radius: require 0 < pb_upper <= pa_lower < 1");
  return 0.5 * sigma * (inv_norm_cdf(pa_lower) - inv_norm_cdf(pb_upper));
}

}  // namespace pixelcert
