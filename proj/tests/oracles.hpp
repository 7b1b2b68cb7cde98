// Independent reference implementations used only by tests. These must not
// share code paths with the library: the normal CDF is erf-based, binomial
// tails use a long-double pmf recurrence or full 2^n enumeration, and top-K
// selection is a full sort.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

namespace oracle {

// Standard normal CDF via erfc.
inline double normal_cdf(double z) {
  return 0.5 * std::erfc(-z / std::sqrt(2.0));
}

// Quantile by bisection on normal_cdf. The upper tail is folded onto the
// lower one, where erfc keeps full relative precision.
inline double normal_quantile(double p) {
  if (p > 0.5) return -normal_quantile(1.0 - p);
  double lo = -40.0, hi = 1.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (normal_cdf(mid) < p)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

// P(Bin(n,p) >= k) from a long-double pmf recurrence starting at i = 0.
inline double binom_sf(int k, int n, double p) {
  if (k <= 0) return 1.0;
  if (p <= 0.0) return 0.0;
  if (p >= 1.0) return 1.0;
  const long double q = 1.0L - static_cast<long double>(p);
  long double pmf = std::pow(q, static_cast<long double>(n));  // P(X = 0)
  long double tail = (k <= 0) ? pmf : 0.0L;
  long double cdf = pmf;
  for (int i = 1; i <= n; ++i) {
    pmf *= static_cast<long double>(n - i + 1) / i * (static_cast<long double>(p) / q);
    if (i >= k) tail += pmf;
    cdf += pmf;
  }
  (void)cdf;
  return static_cast<double>(tail);
}

// P(Bin(n,p) >= k) by enumerating all 2^n outcome sequences. Only for n <= ~20.
inline double binom_sf_bruteforce(int k, int n, double p) {
  long double total = 0.0L;
  const std::uint64_t limit = 1ull << n;
  for (std::uint64_t bits = 0; bits < limit; ++bits) {
    const int ones = static_cast<int>(__builtin_popcountll(bits));
    if (ones >= k) {
      total += std::pow(static_cast<long double>(p), ones) *
               std::pow(1.0L - static_cast<long double>(p), n - ones);
    }
  }
  return static_cast<double>(total);
}

// Indices of the m largest values, ties broken by ascending index.
inline std::vector<int> top_m_indices(const std::vector<double>& values, int m) {
  std::vector<int> idx(values.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](int a, int b) { return values[a] > values[b]; });
  idx.resize(m);
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace oracle
