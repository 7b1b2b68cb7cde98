// Top-K% binarization of attribution maps. Exactly floor(K*N/100) pixels are
// set: the largest values win, ties break by ascending pixel index so the
// result is a pure function of the value ranking.
#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "pixelcert/types.hpp"

namespace pixelcert {

struct RankRule {
  double k_percent = 50.0;

  void validate() const {
    if (!(k_percent > 0.0 && k_percent <= 100.0))
      throw std::invalid_argument("RankRule: k_percent must be in (0, 100]");
  }
};

// Number of pixels selected at k_percent over n total.
inline int top_count(double k_percent, int n) {
  return static_cast<int>(std::floor(k_percent * n / 100.0));
}

inline SparsifiedMap sparsify(const AttributionMap& map, const RankRule& rule) {
  rule.validate();
  for (double v : map.values)
    if (std::isnan(v)) throw std::domain_error("sparsify: NaN attribution value");

  const int n = map.pixel_count();
  const int m = top_count(rule.k_percent, n);

  SparsifiedMap out;
  out.height = map.height;
  out.width = map.width;
  out.k_percent = rule.k_percent;
  out.bits.assign(static_cast<std::size_t>(n), 0);
  if (m == 0) return out;

  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::nth_element(order.begin(), order.begin() + (m - 1), order.end(),
                   [&](int a, int b) {
                     if (map.values[a] != map.values[b]) return map.values[a] > map.values[b];
                     return a < b;
                   });
  for (int i = 0; i < m; ++i) out.bits[static_cast<std::size_t>(order[i])] = 1;
  return out;
}

}  // namespace pixelcert
