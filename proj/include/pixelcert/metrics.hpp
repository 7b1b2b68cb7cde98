// Quantitative evaluation of certified maps: certification rate, grid
// localization scores (positive-mass and certified variants), percentile
// binning of localization scores, and deletion-based faithfulness.
#pragma once

#include <algorithm>
#include <map>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "pixelcert/toymodel.hpp"
#include "pixelcert/types.hpp"

namespace pixelcert {

// m x m grid of subimages; the target cell defaults to top-left.
struct GridSpec {
  int grid_dim = 2;
  int subimage_size = 32;
  int target_row = 0;
  int target_col = 0;

  int side() const { return grid_dim * subimage_size; }
  int num_cells() const { return grid_dim * grid_dim; }
  int target_cell() const { return target_row * grid_dim + target_col; }

  void validate() const {
    if (grid_dim < 1 || subimage_size < 1)
      throw std::invalid_argument("GridSpec: dims must be >= 1");
    if (target_row < 0 || target_row >= grid_dim || target_col < 0 || target_col >= grid_dim)
      throw std::invalid_argument("GridSpec: target cell out of range");
  }

  int cell_of(int y, int x) const {
    return (y / subimage_size) * grid_dim + (x / subimage_size);
  }
};

struct CertifiedSplit {
  double percent_certified = 0.0;  // fraction of non-abstain pixels
  double one_rate = 0.0;
  double zero_rate = 0.0;
};

inline CertifiedSplit percent_certified(const CertifiedMap& cert) {
  const int n = cert.pixel_count();
  CertifiedSplit s;
  if (n == 0) return s;
  s.one_rate = static_cast<double>(cert.count_label(PixelLabel::kOne)) / n;
  s.zero_rate = static_cast<double>(cert.count_label(PixelLabel::kZero)) / n;
  s.percent_certified = s.one_rate + s.zero_rate;
  return s;
}

// Localization score with a degenerate flag instead of an error, so grid
// batches never abort on one pathological member.
struct LocalizationScore {
  double score = 0.0;
  bool degenerate = false;
};

namespace detail {

inline void check_grid_dims(int height, int width, const GridSpec& spec) {
  spec.validate();
  if (height != spec.side() || width != spec.side())
    throw std::invalid_argument("grid metric: map dims do not match GridSpec");
}

}  // namespace detail

// Fraction of positive attribution mass falling inside the given cell.
inline LocalizationScore gridpg(const AttributionMap& attr, const GridSpec& spec, int cell) {
  detail::check_grid_dims(attr.height, attr.width, spec);
  if (cell < 0 || cell >= spec.num_cells())
    throw std::invalid_argument("gridpg: cell index out of range");

  double inside = 0.0, total = 0.0;
  for (int y = 0; y < attr.height; ++y)
    for (int x = 0; x < attr.width; ++x) {
      const double pos = std::max(attr.at(y, x), 0.0);
      total += pos;
      if (spec.cell_of(y, x) == cell) inside += pos;
    }
  if (total == 0.0) return {0.0, true};
  return {inside / total, false};
}

// Fraction of certified-ONE pixels falling inside the given cell.
inline LocalizationScore certified_gridpg(const CertifiedMap& cert, const GridSpec& spec,
                                          int cell) {
  detail::check_grid_dims(cert.height, cert.width, spec);
  if (cell < 0 || cell >= spec.num_cells())
    throw std::invalid_argument("certified_gridpg: cell index out of range");

  int inside = 0, total = 0;
  for (int y = 0; y < cert.height; ++y)
    for (int x = 0; x < cert.width; ++x) {
      if (cert.labels[static_cast<std::size_t>(y) * cert.width + x] != PixelLabel::kOne)
        continue;
      ++total;
      if (spec.cell_of(y, x) == cell) ++inside;
    }
  if (total == 0) return {0.0, true};
  return {static_cast<double>(inside) / total, false};
}

// One percentile bin of descending-sorted scores. Indices refer to the
// caller's original score order; the median member is the displayed exemplar.
struct AggAttBin {
  double lo_percent = 0.0;
  double hi_percent = 0.0;
  std::vector<int> members;  // original indices, descending score
  int median_index = -1;     // original index of the bin's median member
};

inline const std::vector<double>& aggatt_default_edges() {
  static const std::vector<double> edges{0.0, 2.0, 25.0, 50.0, 75.0, 98.0, 100.0};
  return edges;
}

inline std::vector<AggAttBin> aggatt_bins(std::span<const double> scores,
                                          std::span<const double> edges) {
  if (scores.empty()) throw std::domain_error("aggatt_bins: empty scores");
  if (edges.size() < 2) throw std::invalid_argument("aggatt_bins: need at least two edges");
  for (std::size_t i = 0; i < edges.size(); ++i) {
    if (edges[i] < 0.0 || edges[i] > 100.0)
      throw std::invalid_argument("aggatt_bins: edges must lie in [0,100]");
    if (i > 0 && edges[i] <= edges[i - 1])
      throw std::invalid_argument("aggatt_bins: edges must be strictly ascending");
  }

  const int count = static_cast<int>(scores.size());
  std::vector<int> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return scores[a] > scores[b]; });

  std::vector<AggAttBin> bins;
  for (std::size_t b = 0; b + 1 < edges.size(); ++b) {
    AggAttBin bin;
    bin.lo_percent = edges[b];
    bin.hi_percent = edges[b + 1];
    const int start = static_cast<int>(edges[b] * count / 100.0);
    const int end = static_cast<int>(edges[b + 1] * count / 100.0);
    for (int i = start; i < end && i < count; ++i) bin.members.push_back(order[i]);
    if (!bin.members.empty())
      bin.median_index = bin.members[(bin.members.size() - 1) / 2];
    bins.push_back(std::move(bin));
  }
  return bins;
}

inline std::vector<AggAttBin> aggatt_bins(std::span<const double> scores) {
  const auto& e = aggatt_default_edges();
  return aggatt_bins(scores, std::span<const double>(e.data(), e.size()));
}

// Deletion-curve of the ground-truth class confidence. Deletions are
// cumulative over the ascending K schedule: step t removes every pixel
// certified ONE at any K <= k_schedule[t].
struct FaithfulnessCurve {
  std::vector<double> k_schedule;
  std::vector<double> confidences;
  double baseline_confidence = 0.0;
};

inline FaithfulnessCurve faithfulness_curve(const Scorer& model, const ImageTensor& x,
                                            int gt_class,
                                            const std::map<double, CertifiedMap>& certs,
                                            std::span<const double> k_schedule,
                                            double fill = 0.0) {
  model.check_input(x);
  if (gt_class < 0 || gt_class >= model.num_classes())
    throw std::invalid_argument("faithfulness_curve: gt_class out of range");
  for (const auto& [k, cert] : certs)
    if (cert.height != x.height || cert.width != x.width)
      throw std::invalid_argument("faithfulness_curve: cert dims mismatch input");
  for (std::size_t i = 1; i < k_schedule.size(); ++i)
    if (k_schedule[i] <= k_schedule[i - 1])
      throw std::invalid_argument("faithfulness_curve: k_schedule must be ascending");

  FaithfulnessCurve curve;
  curve.baseline_confidence = model.probs(x)[gt_class];

  ImageTensor deleted = x;
  for (double k : k_schedule) {
    const auto it = certs.find(k);
    if (it == certs.end())
      throw std::invalid_argument("faithfulness_curve: no certified map for K=" +
                                  std::to_string(k));
    const CertifiedMap& cert = it->second;
    for (int y = 0; y < x.height; ++y)
      for (int xx = 0; xx < x.width; ++xx) {
        if (cert.labels[static_cast<std::size_t>(y) * x.width + xx] != PixelLabel::kOne)
          continue;
        for (int c = 0; c < x.channels; ++c) deleted.at(c, y, xx) = fill;
      }
    curve.k_schedule.push_back(k);
    curve.confidences.push_back(model.probs(deleted)[gt_class]);
  }
  return curve;
}

}  // namespace pixelcert
