// Attribution methods behind a single black-box interface
// h: image -> AttributionMap. Gradients reduce channels per pixel (max-abs
// for plain gradients, sum for input-weighted ones); perturbation methods
// score the target class with the softmax probability unless configured to
// use the raw logit.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "pixelcert/rng.hpp"
#include "pixelcert/toymodel.hpp"
#include "pixelcert/types.hpp"

namespace pixelcert {

enum class Method {
  kGrad,
  kInputXGrad,
  kIntGrad,
  kOcclusion,
  kRise,
  kStubCell,    // 1 inside a fixed rectangle; noise-invariant perfect localizer
  kStubFixed,   // fixed random map from the seed; noise-invariant
  kStubNoise,   // random map keyed on the input bytes; unstable under noise
};

enum class ScoreType { kProbability, kLogit };

struct RiseParams {
  int num_masks = 600;
  int grid_size = 6;
  double activation_prob = 0.1;

  void validate() const {
    if (num_masks < 1) throw std::invalid_argument("RiseParams: num_masks must be >= 1");
    if (grid_size < 1) throw std::invalid_argument("RiseParams: grid_size must be >= 1");
    if (!(activation_prob > 0.0 && activation_prob < 1.0))
      throw std::invalid_argument("RiseParams: activation_prob must be in (0,1)");
  }
};

struct OcclusionParams {
  int window = 8;
  int stride = 4;
  double fill_value = 0.0;

  void validate(int image_h, int image_w) const {
    if (stride < 1 || window < stride || window > std::min(image_h, image_w))
      throw std::invalid_argument("OcclusionParams: require 1 <= stride <= window <= image size");
  }
};

struct IntGradParams {
  int steps = 32;
  const ImageTensor* baseline = nullptr;  // null means all-zeros
};

struct StubRect {
  int row = 0, col = 0;
  int rows = 0, cols = 0;
};

struct AttributionRequest {
  const Scorer* model = nullptr;
  int target_class = 0;
  Method method = Method::kGrad;
  ScoreType score_type = ScoreType::kProbability;
  RiseParams rise;
  OcclusionParams occlusion;
  IntGradParams intgrad;
  StubRect stub_rect;
  std::uint64_t seed = 0;
};

inline bool is_stub(Method m) {
  return m == Method::kStubCell || m == Method::kStubFixed || m == Method::kStubNoise;
}

namespace detail {

inline double class_score(const Scorer& model, const ImageTensor& x, int cls,
                          ScoreType type) {
  return type == ScoreType::kProbability ? model.probs(x)[cls] : model.logits(x)[cls];
}

}  // namespace detail

// |gradient|, max over channels per pixel.
inline AttributionMap grad_map(const Scorer& model, const ImageTensor& x, int cls) {
  const ImageTensor g = model.grad_logit(x, cls);
  AttributionMap out = AttributionMap::zeros(x.height, x.width);
  for (int c = 0; c < x.channels; ++c)
    for (int y = 0; y < x.height; ++y)
      for (int xx = 0; xx < x.width; ++xx) {
        const double a = std::fabs(g.at(c, y, xx));
        double& cur = out.at(y, xx);
        if (!(a <= cur)) cur = a;  // NaN-propagating max
      }
  return out;
}

// x * gradient, summed over channels per pixel.
inline AttributionMap ixg_map(const Scorer& model, const ImageTensor& x, int cls) {
  const ImageTensor g = model.grad_logit(x, cls);
  AttributionMap out = AttributionMap::zeros(x.height, x.width);
  for (int c = 0; c < x.channels; ++c)
    for (int y = 0; y < x.height; ++y)
      for (int xx = 0; xx < x.width; ++xx)
        out.at(y, xx) += x.at(c, y, xx) * g.at(c, y, xx);
  return out;
}

// (x - baseline) * mean path gradient, a right Riemann sum over
// baseline + (k/steps)(x - baseline), k = 1..steps. Channel sum per pixel.
inline AttributionMap intgrad_map(const Scorer& model, const ImageTensor& x, int cls,
                                  int steps = 32, const ImageTensor* baseline = nullptr) {
  if (steps < 1) throw std::invalid_argument("intgrad_map: steps must be >= 1");
  ImageTensor zeros;
  if (baseline == nullptr) {
    zeros = ImageTensor::zeros(x.channels, x.height, x.width);
    baseline = &zeros;
  } else if (!baseline->same_shape(x)) {
    throw std::invalid_argument("intgrad_map: baseline shape mismatch");
  }

  ImageTensor avg_grad = ImageTensor::zeros(x.channels, x.height, x.width);
  ImageTensor point = *baseline;
  for (int k = 1; k <= steps; ++k) {
    const double t = static_cast<double>(k) / steps;
    for (std::size_t i = 0; i < x.data.size(); ++i)
      point.data[i] = baseline->data[i] + t * (x.data[i] - baseline->data[i]);
    const ImageTensor g = model.grad_logit(point, cls);
    for (std::size_t i = 0; i < g.data.size(); ++i) avg_grad.data[i] += g.data[i];
  }
  for (double& v : avg_grad.data) v /= steps;

  AttributionMap out = AttributionMap::zeros(x.height, x.width);
  for (int c = 0; c < x.channels; ++c)
    for (int y = 0; y < x.height; ++y)
      for (int xx = 0; xx < x.width; ++xx)
        out.at(y, xx) += (x.at(c, y, xx) - baseline->at(c, y, xx)) * avg_grad.at(c, y, xx);
  return out;
}

// Sliding-window occlusion: each pixel averages the score drops of all
// windows covering it. Window positions step by `stride`; a final position
// flush against each edge keeps every pixel covered.
inline AttributionMap occlusion_map(const Scorer& model, const ImageTensor& x, int cls,
                                    const OcclusionParams& params,
                                    ScoreType score_type = ScoreType::kProbability) {
  params.validate(x.height, x.width);
  const double base = detail::class_score(model, x, cls, score_type);

  auto positions = [&](int extent) {
    std::vector<int> pos;
    for (int p = 0; p + params.window <= extent; p += params.stride) pos.push_back(p);
    if (pos.empty() || pos.back() != extent - params.window)
      pos.push_back(extent - params.window);
    return pos;
  };
  const std::vector<int> ys = positions(x.height);
  const std::vector<int> xs = positions(x.width);

  std::vector<double> delta_sum(static_cast<std::size_t>(x.pixel_count()), 0.0);
  std::vector<int> cover(static_cast<std::size_t>(x.pixel_count()), 0);

  ImageTensor occluded = x;
  for (int wy : ys) {
    for (int wx : xs) {
      for (int c = 0; c < x.channels; ++c)
        for (int y = wy; y < wy + params.window; ++y)
          for (int xx = wx; xx < wx + params.window; ++xx)
            occluded.at(c, y, xx) = params.fill_value;

      const double delta = base - detail::class_score(model, occluded, cls, score_type);

      for (int y = wy; y < wy + params.window; ++y)
        for (int xx = wx; xx < wx + params.window; ++xx) {
          delta_sum[static_cast<std::size_t>(y) * x.width + xx] += delta;
          cover[static_cast<std::size_t>(y) * x.width + xx] += 1;
        }

      for (int c = 0; c < x.channels; ++c)
        for (int y = wy; y < wy + params.window; ++y)
          for (int xx = wx; xx < wx + params.window; ++xx)
            occluded.at(c, y, xx) = x.at(c, y, xx);
    }
  }

  AttributionMap out = AttributionMap::zeros(x.height, x.width);
  for (int i = 0; i < x.pixel_count(); ++i) out.values[i] = delta_sum[i] / cover[i];
  return out;
}

namespace detail {

// One RISE mask: Bernoulli cells on a grid_size^2 lattice, bilinearly
// upsampled to (H + cell, W + cell) and cropped at a random offset within one
// cell. Values land in [0,1].
inline std::vector<double> rise_mask(int height, int width, const RiseParams& p,
                                     std::uint64_t seed, int mask_index) {
  const int s = p.grid_size;
  const int cell_h = (height + s - 1) / s;
  const int cell_w = (width + s - 1) / s;
  const int up_h = height + cell_h;
  const int up_w = width + cell_w;

  RngStream rng(seed, static_cast<std::uint64_t>(mask_index));
  std::vector<double> grid(static_cast<std::size_t>(s) * s);
  for (double& g : grid) g = (rng.uniform() < p.activation_prob) ? 1.0 : 0.0;
  const int dy = static_cast<int>(rng.below(static_cast<std::uint64_t>(cell_h)));
  const int dx = static_cast<int>(rng.below(static_cast<std::uint64_t>(cell_w)));

  auto sample = [&](double sy, double sx) {
    sy = std::max(sy, 0.0);
    sx = std::max(sx, 0.0);
    const int y0 = std::min(static_cast<int>(sy), s - 1);
    const int x0 = std::min(static_cast<int>(sx), s - 1);
    const int y1 = std::min(y0 + 1, s - 1);
    const int x1 = std::min(x0 + 1, s - 1);
    const double fy = std::min(sy - y0, 1.0);
    const double fx = std::min(sx - x0, 1.0);
    const double top = grid[static_cast<std::size_t>(y0) * s + x0] * (1 - fx) +
                       grid[static_cast<std::size_t>(y0) * s + x1] * fx;
    const double bot = grid[static_cast<std::size_t>(y1) * s + x0] * (1 - fx) +
                       grid[static_cast<std::size_t>(y1) * s + x1] * fx;
    return top * (1 - fy) + bot * fy;
  };

  std::vector<double> mask(static_cast<std::size_t>(height) * width);
  for (int y = 0; y < height; ++y) {
    const double sy = (y + dy + 0.5) * s / up_h - 0.5;
    for (int x = 0; x < width; ++x) {
      const double sx = (x + dx + 0.5) * s / up_w - 0.5;
      mask[static_cast<std::size_t>(y) * width + x] = sample(sy, sx);
    }
  }
  return mask;
}

}  // namespace detail

// Randomized-mask saliency: sum of score-weighted masks, normalized by
// num_masks * activation_prob (unbiased importance estimate).
inline AttributionMap rise_map(const Scorer& model, const ImageTensor& x, int cls,
                               const RiseParams& params, std::uint64_t seed,
                               ScoreType score_type = ScoreType::kProbability) {
  params.validate();
  AttributionMap out = AttributionMap::zeros(x.height, x.width);
  ImageTensor masked = x;
  for (int m = 0; m < params.num_masks; ++m) {
    const std::vector<double> mask = detail::rise_mask(x.height, x.width, params, seed, m);
    for (int c = 0; c < x.channels; ++c)
      for (int i = 0; i < x.pixel_count(); ++i)
        masked.data[static_cast<std::size_t>(c) * x.pixel_count() + i] =
            x.data[static_cast<std::size_t>(c) * x.pixel_count() + i] * mask[i];
    const double score = detail::class_score(model, masked, cls, score_type);
    for (int i = 0; i < x.pixel_count(); ++i) out.values[i] += score * mask[i];
  }
  const double norm = params.num_masks * params.activation_prob;
  for (double& v : out.values) v /= norm;
  return out;
}

namespace detail {

inline AttributionMap stub_cell_map(const ImageTensor& x, const StubRect& r) {
  AttributionMap out = AttributionMap::zeros(x.height, x.width);
  for (int y = r.row; y < std::min(r.row + r.rows, x.height); ++y)
    for (int xx = r.col; xx < std::min(r.col + r.cols, x.width); ++xx)
      out.at(y, xx) = 1.0;
  return out;
}

inline AttributionMap stub_random_map(const ImageTensor& x, std::uint64_t seed) {
  AttributionMap out = AttributionMap::zeros(x.height, x.width);
  RngStream rng(seed, 0x5742ull);  // fixed purpose tag
  for (double& v : out.values) v = rng.uniform();
  return out;
}

inline std::uint64_t hash_image(const ImageTensor& x) {
  std::uint64_t h = 0xcbf29ce484222325ull;  // FNV-1a over the raw double bits
  for (double v : x.data) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    for (int b = 0; b < 8; ++b) {
      h ^= (bits >> (8 * b)) & 0xff;
      h *= 0x100000001b3ull;
    }
  }
  return h;
}

}  // namespace detail

// Dispatch. Deterministic given (req, x) for every method, including the
// seeded randomized ones.
inline AttributionMap attribute(const AttributionRequest& req, const ImageTensor& x) {
  if (!is_stub(req.method)) {
    if (req.model == nullptr)
      throw std::invalid_argument("attribute: model required for non-stub methods");
    req.model->check_input(x);
    if (req.target_class < 0 || req.target_class >= req.model->num_classes())
      throw std::invalid_argument("attribute: target_class out of range");
  }

  AttributionMap out;
  switch (req.method) {
    case Method::kGrad:
      out = grad_map(*req.model, x, req.target_class);
      break;
    case Method::kInputXGrad:
      out = ixg_map(*req.model, x, req.target_class);
      break;
    case Method::kIntGrad:
      out = intgrad_map(*req.model, x, req.target_class, req.intgrad.steps,
                        req.intgrad.baseline);
      break;
    case Method::kOcclusion:
      out = occlusion_map(*req.model, x, req.target_class, req.occlusion, req.score_type);
      break;
    case Method::kRise:
      out = rise_map(*req.model, x, req.target_class, req.rise, req.seed, req.score_type);
      break;
    case Method::kStubCell:
      out = detail::stub_cell_map(x, req.stub_rect);
      break;
    case Method::kStubFixed:
      out = detail::stub_random_map(x, req.seed);
      break;
    case Method::kStubNoise:
      out = detail::stub_random_map(x, req.seed ^ detail::hash_image(x));
      break;
    default:
      throw std::invalid_argument("attribute: unknown method");
  }
  out.validate();
  return out;
}

inline Method method_from_name(const std::string& name) {
  if (name == "grad") return Method::kGrad;
  if (name == "ixg") return Method::kInputXGrad;
  if (name == "intgrad") return Method::kIntGrad;
  if (name == "occlusion") return Method::kOcclusion;
  if (name == "rise") return Method::kRise;
  if (name == "stub-cell") return Method::kStubCell;
  if (name == "stub-fixed") return Method::kStubFixed;
  if (name == "stub-noise") return Method::kStubNoise;
  throw std::invalid_argument("unknown attribution method: " + name);
}

inline const char* method_name(Method m) {
  switch (m) {
    case Method::kGrad: return "grad";
    case Method::kInputXGrad: return "ixg";
    case Method::kIntGrad: return "intgrad";
    case Method::kOcclusion: return "occlusion";
    case Method::kRise: return "rise";
    case Method::kStubCell: return "stub-cell";
    case Method::kStubFixed: return "stub-fixed";
    case Method::kStubNoise: return "stub-noise";
  }
  return "unknown";
}

}  // namespace pixelcert
