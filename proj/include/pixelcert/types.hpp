// Core domain types shared by every module.
#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace pixelcert {

// Per-pixel certification outcome. kAbstain means no robustness guarantee
// could be given for the pixel at the requested confidence.
enum class PixelLabel : std::uint8_t { kZero = 0, kOne = 1, kAbstain = 2 };

// Family-wise error correction applied across the N per-pixel tests.
enum class Correction { kBonferroni, kHolm };

inline const char* to_string(Correction c) {
  return c == Correction::kBonferroni ? "bonferroni" : "holm";
}

// C x H x W image, values in [0,1], row-major within each channel plane.
struct ImageTensor {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<double> data;

  static ImageTensor zeros(int channels, int height, int width) {
    ImageTensor t;
    t.channels = channels;
    t.height = height;
    t.width = width;
    t.data.assign(static_cast<std::size_t>(channels) * height * width, 0.0);
    return t;
  }

  int pixel_count() const { return height * width; }
  std::size_t size() const { return data.size(); }

  double& at(int c, int y, int x) {
    return data[(static_cast<std::size_t>(c) * height + y) * width + x];
  }
  double at(int c, int y, int x) const {
    return data[(static_cast<std::size_t>(c) * height + y) * width + x];
  }

  bool same_shape(const ImageTensor& o) const {
    return channels == o.channels && height == o.height && width == o.width;
  }

  void validate() const {
    if (data.size() != static_cast<std::size_t>(channels) * height * width)
      throw std::invalid_argument("ImageTensor: data length != c*h*w");
    for (double v : data)
      if (!std::isfinite(v))
        throw std::invalid_argument("ImageTensor: non-finite value");
  }
};

// H x W real-valued attribution map, one value per pixel, row-major.
struct AttributionMap {
  int height = 0;
  int width = 0;
  std::vector<double> values;

  static AttributionMap zeros(int height, int width) {
    AttributionMap m;
    m.height = height;
    m.width = width;
    m.values.assign(static_cast<std::size_t>(height) * width, 0.0);
    return m;
  }

  int pixel_count() const { return height * width; }

  double& at(int y, int x) { return values[static_cast<std::size_t>(y) * width + x]; }
  double at(int y, int x) const { return values[static_cast<std::size_t>(y) * width + x]; }

  void validate() const {
    if (values.size() != static_cast<std::size_t>(height) * width)
      throw std::invalid_argument("AttributionMap: length != h*w");
    for (double v : values)
      if (!std::isfinite(v))
        throw std::invalid_argument("AttributionMap: non-finite value");
  }
};

// Binary top-K% importance map. Exactly floor(k_percent*N/100) bits are set.
struct SparsifiedMap {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> bits;  // 0 or 1 per pixel
  double k_percent = 0.0;

  int pixel_count() const { return height * width; }

  int popcount() const {
    int n = 0;
    for (std::uint8_t b : bits) n += b;
    return n;
  }
};

// Ternary certified map plus the certificate parameters it was produced with.
// radius is the l2 bound sigma * Phi^-1(tau) from the smoothing theorem.
struct CertifiedMap {
  int height = 0;
  int width = 0;
  std::vector<PixelLabel> labels;
  double radius = 0.0;
  double tau = 0.0;
  double alpha = 0.0;
  double k_percent = 0.0;
  int n_samples = 0;
  std::vector<int> counts_one;

  int pixel_count() const { return height * width; }

  int count_label(PixelLabel l) const {
    int n = 0;
    for (PixelLabel x : labels) n += (x == l);
    return n;
  }
};

// Per-pixel vote counts from Monte-Carlo sampling of the sparsified
// attribution under Gaussian input noise.
struct VoteTensor {
  int height = 0;
  int width = 0;
  std::vector<int> counts_one;
  int n_samples = 0;

  int pixel_count() const { return height * width; }

  void validate() const {
    if (counts_one.size() != static_cast<std::size_t>(height) * width)
      throw std::invalid_argument("VoteTensor: length != h*w");
    for (int c : counts_one)
      if (c < 0 || c > n_samples)
        throw std::invalid_argument("VoteTensor: count outside [0, n_samples]");
  }
};

// Certification hyperparameters. Defaults follow the standard setting
// (sigma=0.15, n=100, tau=0.75, alpha=0.001).
struct SmoothingConfig {
  double sigma = 0.15;
  int n_samples = 100;
  double tau = 0.75;
  double alpha = 0.001;
  double k_percent = 50.0;
  std::uint64_t master_seed = 0;
  Correction correction = Correction::kBonferroni;

  void validate() const {
    if (!(sigma > 0.0)) throw std::invalid_argument("SmoothingConfig: sigma must be > 0");
    if (n_samples < 1) throw std::invalid_argument("SmoothingConfig: n_samples must be >= 1");
    if (!(tau >= 0.5 && tau < 1.0))
      throw std::invalid_argument("SmoothingConfig: tau must be in [0.5, 1)");
    if (!(alpha > 0.0 && alpha < 1.0))
      throw std::invalid_argument("SmoothingConfig: alpha must be in (0, 1)");
    if (!(k_percent > 0.0 && k_percent <= 100.0))
      throw std::invalid_argument("SmoothingConfig: k_percent must be in (0, 100]");
  }
};

}  // namespace pixelcert
