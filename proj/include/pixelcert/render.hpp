// Deterministic rendering of certified maps: abstain pixels gray, certified
// bottom pixels white, certified top pixels on a red ramp where lower K is
// strictly darker. Overlays give the smallest certifying K precedence.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "pixelcert/png.hpp"
#include "pixelcert/types.hpp"

namespace pixelcert {

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  bool operator==(const Rgb&) const = default;
};

struct Palette {
  Rgb abstain{128, 128, 128};
  Rgb zero{255, 255, 255};
  Rgb one_darkest{96, 0, 0};     // smallest K
  Rgb one_lightest{240, 128, 128};  // largest K

  // Color of the ONE label at ramp position `rank` among `levels` K values
  // sorted ascending; rank 0 (the smallest K) is darkest.
  Rgb one_color(int rank, int levels) const {
    if (levels <= 1) return one_darkest;
    const double t = static_cast<double>(rank) / (levels - 1);
    auto lerp = [t](std::uint8_t a, std::uint8_t b) {
      return static_cast<std::uint8_t>(std::lround(a + t * (b - a)));
    };
    return {lerp(one_darkest.r, one_lightest.r), lerp(one_darkest.g, one_lightest.g),
            lerp(one_darkest.b, one_lightest.b)};
  }
};

namespace detail {

inline void put_pixel(std::vector<std::uint8_t>& rgb, int width, int y, int x, Rgb c) {
  const std::size_t at = (static_cast<std::size_t>(y) * width + x) * 3;
  rgb[at] = c.r;
  rgb[at + 1] = c.g;
  rgb[at + 2] = c.b;
}

}  // namespace detail

// One PNG pixel per map cell. The single map is rendered as a one-level
// overlay, so its ONE color is the darkest ramp entry.
inline std::vector<std::uint8_t> render_map(const CertifiedMap& cert,
                                            const Palette& palette = {}) {
  std::vector<std::uint8_t> rgb(static_cast<std::size_t>(cert.pixel_count()) * 3);
  for (int y = 0; y < cert.height; ++y)
    for (int x = 0; x < cert.width; ++x) {
      const PixelLabel l = cert.labels[static_cast<std::size_t>(y) * cert.width + x];
      Rgb c = palette.abstain;
      if (l == PixelLabel::kZero) c = palette.zero;
      if (l == PixelLabel::kOne) c = palette.one_color(0, 1);
      detail::put_pixel(rgb, cert.width, y, x, c);
    }
  return png::encode_rgb(rgb, cert.width, cert.height);
}

// Overlay across K levels: each pixel takes the ramp color of the smallest K
// at which it is certified ONE; pixels never certified ONE fall back to the
// ZERO/ABSTAIN coloring of the largest-K map.
inline std::vector<std::uint8_t> render_overlay(const std::map<double, CertifiedMap>& certs,
                                                const Palette& palette = {}) {
  if (certs.empty()) throw std::invalid_argument("render_overlay: no maps");
  const CertifiedMap& first = certs.begin()->second;
  for (const auto& [k, cert] : certs)
    if (cert.height != first.height || cert.width != first.width)
      throw std::invalid_argument("render_overlay: map dimension mismatch");

  const CertifiedMap& largest = certs.rbegin()->second;
  const int levels = static_cast<int>(certs.size());

  std::vector<std::uint8_t> rgb(static_cast<std::size_t>(first.pixel_count()) * 3);
  for (int y = 0; y < first.height; ++y)
    for (int x = 0; x < first.width; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * first.width + x;
      Rgb c;
      bool found = false;
      int rank = 0;
      for (const auto& [k, cert] : certs) {  // ascending K
        if (cert.labels[i] == PixelLabel::kOne) {
          c = palette.one_color(rank, levels);
          found = true;
          break;
        }
        ++rank;
      }
      if (!found)
        c = (largest.labels[i] == PixelLabel::kZero) ? palette.zero : palette.abstain;
      detail::put_pixel(rgb, first.width, y, x, c);
    }
  return png::encode_rgb(rgb, first.width, first.height);
}

namespace detail {

inline void blit_image(std::vector<std::uint8_t>& canvas, int canvas_w,
                       const std::vector<std::uint8_t>& tile_rgb, int tile_w, int tile_h,
                       int x0) {
  for (int y = 0; y < tile_h; ++y)
    for (int x = 0; x < tile_w; ++x) {
      const std::size_t src = (static_cast<std::size_t>(y) * tile_w + x) * 3;
      const std::size_t dst = (static_cast<std::size_t>(y) * canvas_w + x0 + x) * 3;
      canvas[dst] = tile_rgb[src];
      canvas[dst + 1] = tile_rgb[src + 1];
      canvas[dst + 2] = tile_rgb[src + 2];
    }
}

inline std::vector<std::uint8_t> image_to_rgb(const ImageTensor& img) {
  std::vector<std::uint8_t> rgb(static_cast<std::size_t>(img.pixel_count()) * 3);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < 3; ++c) {
        const int src_c = img.channels == 1 ? 0 : std::min(c, img.channels - 1);
        const double v = std::clamp(img.at(src_c, y, x), 0.0, 1.0);
        rgb[(static_cast<std::size_t>(y) * img.width + x) * 3 + c] =
            static_cast<std::uint8_t>(std::lround(v * 255.0));
      }
  return rgb;
}

// Decodes the raw RGB of a map for panel composition (we rendered it, so we
// rasterize again rather than decode the PNG).
inline std::vector<std::uint8_t> map_to_rgb(const CertifiedMap& cert, const Palette& palette,
                                            int rank, int levels) {
  std::vector<std::uint8_t> rgb(static_cast<std::size_t>(cert.pixel_count()) * 3);
  for (int y = 0; y < cert.height; ++y)
    for (int x = 0; x < cert.width; ++x) {
      const PixelLabel l = cert.labels[static_cast<std::size_t>(y) * cert.width + x];
      Rgb c = palette.abstain;
      if (l == PixelLabel::kZero) c = palette.zero;
      if (l == PixelLabel::kOne) c = palette.one_color(rank, levels);
      put_pixel(rgb, cert.width, y, x, c);
    }
  return rgb;
}

inline std::vector<std::uint8_t> overlay_to_rgb(const std::map<double, CertifiedMap>& certs,
                                                const Palette& palette) {
  const CertifiedMap& first = certs.begin()->second;
  const CertifiedMap& largest = certs.rbegin()->second;
  const int levels = static_cast<int>(certs.size());
  std::vector<std::uint8_t> rgb(static_cast<std::size_t>(first.pixel_count()) * 3);
  for (int y = 0; y < first.height; ++y)
    for (int x = 0; x < first.width; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * first.width + x;
      Rgb c;
      bool found = false;
      int rank = 0;
      for (const auto& [k, cert] : certs) {
        if (cert.labels[i] == PixelLabel::kOne) {
          c = palette.one_color(rank, levels);
          found = true;
          break;
        }
        ++rank;
      }
      if (!found)
        c = (largest.labels[i] == PixelLabel::kZero) ? palette.zero : palette.abstain;
      put_pixel(rgb, first.width, y, x, c);
    }
  return rgb;
}

}  // namespace detail

// Side-by-side figure panel: input | per-K certified maps (K ascending) |
// overlay, separated by 2px white gutters.
inline std::vector<std::uint8_t> render_panel(const ImageTensor& input,
                                              const std::map<double, CertifiedMap>& certs,
                                              const Palette& palette = {}) {
  if (certs.empty()) throw std::invalid_argument("render_panel: no maps");
  const CertifiedMap& first = certs.begin()->second;
  if (input.height != first.height || input.width != first.width)
    throw std::invalid_argument("render_panel: input/map dimension mismatch");

  const int gutter = 2;
  const int tiles = 2 + static_cast<int>(certs.size());
  const int panel_w = tiles * input.width + (tiles - 1) * gutter;

  std::vector<std::uint8_t> canvas(static_cast<std::size_t>(panel_w) * input.height * 3, 255);
  int x0 = 0;
  detail::blit_image(canvas, panel_w, detail::image_to_rgb(input), input.width, input.height,
                     x0);
  x0 += input.width + gutter;
  const int levels = static_cast<int>(certs.size());
  int rank = 0;
  for (const auto& [k, cert] : certs) {
    detail::blit_image(canvas, panel_w, detail::map_to_rgb(cert, palette, rank, levels),
                       input.width, input.height, x0);
    x0 += input.width + gutter;
    ++rank;
  }
  detail::blit_image(canvas, panel_w, detail::overlay_to_rgb(certs, palette), input.width,
                     input.height, x0);
  return png::encode_rgb(canvas, panel_w, input.height);
}

inline void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("write_file: cannot open " + path);
  f.write(reinterpret_cast<const char*>(bytes.data()),
          static_cast<std::streamsize>(bytes.size()));
  if (!f) throw std::runtime_error("write_file: write failed for " + path);
}

}  // namespace pixelcert
