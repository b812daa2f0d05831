#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "tiledet/types.hpp"

namespace tiledet {

struct EnhanceParams {
  double p_low = 2.0;   // percentile in [0, 100)
  double p_high = 98.0; // percentile in (p_low, 100]

  bool operator==(const EnhanceParams&) const = default;
};

struct BlurParams {
  int radius = 5;     // Chebyshev neighborhood radius, pixels
  int max_delta = 50; // intensity units in [0, 255]

  double sigma() const { return radius / 2.0; }

  bool operator==(const BlurParams&) const = default;
};

namespace detail {

// Nearest-rank percentile over one channel, from a 256-bin histogram:
// the value at 1-based rank max(1, ceil(p/100 * N)) of the sorted channel.
inline std::uint8_t percentile_value(const std::array<std::int64_t, 256>& hist,
                                     std::int64_t n, double p) {
  std::int64_t rank = static_cast<std::int64_t>(std::ceil(p / 100.0 * static_cast<double>(n)));
  if (rank < 1) rank = 1;
  if (rank > n) rank = n;
  std::int64_t cum = 0;
  for (int v = 0; v < 256; ++v) {
    cum += hist[v];
    if (cum >= rank) return static_cast<std::uint8_t>(v);
  }
  return 255;
}

}  // namespace detail

/// Percentile linear stretch, per channel. Degenerate channels (hi == lo)
/// pass through unchanged.
inline ImageBuffer contrast_stretch(const ImageBuffer& img, const EnhanceParams& params = {}) {
  if (!img.valid()) throw InvariantError("contrast_stretch: invalid image");
  if (!(params.p_low < params.p_high))
    throw std::invalid_argument("contrast_stretch: need p_low < p_high");

  ImageBuffer out = img;
  const std::int64_t n = static_cast<std::int64_t>(img.width) * img.height;
  for (int c = 0; c < img.channels; ++c) {
    std::array<std::int64_t, 256> hist{};
    for (std::size_t i = c; i < img.pixels.size(); i += img.channels) ++hist[img.pixels[i]];
    const int lo = detail::percentile_value(hist, n, params.p_low);
    const int hi = detail::percentile_value(hist, n, params.p_high);
    if (hi == lo) continue;

    std::array<std::uint8_t, 256> lut;
    for (int v = 0; v < 256; ++v) {
      const long mapped = std::lround(255.0 * (v - lo) / static_cast<double>(hi - lo));
      lut[v] = static_cast<std::uint8_t>(std::clamp(mapped, 0L, 255L));
    }
    for (std::size_t i = c; i < out.pixels.size(); i += out.channels)
      out.pixels[i] = lut[img.pixels[i]];
  }
  return out;
}

/// Gaussian-weighted mean over the (2r+1)^2 window, restricted to neighbors
/// within max_delta of the center value; the center always participates.
/// Borders truncate the neighborhood. Per channel on RGB.
inline ImageBuffer selective_gaussian_blur(const ImageBuffer& img, const BlurParams& params = {}) {
  if (!img.valid()) throw InvariantError("selective_gaussian_blur: invalid image");
  if (params.radius < 1) throw std::invalid_argument("selective_gaussian_blur: radius must be >= 1");
  if (params.max_delta < 0 || params.max_delta > 255)
    throw std::invalid_argument("selective_gaussian_blur: max_delta must be in [0, 255]");

  const int r = params.radius;
  const double sigma = params.sigma();
  const int side = 2 * r + 1;
  std::vector<double> kernel(static_cast<std::size_t>(side) * side);
  for (int dy = -r; dy <= r; ++dy)
    for (int dx = -r; dx <= r; ++dx)
      kernel[static_cast<std::size_t>(dy + r) * side + (dx + r)] =
          std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));

  ImageBuffer out(img.width, img.height, img.channels);
  for (int y = 0; y < img.height; ++y) {
    const int y0 = std::max(0, y - r), y1 = std::min(img.height - 1, y + r);
    for (int x = 0; x < img.width; ++x) {
      const int x0 = std::max(0, x - r), x1 = std::min(img.width - 1, x + r);
      for (int c = 0; c < img.channels; ++c) {
        const int center = img.at(x, y, c);
        double num = 0.0, den = 0.0;
        for (int qy = y0; qy <= y1; ++qy) {
          const std::size_t krow = static_cast<std::size_t>(qy - y + r) * side;
          const std::uint8_t* srow = img.pixels.data() + img.index(x0, qy, c);
          for (int qx = x0; qx <= x1; ++qx, srow += img.channels) {
            const int v = *srow;
            if (std::abs(v - center) > params.max_delta) continue;
            const double w = kernel[krow + (qx - x + r)];
            num += w * v;
            den += w;
          }
        }
        const long rounded = std::lround(num / den);
        out.at(x, y, c) = static_cast<std::uint8_t>(std::clamp(rounded, 0L, 255L));
      }
    }
  }
  return out;
}

}  // namespace tiledet
