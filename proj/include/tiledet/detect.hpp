#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "tiledet/types.hpp"

namespace tiledet {

struct BaselineParams {
  double k_sigma = 3.5;   // threshold multiplier on the patch standard deviation
  int min_side = 5;       // accepted component bbox side band, pixels
  int max_side = 50;
  double conf_floor = 0.1;

  bool operator==(const BaselineParams&) const = default;
};

struct ExternalParams {
  std::string command;     // run via /bin/sh -c
  int timeout_ms = 10000;  // per-request

  bool operator==(const ExternalParams&) const = default;
};

/// Which implementation fills the per-patch detector slot.
struct DetectorSpec {
  enum class Kind { baseline, external };
  Kind kind = Kind::baseline;
  BaselineParams baseline;
  ExternalParams external;

  bool operator==(const DetectorSpec&) const = default;
};

/// Per-patch detector contract: patch-local boxes clipped to the patch,
/// scores in [0,1], empty list is a valid result. Implementations must be
/// callable from multiple workers at once.
class Detector {
 public:
  virtual ~Detector() = default;
  virtual std::vector<Detection> detect(const ImageBuffer& patch) = 0;
};

namespace detail {

inline std::vector<std::uint8_t> to_gray(const ImageBuffer& img) {
  if (img.channels == 1) return img.pixels;
  std::vector<std::uint8_t> gray(static_cast<std::size_t>(img.width) * img.height);
  for (std::size_t i = 0, p = 0; i < gray.size(); ++i, p += 3) {
    const long v = std::lround(0.299 * img.pixels[p] + 0.587 * img.pixels[p + 1] +
                               0.114 * img.pixels[p + 2]);
    gray[i] = static_cast<std::uint8_t>(std::clamp(v, 0L, 255L));
  }
  return gray;
}

}  // namespace detail

/// Mean/sigma anomaly detector: thresholds |v - mean| > k_sigma * sigma
/// (bright or dark), labels 8-connected components, keeps those whose bbox
/// sides fall in [min_side, max_side]. Deterministic stand-in for a trained
/// per-patch model.
inline std::vector<Detection> baseline_detect(const ImageBuffer& patch,
                                              const BaselineParams& params = {}) {
  if (!patch.valid()) throw InvariantError("baseline_detect: invalid patch");

  const std::vector<std::uint8_t> gray = detail::to_gray(patch);
  const std::size_t n = gray.size();
  double sum = 0.0;
  for (const std::uint8_t v : gray) sum += v;
  const double mean = sum / static_cast<double>(n);
  double var = 0.0;
  for (const std::uint8_t v : gray) {
    const double d = v - mean;
    var += d * d;
  }
  const double sigma = std::sqrt(var / static_cast<double>(n));
  if (sigma == 0.0) return {};

  const double thresh = params.k_sigma * sigma;
  const int w = patch.width, h = patch.height;
  std::vector<std::uint8_t> mask(n);
  for (std::size_t i = 0; i < n; ++i) mask[i] = std::abs(gray[i] - mean) > thresh;

  // 8-connected component labeling, row-major scan, iterative flood fill.
  std::vector<std::uint8_t> visited(n, 0);
  std::vector<std::size_t> stack;
  std::vector<Detection> dets;
  const double denom = 255.0 - mean;

  for (std::size_t start = 0; start < n; ++start) {
    if (!mask[start] || visited[start]) continue;
    int min_x = w, min_y = h, max_x = -1, max_y = -1;
    double max_dev = 0.0;
    stack.clear();
    stack.push_back(start);
    visited[start] = 1;
    while (!stack.empty()) {
      const std::size_t cur = stack.back();
      stack.pop_back();
      const int cx = static_cast<int>(cur % w);
      const int cy = static_cast<int>(cur / w);
      min_x = std::min(min_x, cx);
      min_y = std::min(min_y, cy);
      max_x = std::max(max_x, cx);
      max_y = std::max(max_y, cy);
      max_dev = std::max(max_dev, std::abs(gray[cur] - mean));
      for (int dy = -1; dy <= 1; ++dy) {
        const int ny = cy + dy;
        if (ny < 0 || ny >= h) continue;
        for (int dx = -1; dx <= 1; ++dx) {
          const int nx = cx + dx;
          if (nx < 0 || nx >= w || (dx == 0 && dy == 0)) continue;
          const std::size_t ni = static_cast<std::size_t>(ny) * w + nx;
          if (mask[ni] && !visited[ni]) {
            visited[ni] = 1;
            stack.push_back(ni);
          }
        }
      }
    }
    const int bw = max_x - min_x + 1;
    const int bh = max_y - min_y + 1;
    if (bw < params.min_side || bw > params.max_side || bh < params.min_side ||
        bh > params.max_side)
      continue;
    const double raw = denom > 0.0 ? max_dev / denom : 1.0;
    Detection d;
    d.box = BBox{min_x, min_y, bw, bh};
    d.score = std::max(params.conf_floor, std::min(1.0, raw));
    dets.push_back(std::move(d));
  }

  std::sort(dets.begin(), dets.end(), [](const Detection& a, const Detection& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.box < b.box;
  });
  return dets;
}

class BaselineDetector final : public Detector {
 public:
  explicit BaselineDetector(const BaselineParams& params = {}) : params_(params) {}
  std::vector<Detection> detect(const ImageBuffer& patch) override {
    return baseline_detect(patch, params_);
  }

 private:
  BaselineParams params_;
};

}  // namespace tiledet
