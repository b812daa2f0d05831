#pragma once

#include <algorithm>
#include <compare>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace tiledet {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Filesystem / OS-level failure (missing file, unwritable directory, dead child process).
struct IoError : Error {
  using Error::Error;
};

/// Malformed document or wire-protocol line.
struct ParseError : Error {
  using Error::Error;
};

/// Well-formed input that violates a data invariant (bad box, duplicate path, ...).
struct InvariantError : Error {
  using Error::Error;
};

/// Per-patch detector failure (timeout, child crash, protocol error).
struct DetectorError : Error {
  using Error::Error;
};

// ---------------------------------------------------------------------------
// ImageBuffer: 8-bit raster, row-major, interleaved channels (1 or 3).
// ---------------------------------------------------------------------------
struct ImageBuffer {
  int width = 0;
  int height = 0;
  int channels = 1;  // 1 = grayscale, 3 = RGB
  std::vector<std::uint8_t> pixels;

  ImageBuffer() = default;
  ImageBuffer(int w, int h, int c, std::uint8_t fill = 0)
      : width(w), height(h), channels(c),
        pixels(static_cast<std::size_t>(w) * h * c, fill) {}

  bool valid() const {
    return width >= 1 && height >= 1 && (channels == 1 || channels == 3) &&
           pixels.size() == static_cast<std::size_t>(width) * height * channels;
  }

  std::size_t index(int x, int y, int c = 0) const {
    return (static_cast<std::size_t>(y) * width + x) * channels + c;
  }
  std::uint8_t at(int x, int y, int c = 0) const { return pixels[index(x, y, c)]; }
  std::uint8_t& at(int x, int y, int c = 0) { return pixels[index(x, y, c)]; }

  bool operator==(const ImageBuffer&) const = default;
};

// ---------------------------------------------------------------------------
// BBox: top-left origin, half-open pixel extent [x, x+w) x [y, y+h).
// ---------------------------------------------------------------------------
struct BBox {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;

  bool valid() const { return w > 0 && h > 0; }
  long long area() const { return static_cast<long long>(w) * h; }

  auto operator<=>(const BBox&) const = default;
};

struct Detection {
  BBox box;
  double score = 0.0;  // in [0, 1]
  std::string class_label = "person";

  bool operator==(const Detection&) const = default;
};

struct GroundTruthBox {
  BBox box;
  std::string class_label = "person";

  bool operator==(const GroundTruthBox&) const = default;
};

// ---------------------------------------------------------------------------
// Box arithmetic
// ---------------------------------------------------------------------------

/// Intersection over union of two valid boxes. Symmetric, 0 when disjoint, 1 when identical.
inline double iou(const BBox& a, const BBox& b) {
  const int ix0 = std::max(a.x, b.x);
  const int iy0 = std::max(a.y, b.y);
  const int ix1 = std::min(a.x + a.w, b.x + b.w);
  const int iy1 = std::min(a.y + a.h, b.y + b.h);
  if (ix1 <= ix0 || iy1 <= iy0) return 0.0;
  const long long inter = static_cast<long long>(ix1 - ix0) * (iy1 - iy0);
  const long long uni = a.area() + b.area() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

/// Box intersected with [0,width) x [0,height); nullopt when the intersection is empty.
inline std::optional<BBox> clip_box(const BBox& b, int width, int height) {
  const int x0 = std::max(b.x, 0);
  const int y0 = std::max(b.y, 0);
  const int x1 = std::min(b.x + b.w, width);
  const int y1 = std::min(b.y + b.h, height);
  if (x1 <= x0 || y1 <= y0) return std::nullopt;
  return BBox{x0, y0, x1 - x0, y1 - y0};
}

/// True when `inner` lies fully inside `outer`.
inline bool contains(const BBox& outer, const BBox& inner) {
  return inner.x >= outer.x && inner.y >= outer.y &&
         inner.x + inner.w <= outer.x + outer.w &&
         inner.y + inner.h <= outer.y + outer.h;
}

/// Edge-to-edge distance squared between two boxes; 0 when they touch or overlap.
inline long long box_gap_sq(const BBox& a, const BBox& b) {
  const int dx = std::max({0, a.x - (b.x + b.w), b.x - (a.x + a.w)});
  const int dy = std::max({0, a.y - (b.y + b.h), b.y - (a.y + a.h)});
  return static_cast<long long>(dx) * dx + static_cast<long long>(dy) * dy;
}

}  // namespace tiledet
