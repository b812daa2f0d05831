#pragma once

#include <cmath>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "tiledet/rng.hpp"
#include "tiledet/types.hpp"

namespace tiledet {

enum class AugmentKind { hflip, vflip, rot90, rot180, rot270, zoom };

struct AugmentOp {
  AugmentKind kind = AugmentKind::hflip;
  std::optional<double> factor;  // zoom only; nullopt means sample per image
};

/// Parse an op token: "hflip", "vflip", "rot90", "rot180", "rot270",
/// "zoom" (factor sampled later), or "zoom:F" with F in (0, 10].
inline AugmentOp parse_augment_op(const std::string& token) {
  AugmentOp op;
  if (token == "hflip") {
    op.kind = AugmentKind::hflip;
  } else if (token == "vflip") {
    op.kind = AugmentKind::vflip;
  } else if (token == "rot90") {
    op.kind = AugmentKind::rot90;
  } else if (token == "rot180") {
    op.kind = AugmentKind::rot180;
  } else if (token == "rot270") {
    op.kind = AugmentKind::rot270;
  } else if (token == "zoom") {
    op.kind = AugmentKind::zoom;
  } else if (token.rfind("zoom:", 0) == 0) {
    op.kind = AugmentKind::zoom;
    std::size_t used = 0;
    double f = 0.0;
    try {
      f = std::stod(token.substr(5), &used);
    } catch (const std::exception&) {
      throw ParseError("bad zoom factor in op: " + token);
    }
    if (used != token.size() - 5 || !(f > 0.0) || f > 10.0)
      throw ParseError("zoom factor out of range (0, 10]: " + token);
    op.factor = f;
  } else {
    throw ParseError("unknown augment op: " + token);
  }
  return op;
}

/// Uniform zoom factor in [0.5, 2.0] for ops given as bare "zoom".
inline double sample_zoom_factor(Rng& rng) { return 0.5 + 1.5 * rng.uniform_double(); }

/// Filename-safe suffix naming the op, e.g. "hflip", "zoom_1.50".
inline std::string op_suffix(const AugmentOp& op, std::optional<double> realized = {}) {
  switch (op.kind) {
    case AugmentKind::hflip: return "hflip";
    case AugmentKind::vflip: return "vflip";
    case AugmentKind::rot90: return "rot90";
    case AugmentKind::rot180: return "rot180";
    case AugmentKind::rot270: return "rot270";
    case AugmentKind::zoom: {
      const double f = realized ? *realized : op.factor.value_or(0.0);
      char buf[32];
      std::snprintf(buf, sizeof(buf), "zoom_%.2f", f);
      return buf;
    }
  }
  return "op";
}

struct AugmentResult {
  ImageBuffer image;
  std::vector<GroundTruthBox> boxes;
  double realized_factor = 1.0;  // zoom only
};

namespace detail {

inline ImageBuffer hflip_image(const ImageBuffer& src) {
  ImageBuffer dst;
  dst.width = src.width;
  dst.height = src.height;
  dst.channels = src.channels;
  dst.pixels.resize(src.pixels.size());
  for (int y = 0; y < src.height; ++y)
    for (int x = 0; x < src.width; ++x)
      for (int c = 0; c < src.channels; ++c)
        dst.pixels[dst.index(x, y, c)] = src.pixels[src.index(src.width - 1 - x, y, c)];
  return dst;
}

inline ImageBuffer vflip_image(const ImageBuffer& src) {
  ImageBuffer dst;
  dst.width = src.width;
  dst.height = src.height;
  dst.channels = src.channels;
  dst.pixels.resize(src.pixels.size());
  const std::size_t row = static_cast<std::size_t>(src.width) * src.channels;
  for (int y = 0; y < src.height; ++y)
    std::copy_n(src.pixels.data() + static_cast<std::size_t>(src.height - 1 - y) * row, row,
                dst.pixels.data() + static_cast<std::size_t>(y) * row);
  return dst;
}

// Clockwise quarter turn: W x H becomes H x W, dst(nx, ny) = src(ny, H-1-nx).
inline ImageBuffer rot90_image(const ImageBuffer& src) {
  ImageBuffer dst;
  dst.width = src.height;
  dst.height = src.width;
  dst.channels = src.channels;
  dst.pixels.resize(src.pixels.size());
  for (int ny = 0; ny < dst.height; ++ny)
    for (int nx = 0; nx < dst.width; ++nx)
      for (int c = 0; c < src.channels; ++c)
        dst.pixels[dst.index(nx, ny, c)] = src.pixels[src.index(ny, src.height - 1 - nx, c)];
  return dst;
}

inline BBox hflip_box(const BBox& b, int W) { return {W - b.x - b.w, b.y, b.w, b.h}; }
inline BBox vflip_box(const BBox& b, int H) { return {b.x, H - b.y - b.h, b.w, b.h}; }
inline BBox rot90_box(const BBox& b, int H) { return {H - b.y - b.h, b.x, b.h, b.w}; }

// Nearest-neighbor scale to W' x H', then recenter onto the original canvas:
// crop when larger, edge-replicate when smaller. off = (W'-W)/2 works for both
// directions because C++ integer division truncates toward zero.
inline ImageBuffer zoom_image(const ImageBuffer& src, int zw, int zh) {
  ImageBuffer zoomed;
  zoomed.width = zw;
  zoomed.height = zh;
  zoomed.channels = src.channels;
  zoomed.pixels.resize(static_cast<std::size_t>(zw) * zh * src.channels);
  for (int j = 0; j < zh; ++j) {
    const int sy = static_cast<int>(static_cast<long long>(j) * src.height / zh);
    for (int i = 0; i < zw; ++i) {
      const int sx = static_cast<int>(static_cast<long long>(i) * src.width / zw);
      for (int c = 0; c < src.channels; ++c)
        zoomed.pixels[zoomed.index(i, j, c)] = src.pixels[src.index(sx, sy, c)];
    }
  }

  const int off_x = (zw - src.width) / 2;
  const int off_y = (zh - src.height) / 2;
  ImageBuffer dst;
  dst.width = src.width;
  dst.height = src.height;
  dst.channels = src.channels;
  dst.pixels.resize(src.pixels.size());
  for (int y = 0; y < dst.height; ++y) {
    const int zy = std::clamp(y + off_y, 0, zh - 1);
    for (int x = 0; x < dst.width; ++x) {
      const int zx = std::clamp(x + off_x, 0, zw - 1);
      for (int c = 0; c < dst.channels; ++c)
        dst.pixels[dst.index(x, y, c)] = zoomed.pixels[zoomed.index(zx, zy, c)];
    }
  }
  return dst;
}

}  // namespace detail

/// Apply one op to an image and its boxes. Flips and rotations keep every box;
/// zoom scales boxes by the realized ratios W'/W and H'/H, clips to the canvas,
/// and drops a box when the clip removes at least half its scaled area or
/// collapses it to an empty rectangle.
inline AugmentResult augment(const ImageBuffer& image, const std::vector<GroundTruthBox>& boxes,
                             const AugmentOp& op, Rng* rng = nullptr) {
  if (!image.valid()) throw InvariantError("augment: invalid image");
  const int W = image.width, H = image.height;
  AugmentResult out;

  auto keep_all = [&](auto&& fn) {
    out.boxes.reserve(boxes.size());
    for (const auto& gt : boxes) out.boxes.push_back({fn(gt.box), gt.class_label});
  };

  switch (op.kind) {
    case AugmentKind::hflip:
      out.image = detail::hflip_image(image);
      keep_all([&](const BBox& b) { return detail::hflip_box(b, W); });
      return out;
    case AugmentKind::vflip:
      out.image = detail::vflip_image(image);
      keep_all([&](const BBox& b) { return detail::vflip_box(b, H); });
      return out;
    case AugmentKind::rot90:
      out.image = detail::rot90_image(image);
      keep_all([&](const BBox& b) { return detail::rot90_box(b, H); });
      return out;
    case AugmentKind::rot180:
      out.image = detail::rot90_image(detail::rot90_image(image));
      keep_all([&](const BBox& b) { return detail::rot90_box(detail::rot90_box(b, H), W); });
      return out;
    case AugmentKind::rot270:
      out.image = detail::rot90_image(detail::rot90_image(detail::rot90_image(image)));
      keep_all([&](const BBox& b) {
        return detail::rot90_box(detail::rot90_box(detail::rot90_box(b, H), W), H);
      });
      return out;
    case AugmentKind::zoom:
      break;
  }

  double f = 0.0;
  if (op.factor) {
    f = *op.factor;
  } else {
    if (!rng) throw InvariantError("augment: bare zoom needs an rng to sample the factor");
    f = sample_zoom_factor(*rng);
  }
  const int zw = static_cast<int>(std::lround(f * W));
  const int zh = static_cast<int>(std::lround(f * H));
  if (zw < 1 || zh < 1) throw InvariantError("augment: zoom factor collapses the image");
  out.realized_factor = f;
  out.image = detail::zoom_image(image, zw, zh);

  const double sx = static_cast<double>(zw) / W;
  const double sy = static_cast<double>(zh) / H;
  const int off_x = (zw - W) / 2;
  const int off_y = (zh - H) / 2;
  for (const auto& gt : boxes) {
    const double rx0 = gt.box.x * sx - off_x;
    const double ry0 = gt.box.y * sy - off_y;
    const double rx1 = (gt.box.x + gt.box.w) * sx - off_x;
    const double ry1 = (gt.box.y + gt.box.h) * sy - off_y;
    const double scaled_area = (rx1 - rx0) * (ry1 - ry0);
    const double cx0 = std::max(0.0, rx0), cy0 = std::max(0.0, ry0);
    const double cx1 = std::min(static_cast<double>(W), rx1);
    const double cy1 = std::min(static_cast<double>(H), ry1);
    if (cx1 <= cx0 || cy1 <= cy0) continue;
    const double clipped_area = (cx1 - cx0) * (cy1 - cy0);
    if (clipped_area < 0.5 * scaled_area) continue;
    BBox nb;
    nb.x = static_cast<int>(std::lround(cx0));
    nb.y = static_cast<int>(std::lround(cy0));
    nb.w = static_cast<int>(std::lround(cx1)) - nb.x;
    nb.h = static_cast<int>(std::lround(cy1)) - nb.y;
    if (nb.w <= 0 || nb.h <= 0) continue;
    out.boxes.push_back({nb, gt.class_label});
  }
  return out;
}

}  // namespace tiledet
