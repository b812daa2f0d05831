#pragma once

#include <cstring>
#include <stdexcept>
#include <vector>

#include "tiledet/types.hpp"

namespace tiledet {

struct Tile {
  int col = 0;
  int row = 0;
  int origin_x = 0;
  int origin_y = 0;
  int width = 0;
  int height = 0;

  bool operator==(const Tile&) const = default;
};

/// Overlapping patch grid over one frame; tiles ordered row-major.
struct TilePlan {
  int image_width = 0;
  int image_height = 0;
  int patch = 200;
  int overlap = 50;
  std::vector<Tile> tiles;

  bool operator==(const TilePlan&) const = default;
};

namespace detail {

// Origins along one axis: 0, s, 2s, ... with stride s = patch - overlap,
// then a final origin clamped to length - patch so the border is covered
// without fabricating pixels. length <= patch collapses to a single origin.
inline std::vector<int> axis_origins(int length, int patch, int overlap) {
  std::vector<int> origins;
  if (length <= patch) {
    origins.push_back(0);
    return origins;
  }
  const int stride = patch - overlap;
  for (int o = 0; o + patch < length; o += stride) origins.push_back(o);
  origins.push_back(length - patch);
  return origins;
}

}  // namespace detail

inline TilePlan plan_tiles(int width, int height, int patch = 200, int overlap = 50) {
  if (width < 1 || height < 1) throw std::invalid_argument("plan_tiles: zero image dimension");
  if (patch < 1) throw std::invalid_argument("plan_tiles: patch must be >= 1");
  if (overlap < 0 || overlap >= patch) throw std::invalid_argument("plan_tiles: need 0 <= overlap < patch");

  TilePlan plan{width, height, patch, overlap, {}};
  const std::vector<int> xs = detail::axis_origins(width, patch, overlap);
  const std::vector<int> ys = detail::axis_origins(height, patch, overlap);
  const int tile_w = std::min(patch, width);
  const int tile_h = std::min(patch, height);
  plan.tiles.reserve(xs.size() * ys.size());
  for (int r = 0; r < static_cast<int>(ys.size()); ++r)
    for (int c = 0; c < static_cast<int>(xs.size()); ++c)
      plan.tiles.push_back(Tile{c, r, xs[c], ys[r], tile_w, tile_h});
  return plan;
}

/// Copy of the tile's sub-rectangle; the source frame is untouched.
inline ImageBuffer extract_patch(const ImageBuffer& image, const Tile& tile) {
  if (tile.width < 1 || tile.height < 1 || tile.origin_x < 0 || tile.origin_y < 0 ||
      tile.origin_x + tile.width > image.width || tile.origin_y + tile.height > image.height)
    throw std::invalid_argument("extract_patch: tile outside image");

  ImageBuffer out(tile.width, tile.height, image.channels);
  const std::size_t row_bytes = static_cast<std::size_t>(tile.width) * image.channels;
  for (int y = 0; y < tile.height; ++y) {
    const std::uint8_t* src = image.pixels.data() + image.index(tile.origin_x, tile.origin_y + y);
    std::memcpy(out.pixels.data() + out.index(0, y), src, row_bytes);
  }
  return out;
}

/// Patch-local detection translated into image space; score and class unchanged.
inline Detection to_image_coords(const Tile& tile, const Detection& d) {
  const BBox& b = d.box;
  if (!b.valid() || b.x < 0 || b.y < 0 || b.x + b.w > tile.width || b.y + b.h > tile.height)
    throw std::invalid_argument("to_image_coords: box outside patch extent");
  Detection out = d;
  out.box.x += tile.origin_x;
  out.box.y += tile.origin_y;
  return out;
}

}  // namespace tiledet
