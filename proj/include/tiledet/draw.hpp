#pragma once

#include <array>
#include <cstdio>
#include <string>
#include <vector>

#include "tiledet/types.hpp"

namespace tiledet {
namespace detail {

// 5x7 bitmap glyphs for '0'-'9' and '.', one 5-bit value per row.
inline const std::array<std::uint8_t, 7>* glyph_rows(char c) {
  static const std::array<std::array<std::uint8_t, 7>, 11> glyphs = {{
      {0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E},  // 0
      {0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E},  // 1
      {0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F},  // 2
      {0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E},  // 3
      {0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02},  // 4
      {0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E},  // 5
      {0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E},  // 6
      {0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08},  // 7
      {0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E},  // 8
      {0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C},  // 9
      {0x00, 0x00, 0x00, 0x00, 0x00, 0x0C, 0x0C},  // .
  }};
  if (c >= '0' && c <= '9') return &glyphs[c - '0'];
  if (c == '.') return &glyphs[10];
  return nullptr;
}

inline void put_pixel(ImageBuffer& img, int x, int y, const std::array<std::uint8_t, 3>& color) {
  if (x < 0 || y < 0 || x >= img.width || y >= img.height) return;
  for (int c = 0; c < img.channels; ++c)
    img.pixels[img.index(x, y, c)] = color[std::min(c, 2)];
}

}  // namespace detail

/// Rectangle outline of the given thickness, clipped to the image.
inline void draw_box(ImageBuffer& img, const BBox& box,
                     const std::array<std::uint8_t, 3>& color, int thickness = 2) {
  for (int t = 0; t < thickness; ++t) {
    const int x0 = box.x - t, y0 = box.y - t;
    const int x1 = box.x + box.w - 1 + t, y1 = box.y + box.h - 1 + t;
    for (int x = x0; x <= x1; ++x) {
      detail::put_pixel(img, x, y0, color);
      detail::put_pixel(img, x, y1, color);
    }
    for (int y = y0; y <= y1; ++y) {
      detail::put_pixel(img, x0, y, color);
      detail::put_pixel(img, x1, y, color);
    }
  }
}

/// Digits and dots only; unknown characters advance the pen without ink.
inline void draw_text(ImageBuffer& img, int x, int y, const std::string& text,
                      const std::array<std::uint8_t, 3>& color) {
  int pen = x;
  for (const char c : text) {
    const auto* rows = detail::glyph_rows(c);
    if (rows)
      for (int ry = 0; ry < 7; ++ry)
        for (int rx = 0; rx < 5; ++rx)
          if ((*rows)[ry] & (1 << (4 - rx))) detail::put_pixel(img, pen + rx, y + ry, color);
    pen += 6;  // 5 px glyph + 1 px gap
  }
}

/// Green 2 px boxes with the score (two decimals) above each, or inside the
/// top edge when the box touches the top of the frame.
inline void draw_detections(ImageBuffer& img, const std::vector<Detection>& dets) {
  const std::array<std::uint8_t, 3> color{0, 255, 0};
  for (const auto& d : dets) {
    draw_box(img, d.box, color, 2);
    char label[16];
    std::snprintf(label, sizeof(label), "%.2f", d.score);
    const int ty = d.box.y >= 10 ? d.box.y - 10 : d.box.y + 2;
    draw_text(img, d.box.x, ty, label, color);
  }
}

}  // namespace tiledet
