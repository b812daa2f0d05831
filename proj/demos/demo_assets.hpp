#pragma once

// Shared asset builders for the demo programs: a water-like background and
// simple cutout sprites with full-extent alpha coverage.

#include <cmath>
#include <tiledet/image_io.hpp>
#include <tiledet/rng.hpp>
#include <tiledet/synth.hpp>

namespace demo {

inline tiledet::ImageBuffer make_water_background(tiledet::Rng& rng, int width, int height) {
  tiledet::ImageBuffer img;
  img.width = width;
  img.height = height;
  img.channels = 3;
  img.pixels.resize(static_cast<std::size_t>(width) * height * 3);
  for (int y = 0; y < height; ++y) {
    const double band = 6.0 * std::sin(y * 0.11) + 4.0 * std::sin(y * 0.031);
    for (int x = 0; x < width; ++x) {
      const int n = rng.uniform_int(-8, 8);
      const int ripple = static_cast<int>(band + 3.0 * std::sin((x + y) * 0.07));
      auto px = [&](int base) {
        return static_cast<std::uint8_t>(std::clamp(base + ripple + n, 0, 255));
      };
      img.pixels[img.index(x, y, 0)] = px(38);
      img.pixels[img.index(x, y, 1)] = px(62);
      img.pixels[img.index(x, y, 2)] = px(88);
    }
  }
  return img;
}

// Person-shaped cutout: head, arms spanning the full width, torso, legs.
// Opaque pixels touch all four sprite edges, so the placement annotation is
// the full sprite extent.
inline tiledet::Sprite make_person_sprite(int width = 20, int height = 44) {
  tiledet::Sprite sp;
  sp.rgb.width = width;
  sp.rgb.height = height;
  sp.rgb.channels = 3;
  sp.rgb.pixels.assign(static_cast<std::size_t>(width) * height * 3, 0);
  sp.alpha.assign(static_cast<std::size_t>(width) * height, 0);

  auto put = [&](int x, int y, int r, int g, int b) {
    if (x < 0 || y < 0 || x >= width || y >= height) return;
    sp.rgb.pixels[sp.rgb.index(x, y, 0)] = static_cast<std::uint8_t>(r);
    sp.rgb.pixels[sp.rgb.index(x, y, 1)] = static_cast<std::uint8_t>(g);
    sp.rgb.pixels[sp.rgb.index(x, y, 2)] = static_cast<std::uint8_t>(b);
    sp.alpha[static_cast<std::size_t>(y) * width + x] = 255;
  };

  const int cx = width / 2;
  const int head_r = width / 4;
  for (int y = 0; y <= 2 * head_r; ++y)  // head touches the top edge
    for (int x = -head_r; x <= head_r; ++x)
      if (x * x + (y - head_r) * (y - head_r) <= head_r * head_r)
        put(cx + x, y, 235, 200, 170);
  const int shoulder = 2 * head_r + 1;
  for (int y = shoulder; y < shoulder + 4; ++y)  // arms span the full width
    for (int x = 0; x < width; ++x) put(x, y, 240, 120, 30);
  const int torso_bottom = height * 6 / 10;
  for (int y = shoulder; y < torso_bottom; ++y)
    for (int x = cx - width / 4; x <= cx + width / 4; ++x) put(x, y, 240, 120, 30);
  for (int y = torso_bottom; y < height; ++y) {  // legs reach the bottom edge
    for (int x = cx - width / 4; x < cx - 1; ++x) put(x, y, 40, 45, 60);
    for (int x = cx + 1; x <= cx + width / 4; ++x) put(x, y, 40, 45, 60);
  }
  return sp;
}

inline tiledet::Sprite make_buoy_sprite(int side = 16) {
  tiledet::Sprite sp;
  sp.rgb.width = side;
  sp.rgb.height = side;
  sp.rgb.channels = 3;
  sp.rgb.pixels.assign(static_cast<std::size_t>(side) * side * 3, 0);
  sp.alpha.assign(static_cast<std::size_t>(side) * side, 0);
  const double c = (side - 1) / 2.0, r = side / 2.0;
  for (int y = 0; y < side; ++y)
    for (int x = 0; x < side; ++x)
      if ((x - c) * (x - c) + (y - c) * (y - c) <= r * r) {
        const bool stripe = y < side / 2;
        sp.rgb.pixels[sp.rgb.index(x, y, 0)] = stripe ? 230 : 240;
        sp.rgb.pixels[sp.rgb.index(x, y, 1)] = stripe ? 40 : 240;
        sp.rgb.pixels[sp.rgb.index(x, y, 2)] = stripe ? 40 : 240;
        sp.alpha[static_cast<std::size_t>(y) * side + x] = 255;
      }
  return sp;
}

inline void write_sprite_png(const tiledet::Sprite& sp, const std::filesystem::path& path) {
  tiledet::write_png_with_alpha(sp.rgb, sp.alpha, path);
}

}  // namespace demo
