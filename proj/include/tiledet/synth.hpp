#pragma once

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "tiledet/enhance.hpp"
#include "tiledet/image_io.hpp"
#include "tiledet/manifest.hpp"
#include "tiledet/rng.hpp"
#include "tiledet/types.hpp"

namespace tiledet {

struct Sprite {
  ImageBuffer rgb;                  // 3-channel cutout
  std::vector<std::uint8_t> alpha;  // same W x H; 255 = opaque
};

struct SynthParams {
  int scenes = 10;
  int targets_min = 1, targets_max = 5;
  int side_min = 5, side_max = 50;  // longer side of each placed target
  int min_separation = 10;          // edge-to-edge, Euclidean on the axis gaps
  std::optional<BlurParams> blur = BlurParams{};  // nullopt disables
  std::uint64_t seed = 0;
  int workers = 0;  // <=0 resolves to the logical CPU count
};

struct SynthConfig {
  std::vector<std::string> background_paths;
  std::vector<std::string> sprite_paths;
  SynthParams params;
};

struct SceneAssets {
  std::vector<ImageBuffer> backgrounds;  // 3-channel
  std::vector<Sprite> sprites;
};

struct ComposedScene {
  ImageBuffer image;
  std::vector<GroundTruthBox> boxes;
  int placement_failures = 0;  // targets dropped after exhausting attempts
};

namespace detail {

inline void check_synth_params(const SynthParams& p, const SceneAssets& assets) {
  if (assets.backgrounds.empty()) throw InvariantError("synth: no backgrounds");
  if (assets.sprites.empty()) throw InvariantError("synth: no sprites");
  if (p.scenes < 0) throw InvariantError("synth: scenes must be >= 0");
  if (p.targets_min < 0 || p.targets_max < p.targets_min)
    throw InvariantError("synth: bad targets range");
  if (p.side_min < 1 || p.side_max < p.side_min)
    throw InvariantError("synth: bad target side range");
  if (p.min_separation < 0) throw InvariantError("synth: min_separation must be >= 0");
  for (const auto& bg : assets.backgrounds) {
    if (bg.channels != 3) throw InvariantError("synth: backgrounds must be 3-channel");
    if (p.side_max > std::min(bg.width, bg.height))
      throw InvariantError("synth: target side range exceeds a background dimension");
  }
  for (const auto& sp : assets.sprites) {
    if (sp.rgb.channels != 3) throw InvariantError("synth: sprites must be 3-channel");
    if (sp.alpha.size() != static_cast<std::size_t>(sp.rgb.width) * sp.rgb.height)
      throw InvariantError("synth: sprite alpha plane size mismatch");
    bool any = false;
    for (const auto a : sp.alpha)
      if (a) {
        any = true;
        break;
      }
    if (!any) throw InvariantError("synth: sprite has no opaque pixels");
  }
}

// Nearest-neighbor resize of cutout and alpha together.
inline Sprite scale_sprite(const Sprite& src, int dw, int dh) {
  Sprite dst;
  dst.rgb.width = dw;
  dst.rgb.height = dh;
  dst.rgb.channels = 3;
  dst.rgb.pixels.resize(static_cast<std::size_t>(dw) * dh * 3);
  dst.alpha.resize(static_cast<std::size_t>(dw) * dh);
  for (int j = 0; j < dh; ++j) {
    const int sy = static_cast<int>(static_cast<long long>(j) * src.rgb.height / dh);
    for (int i = 0; i < dw; ++i) {
      const int sx = static_cast<int>(static_cast<long long>(i) * src.rgb.width / dw);
      for (int c = 0; c < 3; ++c)
        dst.rgb.pixels[dst.rgb.index(i, j, c)] = src.rgb.pixels[src.rgb.index(sx, sy, c)];
      dst.alpha[static_cast<std::size_t>(j) * dw + i] =
          src.alpha[static_cast<std::size_t>(sy) * src.rgb.width + sx];
    }
  }
  return dst;
}

// Bounding box of alpha > 0 pixels, in sprite-local coordinates.
inline BBox opaque_bbox(const Sprite& sp) {
  int x0 = sp.rgb.width, y0 = sp.rgb.height, x1 = -1, y1 = -1;
  for (int y = 0; y < sp.rgb.height; ++y)
    for (int x = 0; x < sp.rgb.width; ++x)
      if (sp.alpha[static_cast<std::size_t>(y) * sp.rgb.width + x]) {
        x0 = std::min(x0, x);
        y0 = std::min(y0, y);
        x1 = std::max(x1, x);
        y1 = std::max(y1, y);
      }
  if (x1 < 0) throw InvariantError("synth: scaled sprite lost all opaque pixels");
  return {x0, y0, x1 - x0 + 1, y1 - y0 + 1};
}

// v = sp*a + bg*(255-a), rounded by (v+127)/255.
inline void composite_at(ImageBuffer& scene, const Sprite& sp, int px, int py) {
  for (int y = 0; y < sp.rgb.height; ++y)
    for (int x = 0; x < sp.rgb.width; ++x) {
      const int a = sp.alpha[static_cast<std::size_t>(y) * sp.rgb.width + x];
      if (!a) continue;
      for (int c = 0; c < 3; ++c) {
        const int spv = sp.rgb.pixels[sp.rgb.index(x, y, c)];
        const int bgv = scene.pixels[scene.index(px + x, py + y, c)];
        const int v = spv * a + bgv * (255 - a);
        scene.pixels[scene.index(px + x, py + y, c)] =
            static_cast<std::uint8_t>((v + 127) / 255);
      }
    }
}

}  // namespace detail

/// One scene from one RNG stream. Draw order is fixed: background index,
/// target count, then per target sprite index, longer side, and up to 1000
/// position draws; a target that never fits is dropped and counted. A placed
/// target's annotation is the bounding box of its alpha > 0 pixels; candidate
/// positions are rejected while that box comes closer than min_separation
/// (edge-to-edge) to any already-placed box. Selective blur runs last over the
/// whole frame when enabled.
inline ComposedScene compose_scene(const SceneAssets& assets, const SynthParams& p, Rng& rng) {
  detail::check_synth_params(p, assets);
  ComposedScene out;
  out.image = assets.backgrounds[rng.uniform_index(assets.backgrounds.size())];
  const int W = out.image.width, H = out.image.height;

  const int n_targets = rng.uniform_int(p.targets_min, p.targets_max);
  const long long min_sep_sq =
      static_cast<long long>(p.min_separation) * p.min_separation;

  for (int t = 0; t < n_targets; ++t) {
    const Sprite& src = assets.sprites[rng.uniform_index(assets.sprites.size())];
    const int side = rng.uniform_int(p.side_min, p.side_max);
    int sw, sh;
    if (src.rgb.width >= src.rgb.height) {
      sw = side;
      sh = std::max(1, static_cast<int>(std::lround(
                           static_cast<double>(src.rgb.height) * side / src.rgb.width)));
    } else {
      sh = side;
      sw = std::max(1, static_cast<int>(std::lround(
                           static_cast<double>(src.rgb.width) * side / src.rgb.height)));
    }
    const Sprite scaled = detail::scale_sprite(src, sw, sh);
    const BBox local = detail::opaque_bbox(scaled);

    bool placed = false;
    for (int attempt = 0; attempt < 1000 && !placed; ++attempt) {
      const int px = rng.uniform_int(0, W - sw);
      const int py = rng.uniform_int(0, H - sh);
      const BBox cand{px + local.x, py + local.y, local.w, local.h};
      bool ok = true;
      for (const auto& prior : out.boxes)
        if (box_gap_sq(cand, prior.box) < min_sep_sq) {
          ok = false;
          break;
        }
      if (!ok) continue;
      detail::composite_at(out.image, scaled, px, py);
      out.boxes.push_back({cand, "person"});
      placed = true;
    }
    if (!placed) ++out.placement_failures;
  }

  if (p.blur) out.image = selective_gaussian_blur(out.image, *p.blur);
  return out;
}

inline SceneAssets load_assets(const SynthConfig& cfg) {
  SceneAssets assets;
  for (const auto& path : cfg.background_paths)
    assets.backgrounds.push_back(read_png_image(path));
  for (const auto& path : cfg.sprite_paths) {
    LoadedImage li = read_png(path);
    Sprite sp;
    if (li.image.channels == 1) {  // promote gray cutouts
      sp.rgb.width = li.image.width;
      sp.rgb.height = li.image.height;
      sp.rgb.channels = 3;
      sp.rgb.pixels.resize(li.image.pixels.size() * 3);
      for (std::size_t i = 0; i < li.image.pixels.size(); ++i)
        sp.rgb.pixels[i * 3] = sp.rgb.pixels[i * 3 + 1] = sp.rgb.pixels[i * 3 + 2] =
            li.image.pixels[i];
    } else {
      sp.rgb = std::move(li.image);
    }
    sp.alpha = std::move(li.alpha);
    if (sp.alpha.empty())  // no alpha channel: treat the cutout as fully opaque
      sp.alpha.assign(static_cast<std::size_t>(sp.rgb.width) * sp.rgb.height, 255);
    assets.sprites.push_back(std::move(sp));
  }
  return assets;
}

struct GenerateResult {
  DatasetManifest manifest;
  int placement_failures = 0;
};

inline std::string scene_filename(int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "scene_%04d.png", index);
  return buf;
}

/// Write `scenes` PNGs plus manifest.json into out_dir. Scene i uses the
/// independent stream stream_rng(seed, i), so outputs are a pure function of
/// (config, seed) for any worker count. On failure every file created by this
/// run is removed before the error propagates.
inline GenerateResult generate_dataset(const SynthConfig& cfg,
                                       const std::filesystem::path& out_dir) {
  const SceneAssets assets = load_assets(cfg);
  detail::check_synth_params(cfg.params, assets);
  const int n = cfg.params.scenes;

  std::vector<ComposedScene> scenes(n);
  std::vector<std::string> errors(n);
  std::atomic<int> next{0};
  auto worker = [&] {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= n) return;
      try {
        Rng rng = stream_rng(cfg.params.seed, static_cast<std::uint64_t>(i));
        scenes[i] = compose_scene(assets, cfg.params, rng);
      } catch (const std::exception& ex) {
        errors[i] = ex.what();
      }
    }
  };
  int n_workers = cfg.params.workers;
  if (n_workers <= 0) {
    const unsigned hw = std::thread::hardware_concurrency();
    n_workers = hw > 0 ? static_cast<int>(hw) : 1;
  }
  n_workers = std::min(n_workers, std::max(1, n));
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < n_workers; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (int i = 0; i < n; ++i)
    if (!errors[i].empty())
      throw InvariantError("synth: scene " + std::to_string(i) + " failed: " + errors[i]);

  std::filesystem::create_directories(out_dir);
  GenerateResult result;
  std::vector<std::filesystem::path> written;
  try {
    for (int i = 0; i < n; ++i) {
      const std::string name = scene_filename(i);
      write_png(scenes[i].image, out_dir / name);
      written.push_back(out_dir / name);
      ManifestEntry entry;
      entry.path = name;
      entry.width = scenes[i].image.width;
      entry.height = scenes[i].image.height;
      entry.boxes = scenes[i].boxes;
      result.manifest.images.push_back(std::move(entry));
      result.placement_failures += scenes[i].placement_failures;
    }
    save_manifest(result.manifest, out_dir / "manifest.json");
    written.push_back(out_dir / "manifest.json");
  } catch (...) {
    std::error_code ec;
    for (const auto& path : written) std::filesystem::remove(path, ec);
    throw;
  }
  return result;
}

}  // namespace tiledet
