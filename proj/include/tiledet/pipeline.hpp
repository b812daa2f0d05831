#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "tiledet/detect.hpp"
#include "tiledet/enhance.hpp"
#include "tiledet/image_io.hpp"
#include "tiledet/manifest.hpp"
#include "tiledet/serialize.hpp"
#include "tiledet/subprocess_detector.hpp"
#include "tiledet/tiling.hpp"
#include "tiledet/types.hpp"

namespace tiledet {

struct PipelineConfig {
  int patch = 200;
  int overlap = 50;
  std::optional<EnhanceParams> enhance = EnhanceParams{};  // nullopt disables
  DetectorSpec detector;
  double nms_iou = 0.5;
  double conf_thresh = 0.25;
  int workers = 0;  // <=0 resolves to the logical CPU count

  int resolved_workers() const {
    if (workers > 0) return workers;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
  }
};

struct TileFailure {
  int tile_index = 0;
  std::string error;
};

// Stage times under concurrency are per-tile sums across workers, so they can
// exceed total wall clock; only total >= merge is guaranteed.
struct StageTimings {
  double tile_ms = 0.0;
  double enhance_ms = 0.0;
  double detect_ms = 0.0;
  double merge_ms = 0.0;
  double total_ms = 0.0;
};

struct FrameResult {
  std::vector<Detection> detections;  // image coordinates, merged
  StageTimings timing;
  int tile_count = 0;
  std::vector<TileFailure> failed_tiles;
};

namespace detail {

inline bool det_before(const Detection& a, const Detection& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.box != b.box) return a.box < b.box;
  return a.class_label < b.class_label;
}

}  // namespace detail

/// All per-tile detections projected to image space, deterministically sorted
/// by (score desc, x, y, w, h) regardless of input order.
inline std::vector<Detection> project_all(
    const TilePlan&, const std::vector<std::pair<Tile, std::vector<Detection>>>& per_tile) {
  std::vector<Detection> out;
  for (const auto& [tile, dets] : per_tile)
    for (const auto& d : dets) out.push_back(to_image_coords(tile, d));
  std::sort(out.begin(), out.end(), detail::det_before);
  return out;
}

/// Greedy class-wise NMS: keep the highest-scored remaining detection, drop
/// same-class detections overlapping it with iou > nms_iou. Idempotent.
inline std::vector<Detection> nms_merge(std::vector<Detection> dets, double nms_iou) {
  std::sort(dets.begin(), dets.end(), detail::det_before);
  std::vector<Detection> kept;
  for (const auto& d : dets) {
    bool suppressed = false;
    for (const auto& k : kept) {
      if (k.class_label == d.class_label && iou(k.box, d.box) > nms_iou) {
        suppressed = true;
        break;
      }
    }
    if (!suppressed) kept.push_back(d);
  }
  return kept;
}

/// Fragment suppression for tiled merging: drop every detection whose box is
/// properly contained in another surviving same-class detection's box. A
/// target straddling a tile boundary yields edge fragments in the adjacent
/// tiles; their IoU against the whole-object box can sit at or below the NMS
/// threshold (a half-width fragment is exactly 0.5), yet they carry no
/// information the containing box lacks. Score-free and order-free: proper
/// containment is a strict partial order, so only maximal boxes remain.
/// Idempotent; input order preserved.
inline std::vector<Detection> suppress_contained(const std::vector<Detection>& dets) {
  std::vector<Detection> kept;
  for (std::size_t i = 0; i < dets.size(); ++i) {
    bool inside = false;
    for (std::size_t j = 0; j < dets.size(); ++j) {
      if (i == j) continue;
      if (dets[j].class_label == dets[i].class_label && dets[j].box != dets[i].box &&
          contains(dets[j].box, dets[i].box)) {
        inside = true;
        break;
      }
    }
    if (!inside) kept.push_back(dets[i]);
  }
  return kept;
}

/// Full per-frame flow. Per-tile detector failures are collected, not fatal,
/// unless every tile fails. Results are a pure function of (image, cfg):
/// worker count and scheduling cannot affect them.
inline FrameResult run_frame(const ImageBuffer& image, const PipelineConfig& cfg,
                             Detector* detector = nullptr) {
  using clock = std::chrono::steady_clock;
  const auto t_start = clock::now();

  std::unique_ptr<Detector> owned;
  if (!detector) {
    owned = make_detector(cfg.detector);
    detector = owned.get();
  }

  const TilePlan plan = plan_tiles(image.width, image.height, cfg.patch, cfg.overlap);
  const int n_tiles = static_cast<int>(plan.tiles.size());

  std::vector<std::vector<Detection>> tile_dets(n_tiles);
  std::vector<std::string> tile_errors(n_tiles);
  std::vector<std::uint8_t> tile_failed(n_tiles, 0);
  std::atomic<int> next{0};
  std::atomic<long long> tile_ns{0}, enhance_ns{0}, detect_ns{0};

  auto worker = [&] {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= n_tiles) return;
      try {
        const auto t0 = clock::now();
        ImageBuffer patch = extract_patch(image, plan.tiles[i]);
        const auto t1 = clock::now();
        if (cfg.enhance) patch = contrast_stretch(patch, *cfg.enhance);
        const auto t2 = clock::now();
        tile_dets[i] = detector->detect(patch);
        const auto t3 = clock::now();
        tile_ns += (t1 - t0).count();
        enhance_ns += (t2 - t1).count();
        detect_ns += (t3 - t2).count();
      } catch (const std::exception& ex) {
        tile_failed[i] = 1;
        tile_errors[i] = ex.what();
      }
    }
  };

  const int n_workers = std::min(cfg.resolved_workers(), std::max(1, n_tiles));
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_workers);
    for (int i = 0; i < n_workers; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  FrameResult result;
  result.tile_count = n_tiles;
  for (int i = 0; i < n_tiles; ++i)
    if (tile_failed[i]) result.failed_tiles.push_back({i, tile_errors[i]});
  if (!result.failed_tiles.empty() &&
      static_cast<int>(result.failed_tiles.size()) == n_tiles)
    throw DetectorError("run_frame: every tile failed (first: " + tile_errors[0] + ")");

  const auto t_merge = clock::now();
  std::vector<std::pair<Tile, std::vector<Detection>>> per_tile;
  per_tile.reserve(n_tiles);
  for (int i = 0; i < n_tiles; ++i)
    if (!tile_failed[i]) per_tile.emplace_back(plan.tiles[i], std::move(tile_dets[i]));
  std::vector<Detection> projected = project_all(plan, per_tile);
  std::erase_if(projected, [&](const Detection& d) { return d.score < cfg.conf_thresh; });
  result.detections = suppress_contained(nms_merge(std::move(projected), cfg.nms_iou));
  const auto t_end = clock::now();

  result.timing.tile_ms = tile_ns.load() / 1e6;
  result.timing.enhance_ms = enhance_ns.load() / 1e6;
  result.timing.detect_ms = detect_ns.load() / 1e6;
  result.timing.merge_ms = std::chrono::duration<double, std::milli>(t_end - t_merge).count();
  result.timing.total_ms = std::chrono::duration<double, std::milli>(t_end - t_start).count();
  return result;
}

// ---------------------------------------------------------------------------
// Detections document
// ---------------------------------------------------------------------------

struct FrameRecord {
  std::string path;
  bool ok = true;
  std::string error;                          // set when !ok
  std::vector<Detection> detections;          // image coordinates
  std::optional<long long> timing_total_ms;   // emitted only when present
};

struct DetectionsDoc {
  std::vector<FrameRecord> results;
};

// {"results":[{"path":...,"detections":[{"x":..,"y":..,"w":..,"h":..,"score":..,"class":..}],
//   "timing_ms":{"total":..}}]}; scores fixed to 6 fractional digits.
inline std::string detections_to_json(const DetectionsDoc& doc) {
  std::string out = "{\"results\":[";
  bool first = true;
  for (const auto& rec : doc.results) {
    if (!first) out += ',';
    first = false;
    out += "{\"path\":" + json_str(rec.path);
    if (!rec.ok) {
      out += ",\"error\":" + json_str(rec.error) + '}';
      continue;
    }
    out += ",\"detections\":[";
    bool first_det = true;
    for (const auto& d : rec.detections) {
      if (!first_det) out += ',';
      first_det = false;
      out += "{\"x\":" + std::to_string(d.box.x);
      out += ",\"y\":" + std::to_string(d.box.y);
      out += ",\"w\":" + std::to_string(d.box.w);
      out += ",\"h\":" + std::to_string(d.box.h);
      out += ",\"score\":" + fixed6(d.score);
      out += ",\"class\":" + json_str(d.class_label) + '}';
    }
    out += ']';
    if (rec.timing_total_ms)
      out += ",\"timing_ms\":{\"total\":" + std::to_string(*rec.timing_total_ms) + '}';
    out += '}';
  }
  out += "]}";
  return out;
}

inline void save_detections(const DetectionsDoc& doc, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write detections: " + path.string());
  out << detections_to_json(doc) << '\n';
  if (!out) throw IoError("short write: " + path.string());
}

inline DetectionsDoc parse_detections(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& ex) {
    throw ParseError(std::string("detections: ") + ex.what());
  }
  if (!doc.is_object() || !doc.contains("results") || !doc["results"].is_array())
    throw ParseError("detections: missing \"results\" array");
  DetectionsDoc out;
  for (const auto& jr : doc["results"]) {
    FrameRecord rec;
    try {
      rec.path = jr.at("path").get<std::string>();
      if (jr.contains("error")) {
        rec.ok = false;
        rec.error = jr["error"].get<std::string>();
      } else {
        for (const auto& jd : jr.at("detections")) {
          Detection d;
          d.box = BBox{jd.at("x").get<int>(), jd.at("y").get<int>(),
                       jd.at("w").get<int>(), jd.at("h").get<int>()};
          d.score = jd.at("score").get<double>();
          d.class_label = jd.at("class").get<std::string>();
          rec.detections.push_back(std::move(d));
        }
        if (jr.contains("timing_ms")) rec.timing_total_ms = jr["timing_ms"].value("total", 0LL);
      }
    } catch (const nlohmann::json::exception& ex) {
      throw ParseError(std::string("detections: ") + ex.what());
    }
    out.results.push_back(std::move(rec));
  }
  return out;
}

inline DetectionsDoc load_detections(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open detections: " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_detections(text);
}

// ---------------------------------------------------------------------------
// Dataset run
// ---------------------------------------------------------------------------

struct DatasetRunResult {
  DetectionsDoc doc;
  int frames_ok = 0;
  int frames_failed = 0;      // unreadable images
  int tiles_failed = 0;       // across all frames
};

/// Process every manifest entry in order. Unreadable images are recorded as
/// per-image errors and the run continues. `include_timing` adds wall-clock
/// timing_ms to each record, which breaks byte-determinism of the output.
inline DatasetRunResult run_dataset(const DatasetManifest& manifest, const PipelineConfig& cfg,
                                    const std::filesystem::path& image_root,
                                    bool include_timing = false) {
  DatasetRunResult out;
  std::unique_ptr<Detector> detector = make_detector(cfg.detector);
  for (const auto& entry : manifest.images) {
    FrameRecord rec;
    rec.path = entry.path;
    try {
      const ImageBuffer image = read_png_image(image_root / entry.path);
      FrameResult fr = run_frame(image, cfg, detector.get());
      rec.detections = std::move(fr.detections);
      if (include_timing)
        rec.timing_total_ms = std::llround(fr.timing.total_ms);
      out.tiles_failed += static_cast<int>(fr.failed_tiles.size());
      ++out.frames_ok;
    } catch (const std::exception& ex) {
      rec.ok = false;
      rec.error = ex.what();
      rec.detections.clear();
      ++out.frames_failed;
    }
    out.doc.results.push_back(std::move(rec));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Bench
// ---------------------------------------------------------------------------

struct BenchRow {
  int workers = 0;
  double median_ms = 0.0, min_ms = 0.0, max_ms = 0.0;
  StageTimings median_stages;  // component-wise medians across repeats
};

struct BenchReport {
  int image_width = 0, image_height = 0;
  int repeats = 0;
  std::vector<BenchRow> rows;          // first row is workers=1
  double speedup = 0.0;                // workers=1 median / configured-workers median
  int configured_workers = 0;
  double budget_ms = 8000.0;
  bool budget_met = false;
};

namespace detail {

inline double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace detail

/// Latency over `repeats` runs for workers=1, the configured count, and any
/// extra counts. Detection results are identical across rows by construction;
/// only the clock varies.
inline BenchReport bench(const ImageBuffer& image, const PipelineConfig& cfg, int repeats,
                         std::vector<int> extra_worker_counts = {}) {
  if (repeats < 1) throw std::invalid_argument("bench: repeats must be >= 1");
  BenchReport report;
  report.image_width = image.width;
  report.image_height = image.height;
  report.repeats = repeats;
  report.configured_workers = cfg.resolved_workers();

  std::vector<int> counts{1, report.configured_workers};
  for (int c : extra_worker_counts) counts.push_back(c);
  std::sort(counts.begin(), counts.end());
  counts.erase(std::unique(counts.begin(), counts.end()), counts.end());

  std::unique_ptr<Detector> detector = make_detector(cfg.detector);
  for (const int w : counts) {
    PipelineConfig run_cfg = cfg;
    run_cfg.workers = w;
    std::vector<double> totals;
    std::vector<double> tile, enh, det, merge;
    for (int r = 0; r < repeats; ++r) {
      const FrameResult fr = run_frame(image, run_cfg, detector.get());
      totals.push_back(fr.timing.total_ms);
      tile.push_back(fr.timing.tile_ms);
      enh.push_back(fr.timing.enhance_ms);
      det.push_back(fr.timing.detect_ms);
      merge.push_back(fr.timing.merge_ms);
    }
    BenchRow row;
    row.workers = w;
    row.median_ms = detail::median_of(totals);
    row.min_ms = *std::min_element(totals.begin(), totals.end());
    row.max_ms = *std::max_element(totals.begin(), totals.end());
    row.median_stages.tile_ms = detail::median_of(tile);
    row.median_stages.enhance_ms = detail::median_of(enh);
    row.median_stages.detect_ms = detail::median_of(det);
    row.median_stages.merge_ms = detail::median_of(merge);
    row.median_stages.total_ms = row.median_ms;
    report.rows.push_back(row);
  }

  double base = 0.0, target = 0.0;
  for (const auto& row : report.rows) {
    if (row.workers == 1) base = row.median_ms;
    if (row.workers == report.configured_workers) target = row.median_ms;
  }
  report.speedup = target > 0.0 ? base / target : 0.0;
  report.budget_met = target < report.budget_ms;
  return report;
}

}  // namespace tiledet
