// tiledet: tiled small-target detection toolkit.
//
// Subcommands: detect, eval, synth, augment, bench. Machine-readable outputs
// go to files; stdout carries one-line summaries (bench prints its table).
// Exit codes: 0 success, 1 environment/I-O/detector failure, 2 input-contract
// violation, 3 partial success.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <unistd.h>

#include <CLI11.hpp>
#include <json.hpp>

#include <tiledet/tiledet.hpp>

namespace fs = std::filesystem;
using namespace tiledet;

namespace {

bool g_quiet = false;
bool g_verbose = false;

void say(const std::string& line) {
  if (!g_quiet) std::cout << line << "\n";
}

void note(const std::string& line) {
  if (g_verbose) std::cerr << line << "\n";
}

void warn(const std::string& line) { std::cerr << "warning: " << line << "\n"; }

bool use_color() { return isatty(1) && std::getenv("NO_COLOR") == nullptr; }

std::string paint(const std::string& text, const char* code) {
  if (!use_color()) return text;
  return std::string("\033[") + code + "m" + text + "\033[0m";
}

// Relative manifest path -> flat filename, e.g. "sub/img.png" -> "sub_img".
std::string flat_stem(const std::string& rel_path) {
  std::string stem = rel_path;
  const auto dot = stem.rfind('.');
  if (dot != std::string::npos && stem.find('/', dot) == std::string::npos)
    stem.resize(dot);
  for (auto& c : stem)
    if (c == '/' || c == '\\') c = '_';
  return stem;
}

std::vector<std::string> expand_pngs(const std::vector<std::string>& paths) {
  std::vector<std::string> out;
  for (const auto& p : paths) {
    if (fs::is_directory(p)) {
      std::vector<std::string> found;
      for (const auto& e : fs::directory_iterator(p))
        if (e.is_regular_file() && e.path().extension() == ".png")
          found.push_back(e.path().string());
      std::sort(found.begin(), found.end());
      out.insert(out.end(), found.begin(), found.end());
    } else {
      out.push_back(p);
    }
  }
  return out;
}

void write_text_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write: " + path.string());
  out << text;
  if (!out) throw IoError("short write: " + path.string());
}

// ---------------------------------------------------------------------------
// Pipeline flags with config-file fallback.
//
// Precedence per knob: command-line flag > --config JSON key > built-in
// default. A flag counts as given only when it appears on the command line.
// ---------------------------------------------------------------------------

struct PipelineFlags {
  int patch = 200;
  int overlap = 50;
  bool no_enhance = false;
  double p_low = 2, p_high = 98;
  double nms_iou = 0.5;
  double conf = 0.25;
  double k_sigma = 3.5;
  int min_side = 5, max_side = 50;
  double conf_floor = 0.1;
  std::string detector = "baseline";
  std::string detector_cmd;
  int timeout_ms = 10000;

  CLI::Option* o_patch = nullptr;
  CLI::Option* o_overlap = nullptr;
  CLI::Option* o_no_enhance = nullptr;
  CLI::Option* o_p_low = nullptr;
  CLI::Option* o_p_high = nullptr;
  CLI::Option* o_nms_iou = nullptr;
  CLI::Option* o_conf = nullptr;
  CLI::Option* o_k_sigma = nullptr;
  CLI::Option* o_min_side = nullptr;
  CLI::Option* o_max_side = nullptr;
  CLI::Option* o_conf_floor = nullptr;
  CLI::Option* o_detector = nullptr;
  CLI::Option* o_detector_cmd = nullptr;
  CLI::Option* o_timeout_ms = nullptr;

  void attach(CLI::App* cmd) {
    o_patch = cmd->add_option("--patch", patch, "Tile side in pixels")->capture_default_str();
    o_overlap = cmd->add_option("--overlap", overlap, "Overlap between adjacent tiles in pixels")
                    ->capture_default_str();
    o_no_enhance =
        cmd->add_flag("--no-enhance", no_enhance, "Disable per-tile contrast stretch");
    o_p_low = cmd->add_option("--p-low", p_low, "Lower stretch percentile")->capture_default_str();
    o_p_high =
        cmd->add_option("--p-high", p_high, "Upper stretch percentile")->capture_default_str();
    o_nms_iou = cmd->add_option("--nms-iou", nms_iou, "IoU above which merged boxes suppress")
                    ->capture_default_str();
    o_conf = cmd->add_option("--conf", conf, "Confidence threshold on merged detections")
                 ->capture_default_str();
    o_k_sigma = cmd->add_option("--k-sigma", k_sigma, "Baseline detector sigma multiplier")
                    ->capture_default_str();
    o_min_side = cmd->add_option("--min-side", min_side, "Baseline detector minimum box side")
                     ->capture_default_str();
    o_max_side = cmd->add_option("--max-side", max_side, "Baseline detector maximum box side")
                     ->capture_default_str();
    o_conf_floor = cmd->add_option("--conf-floor", conf_floor, "Baseline detector score floor")
                       ->capture_default_str();
    o_detector = cmd->add_option("--detector", detector, "Detector kind: baseline or external")
                     ->capture_default_str();
    o_detector_cmd =
        cmd->add_option("--detector-cmd", detector_cmd,
                        "Shell command for the external detector (implies --detector external)");
    o_timeout_ms = cmd->add_option("--timeout-ms", timeout_ms,
                                   "Per-patch reply timeout for the external detector")
                       ->capture_default_str();
  }

  void apply_config(const fs::path& config_path) {
    std::ifstream in(config_path, std::ios::binary);
    if (!in) throw IoError("cannot open config: " + config_path.string());
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& ex) {
      throw ParseError("config: " + std::string(ex.what()));
    }
    if (!doc.is_object()) throw ParseError("config: top level must be an object");

    static const std::vector<std::string> known = {
        "patch",   "overlap",  "enhance",    "p_low",        "p_high",
        "nms_iou", "conf",     "k_sigma",    "min_side",     "max_side",
        "conf_floor", "detector", "detector_cmd", "timeout_ms", "workers"};
    for (const auto& [key, _] : doc.items())
      if (std::find(known.begin(), known.end(), key) == known.end())
        throw ParseError("config: unknown key \"" + key + "\"");

    auto take_int = [&](const char* key, CLI::Option* opt, int& slot) {
      if (doc.contains(key) && opt->count() == 0) slot = doc[key].get<int>();
    };
    auto take_double = [&](const char* key, CLI::Option* opt, double& slot) {
      if (doc.contains(key) && opt->count() == 0) slot = doc[key].get<double>();
    };
    try {
      take_int("patch", o_patch, patch);
      take_int("overlap", o_overlap, overlap);
      if (doc.contains("enhance") && o_no_enhance->count() == 0)
        no_enhance = !doc["enhance"].get<bool>();
      take_double("p_low", o_p_low, p_low);
      take_double("p_high", o_p_high, p_high);
      take_double("nms_iou", o_nms_iou, nms_iou);
      take_double("conf", o_conf, conf);
      take_double("k_sigma", o_k_sigma, k_sigma);
      take_int("min_side", o_min_side, min_side);
      take_int("max_side", o_max_side, max_side);
      take_double("conf_floor", o_conf_floor, conf_floor);
      if (doc.contains("detector") && o_detector->count() == 0)
        detector = doc["detector"].get<std::string>();
      if (doc.contains("detector_cmd") && o_detector_cmd->count() == 0)
        detector_cmd = doc["detector_cmd"].get<std::string>();
      take_int("timeout_ms", o_timeout_ms, timeout_ms);
    } catch (const nlohmann::json::exception& ex) {
      throw ParseError("config: " + std::string(ex.what()));
    }
  }

  std::optional<int> config_workers(const fs::path& config_path) const {
    std::ifstream in(config_path, std::ios::binary);
    if (!in) return std::nullopt;
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception&) {
      return std::nullopt;
    }
    if (doc.is_object() && doc.contains("workers")) {
      try {
        return doc["workers"].get<int>();
      } catch (const nlohmann::json::exception&) {
        return std::nullopt;
      }
    }
    return std::nullopt;
  }

  PipelineConfig to_pipeline(int workers) const {
    PipelineConfig cfg;
    cfg.patch = patch;
    cfg.overlap = overlap;
    if (no_enhance)
      cfg.enhance = std::nullopt;
    else
      cfg.enhance = EnhanceParams{p_low, p_high};
    cfg.nms_iou = nms_iou;
    cfg.conf_thresh = conf;
    cfg.workers = workers;

    if (detector != "baseline" && detector != "external")
      throw ParseError("--detector must be \"baseline\" or \"external\", got \"" + detector +
                       "\"");
    if (!detector_cmd.empty() || detector == "external") {
      if (detector_cmd.empty())
        throw ParseError("--detector external requires --detector-cmd");
      cfg.detector.kind = DetectorSpec::Kind::external;
      cfg.detector.external.command = detector_cmd;
      cfg.detector.external.timeout_ms = timeout_ms;
    } else {
      cfg.detector.kind = DetectorSpec::Kind::baseline;
      cfg.detector.baseline.k_sigma = k_sigma;
      cfg.detector.baseline.min_side = min_side;
      cfg.detector.baseline.max_side = max_side;
      cfg.detector.baseline.conf_floor = conf_floor;
    }
    return cfg;
  }
};

// ---------------------------------------------------------------------------
// detect
// ---------------------------------------------------------------------------

int cmd_detect(const std::string& image_path, const std::string& manifest_path,
               const PipelineConfig& cfg, const fs::path& out_path, bool annotate,
               bool timing) {
  DatasetManifest manifest;
  fs::path image_root;
  if (!manifest_path.empty()) {
    manifest = load_manifest(manifest_path);
    image_root = fs::path(manifest_path).parent_path();
  } else {
    const ImageBuffer probe = read_png_image(image_path);
    ManifestEntry entry;
    entry.path = image_path;
    entry.width = probe.width;
    entry.height = probe.height;
    manifest.images.push_back(std::move(entry));
    image_root = "";
  }

  const DatasetRunResult run = run_dataset(manifest, cfg, image_root, timing);
  if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
  save_detections(run.doc, out_path);

  if (annotate) {
    const fs::path overlay_dir =
        out_path.has_parent_path() ? out_path.parent_path() : fs::path(".");
    for (const auto& rec : run.doc.results) {
      if (!rec.ok) continue;
      ImageBuffer img = read_png_image(image_root / rec.path);
      draw_detections(img, rec.detections);
      const fs::path overlay = overlay_dir / (flat_stem(rec.path) + "_annotated.png");
      write_png(img, overlay);
      note("overlay " + overlay.string());
    }
  }

  int total = 0;
  for (const auto& rec : run.doc.results) total += static_cast<int>(rec.detections.size());
  say("images=" + std::to_string(run.doc.results.size()) +
      " detections=" + std::to_string(total) + " -> " + out_path.string());

  if (run.frames_ok == 0 && !run.doc.results.empty()) {
    warn("every image failed; first error: " + run.doc.results.front().error);
    return 1;
  }
  if (run.frames_failed > 0 || run.tiles_failed > 0) {
    warn(std::to_string(run.frames_failed) + " image(s) and " +
         std::to_string(run.tiles_failed) + " tile(s) failed; partial results written");
    return 3;
  }
  return 0;
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

int cmd_eval(const std::string& detections_path, const std::string& manifest_path,
             double iou_thresh, double conf_thresh, const fs::path& out_path,
             const std::string& pr_dir_flag) {
  const DatasetManifest manifest = load_manifest(manifest_path);
  const DetectionsDoc dets = load_detections(detections_path);
  const EvalReport report = evaluate(manifest, dets, iou_thresh, conf_thresh);

  write_text_file(out_path, eval_report_to_json(report) + "\n");
  const fs::path pr_dir = pr_dir_flag.empty()
                              ? (out_path.has_parent_path() ? out_path.parent_path()
                                                            : fs::path("."))
                              : fs::path(pr_dir_flag);
  save_pr_curves(report, pr_dir);

  std::cout << "mAP=" << fixed6(report.map) << " P=" << fixed6(report.precision)
            << " R=" << fixed6(report.recall) << "\n";
  note("report " + out_path.string() + ", PR curves in " + pr_dir.string());
  return 0;
}

// ---------------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------------

int cmd_synth(SynthConfig cfg, const fs::path& out_dir) {
  cfg.background_paths = expand_pngs(cfg.background_paths);
  cfg.sprite_paths = expand_pngs(cfg.sprite_paths);
  if (cfg.background_paths.empty()) throw ParseError("synth: no backgrounds given");
  if (cfg.sprite_paths.empty()) throw ParseError("synth: no sprites given");

  const GenerateResult result = generate_dataset(cfg, out_dir);
  int boxes = 0;
  for (const auto& entry : result.manifest.images) boxes += static_cast<int>(entry.boxes.size());
  if (result.placement_failures > 0)
    warn(std::to_string(result.placement_failures) +
         " target(s) dropped after exhausting placement attempts");
  say("scenes=" + std::to_string(result.manifest.images.size()) +
      " boxes=" + std::to_string(boxes) + " -> " + out_dir.string());
  return 0;
}

// ---------------------------------------------------------------------------
// augment
// ---------------------------------------------------------------------------

int cmd_augment(const std::string& manifest_path, const std::vector<std::string>& op_tokens,
                std::uint64_t seed, const fs::path& out_dir) {
  if (op_tokens.empty()) throw ParseError("augment: --ops is required");
  std::vector<AugmentOp> ops;
  for (const auto& token : op_tokens) ops.push_back(parse_augment_op(token));

  const DatasetManifest manifest = load_manifest(manifest_path);
  const fs::path image_root = fs::path(manifest_path).parent_path();
  fs::create_directories(out_dir);

  DatasetManifest merged;
  int augmented = 0;
  for (std::size_t i = 0; i < manifest.images.size(); ++i) {
    const ManifestEntry& entry = manifest.images[i];
    const ImageBuffer image = read_png_image(image_root / entry.path);
    if (image.width != entry.width || image.height != entry.height)
      throw InvariantError("augment: " + entry.path + " is " + std::to_string(image.width) +
                           "x" + std::to_string(image.height) + " but manifest declares " +
                           std::to_string(entry.width) + "x" + std::to_string(entry.height));

    // Originals are copied in so the merged manifest is self-contained.
    const std::string copy_name = flat_stem(entry.path) + ".png";
    fs::copy_file(image_root / entry.path, out_dir / copy_name,
                  fs::copy_options::overwrite_existing);
    ManifestEntry copy_entry = entry;
    copy_entry.path = copy_name;
    merged.images.push_back(std::move(copy_entry));

    for (std::size_t j = 0; j < ops.size(); ++j) {
      Rng rng = stream_rng(seed, static_cast<std::uint64_t>(i) * ops.size() + j);
      const AugmentResult res = augment(image, entry.boxes, ops[j], &rng);
      const std::string suffix =
          op_suffix(ops[j], ops[j].kind == AugmentKind::zoom
                                ? std::optional<double>(res.realized_factor)
                                : std::nullopt);
      const std::string name = flat_stem(entry.path) + "_" + suffix + ".png";
      write_png(res.image, out_dir / name);
      ManifestEntry aug_entry;
      aug_entry.path = name;
      aug_entry.width = res.image.width;
      aug_entry.height = res.image.height;
      aug_entry.boxes = res.boxes;
      merged.images.push_back(std::move(aug_entry));
      ++augmented;
      note("augmented " + name);
    }
  }
  save_manifest(merged, out_dir / "manifest.json");
  say("images=" + std::to_string(manifest.images.size()) +
      " augmented=" + std::to_string(augmented) + " -> " + out_dir.string());
  return 0;
}

// ---------------------------------------------------------------------------
// bench
// ---------------------------------------------------------------------------

// Deterministic 4K stand-in frame: low-variance gray water texture with a
// handful of bright small targets.
ImageBuffer make_bench_frame(std::uint64_t seed, int width, int height) {
  Rng rng = stream_rng(seed, 0xBE9C);
  ImageBuffer img;
  img.width = width;
  img.height = height;
  img.channels = 3;
  img.pixels.resize(static_cast<std::size_t>(width) * height * 3);
  for (auto& p : img.pixels) p = static_cast<std::uint8_t>(90 + rng.uniform_int(0, 20));
  for (int i = 0; i < 12; ++i) {
    const int w = rng.uniform_int(8, 40);
    const int h = rng.uniform_int(8, 40);
    const int x = rng.uniform_int(0, width - w);
    const int y = rng.uniform_int(0, height - h);
    const std::uint8_t v = static_cast<std::uint8_t>(rng.uniform_int(230, 250));
    for (int dy = 0; dy < h; ++dy)
      for (int dx = 0; dx < w; ++dx)
        for (int c = 0; c < 3; ++c) img.pixels[img.index(x + dx, y + dy, c)] = v;
  }
  return img;
}

std::string bench_report_json(const BenchReport& r) {
  std::string out = "{\"image\":{\"width\":" + std::to_string(r.image_width) +
                    ",\"height\":" + std::to_string(r.image_height) + "}";
  out += ",\"repeats\":" + std::to_string(r.repeats);
  out += ",\"rows\":[";
  bool first = true;
  for (const auto& row : r.rows) {
    if (!first) out += ',';
    first = false;
    out += "{\"workers\":" + std::to_string(row.workers);
    out += ",\"median_ms\":" + fixed6(row.median_ms);
    out += ",\"min_ms\":" + fixed6(row.min_ms);
    out += ",\"max_ms\":" + fixed6(row.max_ms);
    out += ",\"stages_ms\":{\"tile\":" + fixed6(row.median_stages.tile_ms);
    out += ",\"enhance\":" + fixed6(row.median_stages.enhance_ms);
    out += ",\"detect\":" + fixed6(row.median_stages.detect_ms);
    out += ",\"merge\":" + fixed6(row.median_stages.merge_ms) + "}}";
  }
  out += "],\"configured_workers\":" + std::to_string(r.configured_workers);
  out += ",\"speedup\":" + fixed6(r.speedup);
  out += ",\"budget_ms\":" + fixed6(r.budget_ms);
  out += std::string(",\"budget_met\":") + (r.budget_met ? "true" : "false");
  out += "}";
  return out;
}

int cmd_bench(const std::string& image_path, const PipelineConfig& cfg, int repeats,
              const std::string& sweep, std::uint64_t seed, const fs::path& out_path) {
  ImageBuffer frame;
  if (!image_path.empty()) {
    frame = read_png_image(image_path);
  } else {
    note("no --image given; generating a 3840x2160 frame");
    frame = make_bench_frame(seed, 3840, 2160);
  }

  std::vector<int> extra;
  if (!sweep.empty()) {
    std::size_t pos = 0;
    while (pos <= sweep.size()) {
      const std::size_t comma = std::min(sweep.find(',', pos), sweep.size());
      const std::string token = sweep.substr(pos, comma - pos);
      if (!token.empty()) {
        try {
          const int v = std::stoi(token);
          if (v < 1) throw std::invalid_argument("worker count < 1");
          extra.push_back(v);
        } catch (const std::exception&) {
          throw ParseError("bench: bad --workers-sweep entry \"" + token + "\"");
        }
      }
      pos = comma + 1;
    }
  }

  const BenchReport report = bench(frame, cfg, repeats, extra);
  write_text_file(out_path, bench_report_json(report) + "\n");

  char line[160];
  std::snprintf(line, sizeof(line), "frame %dx%d, repeats %d", report.image_width,
                report.image_height, report.repeats);
  std::cout << line << "\n";
  std::cout << "workers  median_ms      min_ms      max_ms\n";
  for (const auto& row : report.rows) {
    std::snprintf(line, sizeof(line), "%7d  %9.1f  %10.1f  %10.1f", row.workers,
                  row.median_ms, row.min_ms, row.max_ms);
    std::cout << line << "\n";
  }
  std::snprintf(line, sizeof(line), "speedup (1 -> %d workers): %.2fx",
                report.configured_workers, report.speedup);
  std::cout << line << "\n";
  if (report.budget_met) {
    std::cout << "budget: " << paint("PASS (<8000ms)", "32") << "\n";
  } else {
    double measured = 0.0;
    for (const auto& row : report.rows)
      if (row.workers == report.configured_workers) measured = row.median_ms;
    std::snprintf(line, sizeof(line), "FAIL (>=8000ms, measured %.0fms)", measured);
    std::cout << "budget: " << paint(line, "31") << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tiled small-target detection toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  std::uint64_t seed = 0;
  std::string out_flag;
  int workers = 0;
  app.add_option("--config", config_path, "JSON file of pipeline option overrides");
  auto* o_seed = app.add_option("--seed", seed, "Seed for synth, augment sampling, and bench")
                     ->capture_default_str();
  auto* o_out = app.add_option("--out", out_flag, "Output file or directory (per subcommand)");
  auto* o_workers =
      app.add_option("--workers", workers, "Worker threads; 0 means the logical CPU count")
          ->capture_default_str();
  app.add_flag("--quiet", g_quiet, "Suppress the summary line");
  app.add_flag("--verbose", g_verbose, "Extra progress detail on stderr");

  // detect
  auto* detect = app.add_subcommand("detect", "Run the tiled pipeline over images");
  detect->fallthrough();
  std::string det_image, det_manifest;
  bool det_annotate = false, det_timing = false;
  auto* o_det_image = detect->add_option("--image", det_image, "Single input PNG");
  auto* o_det_manifest =
      detect->add_option("--manifest", det_manifest, "Dataset manifest (paths relative to it)");
  o_det_image->excludes(o_det_manifest);
  detect->add_flag("--annotate", det_annotate,
                   "Also write *_annotated.png overlays next to the output");
  detect->add_flag("--timing", det_timing,
                   "Record wall-clock timing_ms per image (breaks byte-determinism)");
  PipelineFlags det_flags;
  det_flags.attach(detect);

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Score a detections file against ground truth");
  eval_cmd->fallthrough();
  std::string eval_dets, eval_manifest, eval_pr_dir;
  double eval_iou = 0.5, eval_conf = 0.0;
  eval_cmd->add_option("--detections", eval_dets, "Detections document")->required();
  eval_cmd->add_option("--manifest", eval_manifest, "Ground-truth manifest")->required();
  eval_cmd->add_option("--iou", eval_iou, "IoU threshold for matching")->capture_default_str();
  eval_cmd->add_option("--conf", eval_conf, "Drop detections below this score before matching")
      ->capture_default_str();
  eval_cmd->add_option("--pr-dir", eval_pr_dir,
                       "Directory for pr_<class>.csv files (default: next to the report)");

  // synth
  auto* synth = app.add_subcommand("synth", "Generate annotated synthetic scenes");
  synth->fallthrough();
  SynthConfig synth_cfg;
  synth->add_option("--backgrounds", synth_cfg.background_paths,
                    "Background PNGs or directories of them")
      ->required();
  synth->add_option("--sprites", synth_cfg.sprite_paths,
                    "Target cutout PNGs (alpha respected) or directories")
      ->required();
  synth->add_option("--scenes", synth_cfg.params.scenes, "Number of scenes")
      ->capture_default_str();
  synth->add_option("--targets-min", synth_cfg.params.targets_min, "Minimum targets per scene")
      ->capture_default_str();
  synth->add_option("--targets-max", synth_cfg.params.targets_max, "Maximum targets per scene")
      ->capture_default_str();
  synth->add_option("--side-min", synth_cfg.params.side_min,
                    "Minimum longer side of a placed target")
      ->capture_default_str();
  synth->add_option("--side-max", synth_cfg.params.side_max,
                    "Maximum longer side of a placed target")
      ->capture_default_str();
  synth->add_option("--min-sep", synth_cfg.params.min_separation,
                    "Minimum edge-to-edge distance between placed boxes")
      ->capture_default_str();
  bool synth_no_blur = false;
  int synth_blur_radius = 5, synth_blur_delta = 50;
  synth->add_flag("--no-blur", synth_no_blur, "Skip the selective blur pass");
  synth->add_option("--blur-radius", synth_blur_radius, "Selective blur radius")
      ->capture_default_str();
  synth->add_option("--blur-delta", synth_blur_delta, "Selective blur maximum delta")
      ->capture_default_str();

  // augment
  auto* augment_cmd =
      app.add_subcommand("augment", "Write augmented copies plus a merged manifest");
  augment_cmd->fallthrough();
  std::string aug_manifest;
  std::vector<std::string> aug_ops;
  augment_cmd->add_option("--manifest", aug_manifest, "Dataset manifest to augment")->required();
  augment_cmd
      ->add_option("--ops", aug_ops,
                   "Ops: hflip vflip rot90 rot180 rot270 zoom zoom:<factor> (bare zoom "
                   "samples a factor in [0.5,2.0] per image)")
      ->delimiter(',');

  // bench
  auto* bench_cmd = app.add_subcommand("bench", "Measure pipeline latency");
  bench_cmd->fallthrough();
  std::string bench_image, bench_sweep;
  int bench_repeats = 5;
  bench_cmd->add_option("--image", bench_image,
                        "Frame to time (default: a generated 3840x2160 frame)");
  bench_cmd->add_option("--repeats", bench_repeats, "Runs per worker count")
      ->capture_default_str();
  bench_cmd->add_option("--workers-sweep", bench_sweep,
                        "Extra comma-separated worker counts to time");
  PipelineFlags bench_flags;
  bench_flags.attach(bench_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  const bool out_given = o_out->count() > 0;
  auto out_or = [&](const char* fallback) {
    return fs::path(out_given ? out_flag : std::string(fallback));
  };

  try {
    if (detect->parsed()) {
      if (det_image.empty() && det_manifest.empty())
        throw ParseError("detect: one of --image or --manifest is required");
      if (!config_path.empty()) {
        det_flags.apply_config(config_path);
        if (o_workers->count() == 0)
          if (auto w = det_flags.config_workers(config_path)) workers = *w;
      }
      return cmd_detect(det_image, det_manifest, det_flags.to_pipeline(workers),
                        out_or("detections.json"), det_annotate, det_timing);
    }
    if (eval_cmd->parsed())
      return cmd_eval(eval_dets, eval_manifest, eval_iou, eval_conf,
                      out_or("eval_report.json"), eval_pr_dir);
    if (synth->parsed()) {
      if (synth_no_blur)
        synth_cfg.params.blur = std::nullopt;
      else
        synth_cfg.params.blur = BlurParams{synth_blur_radius, synth_blur_delta};
      synth_cfg.params.seed = seed;
      synth_cfg.params.workers = workers;
      return cmd_synth(synth_cfg, out_or("synth_out"));
    }
    if (augment_cmd->parsed())
      return cmd_augment(aug_manifest, aug_ops, seed, out_or("augment_out"));
    if (bench_cmd->parsed()) {
      if (!config_path.empty()) {
        bench_flags.apply_config(config_path);
        if (o_workers->count() == 0)
          if (auto w = bench_flags.config_workers(config_path)) workers = *w;
      }
      (void)o_seed;
      return cmd_bench(bench_image, bench_flags.to_pipeline(workers), bench_repeats,
                       bench_sweep, seed, out_or("bench.json"));
    }
  } catch (const ParseError& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 2;
  } catch (const InvariantError& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 2;
  } catch (const IoError& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 1;
  } catch (const DetectorError& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 1;
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 1;
  }
  return 0;
}
