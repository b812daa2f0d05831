#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "tiledet/manifest.hpp"
#include "tiledet/pipeline.hpp"
#include "tiledet/serialize.hpp"
#include "tiledet/types.hpp"

namespace tiledet {

struct MatchResult {
  int tp = 0, fp = 0, fn = 0;
  std::vector<std::pair<int, int>> matched_pairs;  // (det index, gt index)
  std::vector<bool> det_is_tp;                     // parallel to the sorted det order passed in
};

/// Greedy one-to-one matching within a single image and class. Detections are
/// visited in descending score (stable on ties); each claims the unmatched
/// ground truth with the highest IoU when that IoU >= iou_thresh (lowest gt
/// index on IoU ties). det_is_tp follows the caller's detection order.
inline MatchResult match_detections(const std::vector<Detection>& dets,
                                    const std::vector<BBox>& gts, double iou_thresh) {
  std::vector<int> order(dets.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return dets[a].score > dets[b].score; });

  MatchResult result;
  result.det_is_tp.assign(dets.size(), false);
  std::vector<bool> gt_taken(gts.size(), false);
  for (const int di : order) {
    int best_gt = -1;
    double best_iou = 0.0;
    for (std::size_t gi = 0; gi < gts.size(); ++gi) {
      if (gt_taken[gi]) continue;
      const double v = iou(dets[di].box, gts[gi]);
      if (v > best_iou) {
        best_iou = v;
        best_gt = static_cast<int>(gi);
      }
    }
    if (best_gt >= 0 && best_iou >= iou_thresh) {
      gt_taken[best_gt] = true;
      result.det_is_tp[di] = true;
      result.matched_pairs.emplace_back(di, best_gt);
      ++result.tp;
    } else {
      ++result.fp;
    }
  }
  result.fn = static_cast<int>(gts.size()) - result.tp;
  return result;
}

/// Precision and recall with the empty-set convention: no detections means
/// precision 1.0, no ground truths means recall 1.0.
inline std::pair<double, double> precision_recall(int tp, int fp, int fn) {
  const double p = (tp + fp) == 0 ? 1.0 : static_cast<double>(tp) / (tp + fp);
  const double r = (tp + fn) == 0 ? 1.0 : static_cast<double>(tp) / (tp + fn);
  return {p, r};
}

struct PrPoint {
  double recall = 0.0;
  double precision = 0.0;
};

namespace detail {

struct ScoredFlag {
  double score = 0.0;
  int image = 0;
  BBox box;
  bool tp = false;
};

inline bool scored_before(const ScoredFlag& a, const ScoredFlag& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.image != b.image) return a.image < b.image;
  return a.box < b.box;
}

}  // namespace detail

/// All-points interpolated AP for one class. `flags` holds every detection of
/// the class across the dataset with its TP/FP label from per-image matching;
/// the PR curve walks them globally sorted by (score desc, image, box).
/// AP = sum over curve points of (r_i - r_{i-1}) * max precision at recall >= r_i.
/// Zero ground truths yields AP 0 (the class then never reaches the report).
inline double average_precision(std::vector<detail::ScoredFlag> flags, int total_gt,
                                std::vector<PrPoint>* curve = nullptr) {
  if (curve) curve->clear();
  if (total_gt == 0) return 0.0;
  std::sort(flags.begin(), flags.end(), detail::scored_before);

  std::vector<PrPoint> pts;
  pts.reserve(flags.size());
  int tp = 0, fp = 0;
  for (const auto& f : flags) {
    f.tp ? ++tp : ++fp;
    pts.push_back({static_cast<double>(tp) / total_gt,
                   static_cast<double>(tp) / (tp + fp)});
  }
  if (curve) *curve = pts;

  // Right-to-left running max turns the sawtooth into the interpolated curve.
  double ap = 0.0, max_p = 0.0, prev_r = 0.0;
  std::vector<double> interp(pts.size());
  for (std::size_t i = pts.size(); i-- > 0;) {
    max_p = std::max(max_p, pts[i].precision);
    interp[i] = max_p;
  }
  for (std::size_t i = 0; i < pts.size(); ++i) {
    ap += (pts[i].recall - prev_r) * interp[i];
    prev_r = pts[i].recall;
  }
  return ap;
}

struct ClassReport {
  std::string class_label;
  double ap = 0.0;          // area reading (all-points interpolation)
  double precision = 0.0;   // at-threshold reading, from the counts below
  double recall = 0.0;
  int tp = 0, fp = 0, fn = 0;
  std::vector<PrPoint> curve;
};

struct EvalReport {
  double map = 0.0;
  double precision = 0.0;  // micro-averaged over all classes
  double recall = 0.0;
  int images = 0;
  std::vector<ClassReport> classes;  // sorted by class label
};

/// Dataset-level evaluation. Ground truth comes from the manifest; detections
/// from a detections document whose paths must match the manifest's exactly
/// (same set; order free). Frames recorded as errors contribute no detections,
/// so their ground truths count as misses. `conf_thresh` drops detections
/// below it before matching; mAP averages AP over classes present in the
/// ground truth.
inline EvalReport evaluate(const DatasetManifest& manifest, const DetectionsDoc& dets,
                           double iou_thresh = 0.5, double conf_thresh = 0.0) {
  std::map<std::string, int> gt_index;
  for (std::size_t i = 0; i < manifest.images.size(); ++i)
    gt_index.emplace(manifest.images[i].path, static_cast<int>(i));

  std::set<std::string> det_paths;
  std::string missing, extra;
  for (const auto& rec : dets.results) {
    if (!det_paths.insert(rec.path).second)
      throw InvariantError("evaluate: duplicate path in detections: " + rec.path);
    if (!gt_index.count(rec.path)) {
      if (!extra.empty()) extra += ", ";
      extra += rec.path;
    }
  }
  for (const auto& entry : manifest.images)
    if (!det_paths.count(entry.path)) {
      if (!missing.empty()) missing += ", ";
      missing += entry.path;
    }
  if (!missing.empty() || !extra.empty()) {
    std::string msg = "evaluate: path mismatch between detections and ground truth";
    if (!missing.empty()) msg += "; missing from detections: " + missing;
    if (!extra.empty()) msg += "; not in ground truth: " + extra;
    throw InvariantError(msg);
  }

  // Per image and class: match, then pool the flagged detections per class.
  std::map<std::string, std::vector<detail::ScoredFlag>> class_flags;
  std::map<std::string, int> class_gt, class_tp, class_fp;
  for (const auto& entry : manifest.images)
    for (const auto& gt : entry.boxes) ++class_gt[gt.class_label];

  for (const auto& rec : dets.results) {
    const int img = gt_index.at(rec.path);
    const ManifestEntry& entry = manifest.images[img];

    std::map<std::string, std::vector<Detection>> dets_by_class;
    if (rec.ok)
      for (const auto& d : rec.detections)
        if (d.score >= conf_thresh) dets_by_class[d.class_label].push_back(d);
    std::map<std::string, std::vector<BBox>> gts_by_class;
    for (const auto& gt : entry.boxes) gts_by_class[gt.class_label].push_back(gt.box);

    std::set<std::string> labels;
    for (const auto& [c, _] : dets_by_class) labels.insert(c);
    for (const auto& [c, _] : gts_by_class) labels.insert(c);
    for (const auto& label : labels) {
      const auto& cd = dets_by_class[label];
      const auto& cg = gts_by_class[label];
      const MatchResult m = match_detections(cd, cg, iou_thresh);
      class_tp[label] += m.tp;
      class_fp[label] += m.fp;
      for (std::size_t i = 0; i < cd.size(); ++i)
        class_flags[label].push_back({cd[i].score, img, cd[i].box, m.det_is_tp[i]});
    }
  }

  EvalReport report;
  report.images = static_cast<int>(manifest.images.size());
  int total_tp = 0, total_fp = 0, total_fn = 0;
  double ap_sum = 0.0;
  int ap_classes = 0;
  for (const auto& [label, n_gt] : class_gt) {
    ClassReport cr;
    cr.class_label = label;
    cr.tp = class_tp[label];
    cr.fp = class_fp[label];
    cr.fn = n_gt - cr.tp;
    std::tie(cr.precision, cr.recall) = precision_recall(cr.tp, cr.fp, cr.fn);
    cr.ap = average_precision(class_flags[label], n_gt, &cr.curve);
    total_tp += cr.tp;
    total_fp += cr.fp;
    total_fn += cr.fn;
    ap_sum += cr.ap;
    ++ap_classes;
    report.classes.push_back(std::move(cr));
  }
  // Detections whose class never appears in the ground truth still count as
  // false positives for micro precision, though no AP is defined for them.
  for (const auto& [label, flags] : class_flags)
    if (!class_gt.count(label)) total_fp += static_cast<int>(flags.size());

  report.map = ap_classes ? ap_sum / ap_classes : 0.0;
  auto [p, r] = precision_recall(total_tp, total_fp, total_fn);
  report.precision = p;
  report.recall = r;
  return report;
}

// {"mAP":..,"precision":..,"recall":..,"images":..,"classes":{"person":{"ap":..,
//  "tp":..,"fp":..,"fn":..},...}}; classes in sorted order, reals fixed to 6 digits.
inline std::string eval_report_to_json(const EvalReport& report) {
  std::string out = "{\"mAP\":" + fixed6(report.map);
  out += ",\"precision\":" + fixed6(report.precision);
  out += ",\"recall\":" + fixed6(report.recall);
  out += ",\"images\":" + std::to_string(report.images);
  out += ",\"classes\":{";
  bool first = true;
  for (const auto& cr : report.classes) {
    if (!first) out += ',';
    first = false;
    out += json_str(cr.class_label) + ":{\"ap\":" + fixed6(cr.ap);
    out += ",\"precision\":" + fixed6(cr.precision);
    out += ",\"recall\":" + fixed6(cr.recall);
    out += ",\"tp\":" + std::to_string(cr.tp);
    out += ",\"fp\":" + std::to_string(cr.fp);
    out += ",\"fn\":" + std::to_string(cr.fn) + '}';
  }
  out += "}}";
  return out;
}

/// One CSV per class: header "recall,precision", then the raw (uninterpolated)
/// curve points in global sort order, both columns fixed to 6 digits.
inline std::string pr_curve_to_csv(const std::vector<PrPoint>& curve) {
  std::string out = "recall,precision\n";
  for (const auto& pt : curve) out += fixed6(pt.recall) + ',' + fixed6(pt.precision) + '\n';
  return out;
}

inline void save_pr_curves(const EvalReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (const auto& cr : report.classes) {
    const auto path = dir / ("pr_" + cr.class_label + ".csv");
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write PR curve: " + path.string());
    out << pr_curve_to_csv(cr.curve);
    if (!out) throw IoError("short write: " + path.string());
  }
}

}  // namespace tiledet
