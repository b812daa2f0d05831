#pragma once

#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "tiledet/serialize.hpp"
#include "tiledet/types.hpp"

namespace tiledet {

struct ManifestEntry {
  std::string path;  // relative to the manifest's directory
  int width = 0;
  int height = 0;
  std::vector<GroundTruthBox> boxes;

  bool operator==(const ManifestEntry&) const = default;
};

/// On-disk dataset index: images paired with their ground-truth boxes.
struct DatasetManifest {
  std::vector<ManifestEntry> images;

  bool operator==(const DatasetManifest&) const = default;
};

namespace detail {

inline void check_manifest(const DatasetManifest& m) {
  std::set<std::string> seen;
  for (const auto& e : m.images) {
    if (e.width < 1 || e.height < 1)
      throw InvariantError("manifest: non-positive dimensions for \"" + e.path + "\"");
    if (!seen.insert(e.path).second)
      throw InvariantError("manifest: duplicate image path \"" + e.path + "\"");
    for (std::size_t i = 0; i < e.boxes.size(); ++i) {
      const BBox& b = e.boxes[i].box;
      if (!b.valid() || b.x < 0 || b.y < 0 || b.x + b.w > e.width || b.y + b.h > e.height)
        throw InvariantError("manifest: box " + std::to_string(i) + " of \"" + e.path +
                             "\" violates clip invariants");
    }
  }
}

}  // namespace detail

// Key order is part of the format:
// {"images":[{"path":...,"width":...,"height":...,"boxes":[{"x":..,"y":..,"w":..,"h":..,"class":..}]}]}
inline std::string manifest_to_json(const DatasetManifest& m) {
  detail::check_manifest(m);
  std::string out = "{\"images\":[";
  bool first_img = true;
  for (const auto& e : m.images) {
    if (!first_img) out += ',';
    first_img = false;
    out += "{\"path\":" + json_str(e.path);
    out += ",\"width\":" + std::to_string(e.width);
    out += ",\"height\":" + std::to_string(e.height);
    out += ",\"boxes\":[";
    bool first_box = true;
    for (const auto& gt : e.boxes) {
      if (!first_box) out += ',';
      first_box = false;
      out += "{\"x\":" + std::to_string(gt.box.x);
      out += ",\"y\":" + std::to_string(gt.box.y);
      out += ",\"w\":" + std::to_string(gt.box.w);
      out += ",\"h\":" + std::to_string(gt.box.h);
      out += ",\"class\":" + json_str(gt.class_label) + '}';
    }
    out += "]}";
  }
  out += "]}";
  return out;
}

inline DatasetManifest parse_manifest(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& ex) {
    throw ParseError(std::string("manifest: ") + ex.what());
  }
  if (!doc.is_object() || !doc.contains("images") || !doc["images"].is_array())
    throw ParseError("manifest: missing \"images\" array");
  DatasetManifest m;
  for (const auto& je : doc["images"]) {
    ManifestEntry e;
    try {
      e.path = je.at("path").get<std::string>();
      e.width = je.at("width").get<int>();
      e.height = je.at("height").get<int>();
      for (const auto& jb : je.at("boxes")) {
        GroundTruthBox gt;
        gt.box = BBox{jb.at("x").get<int>(), jb.at("y").get<int>(),
                      jb.at("w").get<int>(), jb.at("h").get<int>()};
        gt.class_label = jb.at("class").get<std::string>();
        e.boxes.push_back(std::move(gt));
      }
    } catch (const nlohmann::json::exception& ex) {
      throw ParseError(std::string("manifest: ") + ex.what());
    }
    m.images.push_back(std::move(e));
  }
  detail::check_manifest(m);
  return m;
}

inline DatasetManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open manifest: " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_manifest(text);
}

inline void save_manifest(const DatasetManifest& m, const std::filesystem::path& path) {
  const std::string text = manifest_to_json(m);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write manifest: " + path.string());
  out << text << '\n';
  if (!out) throw IoError("short write: " + path.string());
}

}  // namespace tiledet
