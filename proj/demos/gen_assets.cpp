// Writes a small demo asset set: two water backgrounds, three sprites with
// alpha, and a sample pipeline config.
//
//   gen_assets [out_dir]     (default: demo_data)

#include <filesystem>
#include <fstream>
#include <iostream>

#include "demo_assets.hpp"

namespace fs = std::filesystem;

int main(int argc, char** argv) {
  const fs::path out = argc > 1 ? argv[1] : "demo_data";
  try {
    fs::create_directories(out / "backgrounds");
    fs::create_directories(out / "sprites");

    for (int i = 0; i < 2; ++i) {
      tiledet::Rng rng = tiledet::stream_rng(42, static_cast<std::uint64_t>(i));
      tiledet::write_png(demo::make_water_background(rng, 640, 480),
                         out / "backgrounds" / ("water_" + std::to_string(i) + ".png"));
    }
    demo::write_sprite_png(demo::make_person_sprite(20, 44), out / "sprites" / "person_0.png");
    demo::write_sprite_png(demo::make_person_sprite(24, 40), out / "sprites" / "person_1.png");
    demo::write_sprite_png(demo::make_buoy_sprite(16), out / "sprites" / "buoy_0.png");

    std::ofstream cfg(out / "config.json", std::ios::binary | std::ios::trunc);
    cfg << "{\"patch\":200,\"overlap\":50,\"enhance\":true,\"nms_iou\":0.5,\"conf\":0.25}\n";

    std::cout << "assets written to " << out.string() << "\n";
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 1;
  }
  return 0;
}
