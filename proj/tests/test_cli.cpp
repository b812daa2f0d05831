#include <catch2/catch_amalgamated.hpp>

#include <tiledet/image_io.hpp>
#include <tiledet/manifest.hpp>
#include <tiledet/pipeline.hpp>
#include <tiledet/synth.hpp>
#include <tiledet/types.hpp>

#include "support/util.hpp"

using namespace tiledet;
using testutil::run_command;

namespace {

std::string q(const std::filesystem::path& p) { return "'" + p.string() + "'"; }

std::string cli() { return testutil::cli_path(); }

// Flat 128 field with one 6x6 step of +10: the baseline detector finds it at
// exactly the score floor 0.1, so the conf threshold decides its fate.
void write_weak_target(const std::filesystem::path& p) {
  ImageBuffer img(120, 120, 3, 128);
  for (int y = 50; y < 56; ++y)
    for (int x = 50; x < 56; ++x)
      for (int c = 0; c < 3; ++c) img.at(x, y, c) = 138;
  write_png(img, p);
}

bool contains(const std::string& haystack, const std::string& needle) {
  return haystack.find(needle) != std::string::npos;
}

}  // namespace

TEST_CASE("cli: help and argument errors") {
  auto help = run_command(cli() + " --help");
  CHECK(help.exit_code == 0);
  CHECK(contains(help.output, "detect"));
  CHECK(contains(help.output, "eval"));

  CHECK(run_command(cli()).exit_code == 2);                        // subcommand required
  CHECK(run_command(cli() + " detect --bogus-flag").exit_code == 2);
  CHECK(run_command(cli() + " eval --manifest x.json").exit_code == 2);  // --detections missing
  CHECK(run_command(cli() + " frobnicate").exit_code == 2);

  testutil::TempDir dir;
  write_weak_target(dir / "img.png");
  // --image and --manifest are mutually exclusive; neither is also an error.
  CHECK(run_command(cli() + " detect --image " + q(dir / "img.png") + " --manifest " +
                    q(dir / "m.json"))
            .exit_code == 2);
  CHECK(run_command(cli() + " detect --out " + q(dir / "d.json")).exit_code == 2);
}

TEST_CASE("cli: conf knob resolves flag over config over default") {
  testutil::TempDir dir;
  const auto img = dir / "weak.png";
  write_weak_target(img);

  // Built-in default conf 0.25 rejects the floor-score detection.
  auto base = run_command(cli() + " detect --image " + q(img) + " --out " + q(dir / "d0.json"));
  REQUIRE(base.exit_code == 0);
  CHECK(contains(base.output, "detections=0"));
  CHECK(contains(testutil::read_file(dir / "d0.json"), "\"detections\":[]"));

  // Config file loosens it.
  testutil::write_file(dir / "conf.json", "{\"conf\": 0.05}\n");
  auto loose = run_command(cli() + " --config " + q(dir / "conf.json") + " detect --image " +
                           q(img) + " --out " + q(dir / "d1.json"));
  REQUIRE(loose.exit_code == 0);
  CHECK(contains(loose.output, "detections=1"));
  const std::string doc = testutil::read_file(dir / "d1.json");
  CHECK(contains(doc, "\"x\":50"));
  CHECK(contains(doc, "\"score\":0.100000"));

  // An explicit flag beats the config key.
  auto strict = run_command(cli() + " --config " + q(dir / "conf.json") + " detect --conf 0.25" +
                            " --image " + q(img) + " --out " + q(dir / "d2.json"));
  REQUIRE(strict.exit_code == 0);
  CHECK(contains(strict.output, "detections=0"));

  // Config hygiene: unknown keys and broken JSON are contract violations,
  // a missing file is an environment failure.
  testutil::write_file(dir / "bad_key.json", "{\"confidence\": 0.1}\n");
  CHECK(run_command(cli() + " --config " + q(dir / "bad_key.json") + " detect --image " + q(img))
            .exit_code == 2);
  testutil::write_file(dir / "broken.json", "{\"conf\":\n");
  CHECK(run_command(cli() + " --config " + q(dir / "broken.json") + " detect --image " + q(img))
            .exit_code == 2);
  CHECK(run_command(cli() + " --config " + q(dir / "absent.json") + " detect --image " + q(img))
            .exit_code == 1);
}

TEST_CASE("cli: detect failure modes and partial results") {
  testutil::TempDir dir;
  CHECK(run_command(cli() + " detect --image " + q(dir / "nope.png")).exit_code == 1);

  // A configured external detector that dies instantly fails every image.
  write_weak_target(dir / "img.png");
  testutil::write_file(dir / "ext.json",
                       "{\"detector\": \"external\", \"detector_cmd\": \"false\"}\n");
  auto dead = run_command(cli() + " --config " + q(dir / "ext.json") + " detect --image " +
                          q(dir / "img.png") + " --out " + q(dir / "dead.json"));
  CHECK(dead.exit_code == 1);
  CHECK(contains(dead.output, "every image failed"));

  CHECK(run_command(cli() + " detect --detector external --image " + q(dir / "img.png"))
            .exit_code == 2);  // external without --detector-cmd
  CHECK(run_command(cli() + " detect --detector neural --image " + q(dir / "img.png"))
            .exit_code == 2);

  // One readable image plus one missing image: partial success, code 3.
  DatasetManifest m;
  ManifestEntry ok;
  ok.path = "img.png";
  ok.width = 120;
  ok.height = 120;
  m.images.push_back(ok);
  ManifestEntry gone;
  gone.path = "gone.png";
  gone.width = 10;
  gone.height = 10;
  m.images.push_back(gone);
  save_manifest(m, dir / "manifest.json");
  auto partial = run_command(cli() + " detect --manifest " + q(dir / "manifest.json") +
                             " --out " + q(dir / "partial.json"));
  CHECK(partial.exit_code == 3);
  const DetectionsDoc out = load_detections(dir / "partial.json");
  REQUIRE(out.results.size() == 2);
  CHECK(out.results[0].ok);
  CHECK_FALSE(out.results[1].ok);
  CHECK_FALSE(out.results[1].error.empty());
}

TEST_CASE("cli: synth, detect, and eval round-trip deterministically") {
  testutil::TempDir dir;
  write_png(ImageBuffer(320, 240, 3, 60), dir / "bg.png");
  Sprite sp;
  sp.rgb = ImageBuffer(16, 16, 3, 240);
  sp.alpha.assign(256, 255);
  write_png_with_alpha(sp.rgb, sp.alpha, dir / "sprite.png");

  const std::string synth_args = " synth --backgrounds " + q(dir / "bg.png") + " --sprites " +
                                 q(dir / "sprite.png") +
                                 " --scenes 3 --targets-min 1 --targets-max 2"
                                 " --side-min 10 --side-max 30 --min-sep 80 --no-blur --seed 17";
  auto synth_run = run_command(cli() + synth_args + " --out " + q(dir / "synth_a"));
  REQUIRE(synth_run.exit_code == 0);
  CHECK(contains(synth_run.output, "scenes=3"));
  REQUIRE(run_command(cli() + synth_args + " --out " + q(dir / "synth_b")).exit_code == 0);

  CHECK(testutil::digest_file(dir / "synth_a/manifest.json") ==
        testutil::digest_file(dir / "synth_b/manifest.json"));
  for (int i = 0; i < 3; ++i)
    CHECK(testutil::digest_file(dir.path / "synth_a" / scene_filename(i)) ==
          testutil::digest_file(dir.path / "synth_b" / scene_filename(i)));

  const std::string detect_args =
      " detect --manifest " + q(dir / "synth_a/manifest.json");
  REQUIRE(run_command(cli() + detect_args + " --out " + q(dir / "det_a.json")).exit_code == 0);
  REQUIRE(run_command(cli() + detect_args + " --out " + q(dir / "det_b.json")).exit_code == 0);
  CHECK(testutil::digest_file(dir / "det_a.json") == testutil::digest_file(dir / "det_b.json"));

  // Flat background plus opaque high-contrast squares: the baseline detector
  // recovers every annotation exactly, so the scores are all perfect.
  auto eval = run_command(cli() + " eval --detections " + q(dir / "det_a.json") + " --manifest " +
                          q(dir / "synth_a/manifest.json") + " --out " +
                          q(dir / "eval/report.json"));
  REQUIRE(eval.exit_code == 0);
  CHECK(contains(eval.output, "mAP=1.000000 P=1.000000 R=1.000000"));
  CHECK(contains(testutil::read_file(dir / "eval/report.json"), "\"mAP\":1.000000"));
  CHECK(std::filesystem::exists(dir / "eval/pr_person.csv"));
}

TEST_CASE("cli: eval rejects a detections file for different images") {
  testutil::TempDir dir;
  DatasetManifest m;
  ManifestEntry e;
  e.path = "img.png";
  e.width = 100;
  e.height = 100;
  m.images.push_back(e);
  save_manifest(m, dir / "manifest.json");

  DetectionsDoc doc;
  FrameRecord rec;
  rec.path = "other.png";
  doc.results.push_back(rec);
  save_detections(doc, dir / "dets.json");

  auto res = run_command(cli() + " eval --detections " + q(dir / "dets.json") + " --manifest " +
                         q(dir / "manifest.json") + " --out " + q(dir / "report.json"));
  CHECK(res.exit_code == 2);
  CHECK(contains(res.output, "other.png"));
  CHECK(contains(res.output, "img.png"));
}

TEST_CASE("cli: augment writes originals, variants, and a merged manifest") {
  testutil::TempDir dir;
  ImageBuffer img(40, 30, 3);
  for (int y = 0; y < 30; ++y)
    for (int x = 0; x < 40; ++x)
      for (int c = 0; c < 3; ++c) img.at(x, y, c) = static_cast<std::uint8_t>((y * 40 + x) % 256);
  write_png(img, dir / "img.png");
  DatasetManifest m;
  ManifestEntry e;
  e.path = "img.png";
  e.width = 40;
  e.height = 30;
  e.boxes = {{{5, 5, 10, 8}, "person"}};
  m.images.push_back(e);
  save_manifest(m, dir / "manifest.json");

  auto res = run_command(cli() + " augment --manifest " + q(dir / "manifest.json") +
                         " --ops hflip,rot90,zoom:1.5 --seed 4 --out " + q(dir / "aug"));
  REQUIRE(res.exit_code == 0);
  CHECK(contains(res.output, "augmented=3"));

  CHECK(testutil::digest_file(dir / "aug/img.png") == testutil::digest_file(dir / "img.png"));
  const DatasetManifest merged = load_manifest(dir / "aug/manifest.json");
  REQUIRE(merged.images.size() == 4);

  CHECK(merged.images[0].path == "img.png");
  CHECK(merged.images[0].boxes == e.boxes);

  CHECK(merged.images[1].path == "img_hflip.png");
  REQUIRE(merged.images[1].boxes.size() == 1);
  CHECK(merged.images[1].boxes[0].box == BBox{25, 5, 10, 8});

  CHECK(merged.images[2].path == "img_rot90.png");
  CHECK(merged.images[2].width == 30);
  CHECK(merged.images[2].height == 40);
  REQUIRE(merged.images[2].boxes.size() == 1);
  CHECK(merged.images[2].boxes[0].box == BBox{17, 5, 8, 10});

  CHECK(merged.images[3].path == "img_zoom_1.50.png");
  REQUIRE(merged.images[3].boxes.size() == 1);
  CHECK(merged.images[3].boxes[0].box == BBox{0, 1, 13, 12});

  for (const auto& entry : merged.images) {
    const ImageBuffer check = read_png_image(dir.path / "aug" / entry.path);
    CHECK(check.width == entry.width);
    CHECK(check.height == entry.height);
  }

  CHECK(run_command(cli() + " augment --manifest " + q(dir / "manifest.json") +
                    " --ops sharpen --out " + q(dir / "aug2"))
            .exit_code == 2);
  CHECK(run_command(cli() + " augment --manifest " + q(dir / "manifest.json") + " --out " +
                    q(dir / "aug3"))
            .exit_code == 2);
}

TEST_CASE("cli: bench reports rows, speedup, and the latency budget") {
  testutil::TempDir dir;
  write_weak_target(dir / "small.png");
  auto res = run_command(cli() + " --workers 2 bench --image " + q(dir / "small.png") +
                         " --repeats 1 --workers-sweep 2 --out " + q(dir / "bench.json"));
  REQUIRE(res.exit_code == 0);
  CHECK(contains(res.output, "speedup (1 -> 2 workers)"));
  CHECK(contains(res.output, "budget: PASS"));

  const std::string doc = testutil::read_file(dir / "bench.json");
  CHECK(contains(doc, "\"workers\":1"));
  CHECK(contains(doc, "\"workers\":2"));
  CHECK(contains(doc, "\"budget_met\":true"));
  CHECK(contains(doc, "\"stages_ms\""));

  CHECK(run_command(cli() + " bench --image " + q(dir / "small.png") +
                    " --repeats 1 --workers-sweep 2,x")
            .exit_code == 2);
}

TEST_CASE("cli: annotate and timing flags") {
  testutil::TempDir dir;
  write_weak_target(dir / "weak.png");
  // Run from inside the directory so the overlay takes the bare stem.
  auto res = run_command("cd " + q(dir.path) + " && " + cli() +
                         " detect --image weak.png --conf 0.05 --annotate --timing" +
                         " --out out/dets.json");
  REQUIRE(res.exit_code == 0);
  CHECK(std::filesystem::exists(dir / "out/weak_annotated.png"));
  const std::string doc = testutil::read_file(dir / "out/dets.json");
  CHECK(contains(doc, "\"timing_ms\""));

  const ImageBuffer overlay = read_png_image(dir / "out/weak_annotated.png");
  CHECK(overlay.width == 120);
  bool any_green = false;
  for (int y = 0; y < overlay.height && !any_green; ++y)
    for (int x = 0; x < overlay.width && !any_green; ++x)
      any_green = overlay.at(x, y, 1) == 255 && overlay.at(x, y, 0) == 0;
  CHECK(any_green);
}
