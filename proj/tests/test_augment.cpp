#include <catch2/catch_amalgamated.hpp>

#include <tiledet/augment.hpp>
#include <tiledet/rng.hpp>

#include "support/util.hpp"

using namespace tiledet;

namespace {

// Every pixel distinct so any misplaced sample is visible.
ImageBuffer ramp_image(int w, int h, int channels = 1) {
  ImageBuffer img(w, h, channels);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < channels; ++c)
        img.at(x, y, c) = static_cast<std::uint8_t>((y * w + x + c * 7) % 251);
  return img;
}

std::vector<GroundTruthBox> one_box(BBox b, std::string label = "person") {
  return {GroundTruthBox{b, std::move(label)}};
}

// Independent box oracle: rasterize the box, transform the mask the same way
// the image is transformed, read the tight extent back.
BBox transformed_box_via_mask(const BBox& b, int w, int h, const AugmentOp& op) {
  ImageBuffer mask(w, h, 1, 0);
  for (int y = b.y; y < b.y + b.h; ++y)
    for (int x = b.x; x < b.x + b.w; ++x) mask.at(x, y, 0) = 255;
  const AugmentResult res = augment(mask, {}, op);
  int x0 = res.image.width, y0 = res.image.height, x1 = -1, y1 = -1;
  for (int y = 0; y < res.image.height; ++y)
    for (int x = 0; x < res.image.width; ++x)
      if (res.image.at(x, y, 0)) {
        x0 = std::min(x0, x);
        y0 = std::min(y0, y);
        x1 = std::max(x1, x);
        y1 = std::max(y1, y);
      }
  REQUIRE(x1 >= 0);
  return {x0, y0, x1 - x0 + 1, y1 - y0 + 1};
}

}  // namespace

TEST_CASE("op token parsing") {
  CHECK(parse_augment_op("hflip").kind == AugmentKind::hflip);
  CHECK(parse_augment_op("vflip").kind == AugmentKind::vflip);
  CHECK(parse_augment_op("rot90").kind == AugmentKind::rot90);
  CHECK(parse_augment_op("rot180").kind == AugmentKind::rot180);
  CHECK(parse_augment_op("rot270").kind == AugmentKind::rot270);

  const AugmentOp bare = parse_augment_op("zoom");
  CHECK(bare.kind == AugmentKind::zoom);
  CHECK_FALSE(bare.factor.has_value());

  const AugmentOp fixed = parse_augment_op("zoom:1.5");
  REQUIRE(fixed.factor.has_value());
  CHECK(*fixed.factor == Catch::Approx(1.5));
  CHECK(*parse_augment_op("zoom:10").factor == Catch::Approx(10.0));

  CHECK_THROWS_AS(parse_augment_op("junk"), ParseError);
  CHECK_THROWS_AS(parse_augment_op("zoom:0"), ParseError);
  CHECK_THROWS_AS(parse_augment_op("zoom:-1"), ParseError);
  CHECK_THROWS_AS(parse_augment_op("zoom:11"), ParseError);
  CHECK_THROWS_AS(parse_augment_op("zoom:abc"), ParseError);
  CHECK_THROWS_AS(parse_augment_op("zoom:1.5x"), ParseError);
  CHECK_THROWS_AS(parse_augment_op(""), ParseError);
}

TEST_CASE("op suffixes are filename-safe") {
  CHECK(op_suffix(parse_augment_op("hflip")) == "hflip");
  CHECK(op_suffix(parse_augment_op("rot270")) == "rot270");
  CHECK(op_suffix(parse_augment_op("zoom:1.5")) == "zoom_1.50");
  CHECK(op_suffix(parse_augment_op("zoom"), 0.75) == "zoom_0.75");
}

TEST_CASE("flip and rotation pixel formulas") {
  const ImageBuffer src = ramp_image(2, 3);
  // src values: row y holds {2y? no: y*2+x}. Explicitly: (0,0)=0 (1,0)=1
  // (0,1)=2 (1,1)=3 (0,2)=4 (1,2)=5.

  const ImageBuffer h = augment(src, {}, parse_augment_op("hflip")).image;
  CHECK(h.at(0, 0, 0) == 1);
  CHECK(h.at(1, 0, 0) == 0);
  CHECK(h.at(0, 2, 0) == 5);

  const ImageBuffer v = augment(src, {}, parse_augment_op("vflip")).image;
  CHECK(v.at(0, 0, 0) == 4);
  CHECK(v.at(1, 2, 0) == 1);

  const ImageBuffer r = augment(src, {}, parse_augment_op("rot90")).image;
  REQUIRE(r.width == 3);
  REQUIRE(r.height == 2);
  // Clockwise: dst(nx, ny) = src(ny, H-1-nx).
  CHECK(r.at(0, 0, 0) == 4);
  CHECK(r.at(2, 0, 0) == 0);
  CHECK(r.at(0, 1, 0) == 5);
  CHECK(r.at(2, 1, 0) == 1);
}

TEST_CASE("rotation compositions agree") {
  const ImageBuffer src = ramp_image(5, 4, 3);
  const auto op = [](const char* t) { return parse_augment_op(t); };

  const ImageBuffer r180 = augment(src, {}, op("rot180")).image;
  const ImageBuffer hv = augment(augment(src, {}, op("hflip")).image, {}, op("vflip")).image;
  CHECK(r180 == hv);

  const ImageBuffer r270 = augment(src, {}, op("rot270")).image;
  const ImageBuffer r90_r180 = augment(augment(src, {}, op("rot180")).image, {}, op("rot90")).image;
  CHECK(r270 == r90_r180);
}

TEST_CASE("flips and quarter turns are involutions on image and boxes") {
  const ImageBuffer src = ramp_image(37, 23);
  const std::vector<GroundTruthBox> boxes = {{{3, 5, 10, 7}, "person"}, {{20, 1, 9, 16}, "buoy"}};

  for (const char* tok : {"hflip", "vflip"}) {
    const AugmentOp op = parse_augment_op(tok);
    const AugmentResult once = augment(src, boxes, op);
    const AugmentResult twice = augment(once.image, once.boxes, op);
    INFO(tok);
    CHECK(twice.image == src);
    CHECK(twice.boxes == boxes);
  }

  AugmentResult cur{src, boxes, 1.0};
  for (int i = 0; i < 4; ++i) cur = augment(cur.image, cur.boxes, parse_augment_op("rot90"));
  CHECK(cur.image == src);
  CHECK(cur.boxes == boxes);
}

TEST_CASE("box transforms match the rasterized-mask oracle") {
  Rng rng(77);
  const int W = 41, H = 29;
  for (const char* tok : {"hflip", "vflip", "rot90", "rot180", "rot270"}) {
    const AugmentOp op = parse_augment_op(tok);
    for (int trial = 0; trial < 60; ++trial) {
      BBox b;
      b.w = rng.uniform_int(1, 12);
      b.h = rng.uniform_int(1, 12);
      b.x = rng.uniform_int(0, W - b.w);
      b.y = rng.uniform_int(0, H - b.h);
      const AugmentResult res = augment(ImageBuffer(W, H, 1, 0), one_box(b), op);
      REQUIRE(res.boxes.size() == 1);
      INFO(tok << " box " << b.x << "," << b.y << "," << b.w << "," << b.h);
      CHECK(res.boxes[0].box == transformed_box_via_mask(b, W, H, op));
      CHECK(res.boxes[0].class_label == "person");
    }
  }
}

TEST_CASE("zoom factor 1.0 is the identity") {
  const ImageBuffer src = ramp_image(50, 40, 3);
  const auto boxes = one_box({5, 7, 11, 13});
  const AugmentResult res = augment(src, boxes, parse_augment_op("zoom:1.0"));
  CHECK(res.image == src);
  CHECK(res.boxes == boxes);
  CHECK(res.realized_factor == Catch::Approx(1.0));
}

TEST_CASE("zoom in crops the center and rescales surviving boxes") {
  const ImageBuffer src = ramp_image(100, 100);
  // f=1.5: zoomed 150x150, crop offset 25.
  const AugmentOp op = parse_augment_op("zoom:1.5");

  // Centered box stays, scaled: (40,40,20,20) -> (35,35,30,30).
  AugmentResult res = augment(src, one_box({40, 40, 20, 20}), op);
  REQUIRE(res.boxes.size() == 1);
  CHECK(res.boxes[0].box == BBox{35, 35, 30, 30});
  CHECK(res.image.width == 100);
  CHECK(res.image.height == 100);

  // Near-corner box loses most of its area to the crop: scaled span
  // [-10,20) keeps 400 of 900 square units, under half, so it drops.
  res = augment(src, one_box({10, 10, 20, 20}), op);
  CHECK(res.boxes.empty());
}

TEST_CASE("zoom out pads by edge replication and recenters boxes") {
  const ImageBuffer src = ramp_image(100, 100);
  const AugmentResult res = augment(src, one_box({0, 0, 40, 40}), parse_augment_op("zoom:0.5"));
  REQUIRE(res.boxes.size() == 1);
  CHECK(res.boxes[0].box == BBox{25, 25, 20, 20});

  // Padding replicates the outermost source samples.
  CHECK(res.image.at(0, 0, 0) == res.image.at(24, 24, 0));
  CHECK(res.image.at(99, 99, 0) == res.image.at(75, 75, 0));
}

TEST_CASE("the half-area keep rule is inclusive") {
  const ImageBuffer src = ramp_image(100, 100);
  const AugmentOp op = parse_augment_op("zoom:2.0");  // offset 50

  // (15,30,20,20) scales to x [-20,20): exactly half survives the clip; kept.
  AugmentResult res = augment(src, one_box({15, 30, 20, 20}), op);
  REQUIRE(res.boxes.size() == 1);
  CHECK(res.boxes[0].box == BBox{0, 10, 20, 40});

  // One pixel further left falls just under half; dropped.
  res = augment(src, one_box({14, 30, 20, 20}), op);
  CHECK(res.boxes.empty());
}

TEST_CASE("zoom keeps a uniform image uniform") {
  const ImageBuffer src(64, 48, 3, 137);
  for (const char* tok : {"zoom:0.5", "zoom:0.77", "zoom:1.3", "zoom:2.0"}) {
    const AugmentResult res = augment(src, {}, parse_augment_op(tok));
    INFO(tok);
    CHECK(res.image == src);
  }
}

TEST_CASE("bare zoom samples its factor from the rng") {
  const ImageBuffer src = ramp_image(60, 60);
  const AugmentOp op = parse_augment_op("zoom");

  CHECK_THROWS_AS(augment(src, {}, op), InvariantError);  // no rng supplied

  Rng a(5), b(5);
  const AugmentResult first = augment(src, {}, op, &a);
  const AugmentResult second = augment(src, {}, op, &b);
  CHECK(first.realized_factor == second.realized_factor);
  CHECK(first.image == second.image);
  CHECK(first.realized_factor >= 0.5);
  CHECK(first.realized_factor < 2.0);

  Rng spread(11);
  for (int i = 0; i < 200; ++i) {
    const double f = sample_zoom_factor(spread);
    REQUIRE(f >= 0.5);
    REQUIRE(f < 2.0);
  }
}

TEST_CASE("degenerate zoom factors are rejected at apply time") {
  const ImageBuffer src = ramp_image(100, 100);
  CHECK_THROWS_AS(augment(src, {}, parse_augment_op("zoom:0.001")), InvariantError);
  CHECK_THROWS_AS(augment(ImageBuffer{}, {}, parse_augment_op("hflip")), InvariantError);
}
