#include <catch2/catch_amalgamated.hpp>

#include <tiledet/rng.hpp>
#include <tiledet/serialize.hpp>
#include <tiledet/types.hpp>

#include "support/oracles.hpp"

using namespace tiledet;

TEST_CASE("BBox validity and area") {
  CHECK(BBox{0, 0, 1, 1}.valid());
  CHECK(BBox{-5, -5, 3, 4}.valid());
  CHECK_FALSE(BBox{0, 0, 0, 1}.valid());
  CHECK_FALSE(BBox{0, 0, 1, -1}.valid());
  CHECK(BBox{2, 3, 10, 20}.area() == 200);
  CHECK(BBox{0, 0, 100000, 100000}.area() == 10000000000LL);
}

TEST_CASE("IoU on fixed cases") {
  const BBox a{0, 0, 10, 10};
  CHECK(iou(a, a) == 1.0);
  CHECK(iou(a, BBox{5, 0, 10, 10}) == Catch::Approx(1.0 / 3.0).margin(1e-12));
  CHECK(iou(a, BBox{10, 0, 10, 10}) == 0.0);   // touching edges, no overlap
  CHECK(iou(a, BBox{30, 30, 5, 5}) == 0.0);
  CHECK(iou(a, BBox{2, 2, 6, 6}) == Catch::Approx(36.0 / 100.0));  // nested
}

TEST_CASE("IoU agrees with the rasterized oracle") {
  Rng rng(11);
  for (int i = 0; i < 500; ++i) {
    const BBox a{rng.uniform_int(-20, 40), rng.uniform_int(-20, 40),
                 rng.uniform_int(1, 30), rng.uniform_int(1, 30)};
    const BBox b{rng.uniform_int(-20, 40), rng.uniform_int(-20, 40),
                 rng.uniform_int(1, 30), rng.uniform_int(1, 30)};
    CHECK(iou(a, b) == Catch::Approx(oracle::iou_pixels(a, b)).margin(1e-12));
  }
}

TEST_CASE("clip_box") {
  CHECK(clip_box(BBox{10, 10, 5, 5}, 100, 100) == BBox{10, 10, 5, 5});
  CHECK(clip_box(BBox{-3, -4, 10, 10}, 100, 100) == BBox{0, 0, 7, 6});
  CHECK(clip_box(BBox{95, 95, 10, 10}, 100, 100) == BBox{95, 95, 5, 5});
  CHECK_FALSE(clip_box(BBox{100, 0, 5, 5}, 100, 100).has_value());  // starts at the edge
  CHECK_FALSE(clip_box(BBox{-10, 0, 10, 5}, 100, 100).has_value());
  CHECK_FALSE(clip_box(BBox{200, 200, 5, 5}, 100, 100).has_value());
}

TEST_CASE("contains") {
  const BBox outer{10, 10, 20, 20};
  CHECK(contains(outer, outer));
  CHECK(contains(outer, BBox{15, 15, 5, 5}));
  CHECK(contains(outer, BBox{10, 10, 20, 1}));
  CHECK_FALSE(contains(outer, BBox{9, 10, 5, 5}));
  CHECK_FALSE(contains(outer, BBox{25, 25, 10, 10}));   // pokes out the far side
  CHECK_FALSE(contains(BBox{15, 15, 5, 5}, outer));
}

TEST_CASE("box_gap_sq") {
  const BBox a{0, 0, 10, 10};
  CHECK(box_gap_sq(a, BBox{5, 5, 10, 10}) == 0);    // overlapping
  CHECK(box_gap_sq(a, BBox{10, 0, 10, 10}) == 0);   // touching
  CHECK(box_gap_sq(a, BBox{15, 0, 5, 5}) == 25);    // 5 apart on x
  CHECK(box_gap_sq(a, BBox{13, 14, 5, 5}) == 3 * 3 + 4 * 4);
  CHECK(box_gap_sq(BBox{13, 14, 5, 5}, a) == 25);   // symmetric
}

TEST_CASE("ImageBuffer layout") {
  ImageBuffer img(4, 3, 3);
  REQUIRE(img.valid());
  REQUIRE(img.pixels.size() == 4u * 3u * 3u);
  img.at(2, 1, 0) = 10;
  img.at(2, 1, 1) = 20;
  img.at(2, 1, 2) = 30;
  // Row-major interleaved: y * width + x, then channel.
  CHECK(img.pixels[(1 * 4 + 2) * 3 + 0] == 10);
  CHECK(img.pixels[(1 * 4 + 2) * 3 + 1] == 20);
  CHECK(img.pixels[(1 * 4 + 2) * 3 + 2] == 30);

  ImageBuffer bad;
  CHECK_FALSE(bad.valid());
  ImageBuffer filled(2, 2, 1, 7);
  CHECK(filled.at(1, 1) == 7);
}

TEST_CASE("fixed6 formatting") {
  CHECK(fixed6(0.0) == "0.000000");
  CHECK(fixed6(0.5) == "0.500000");
  CHECK(fixed6(1.0) == "1.000000");
  CHECK(fixed6(0.8333333333) == "0.833333");
  CHECK(fixed6(2.0 / 3.0) == "0.666667");
}

TEST_CASE("json escaping") {
  CHECK(json_escape("plain") == "plain");
  CHECK(json_escape("a\"b") == "a\\\"b");
  CHECK(json_escape("a\\b") == "a\\\\b");
  CHECK(json_escape("a\nb\tc") == "a\\nb\\tc");
  CHECK(json_str("x") == "\"x\"");
  CHECK(json_escape(std::string(1, '\x01')) == "\\u0001");
}

TEST_CASE("error hierarchy") {
  CHECK_THROWS_AS(throw ParseError("p"), Error);
  CHECK_THROWS_AS(throw IoError("i"), Error);
  CHECK_THROWS_AS(throw InvariantError("v"), Error);
  CHECK_THROWS_AS(throw DetectorError("d"), Error);
  CHECK_THROWS_AS(throw Error("e"), std::runtime_error);
}

TEST_CASE("rng streams are deterministic and independent") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());

  Rng s0 = stream_rng(7, 0), s1 = stream_rng(7, 1);
  bool differs = false;
  for (int i = 0; i < 8; ++i)
    if (s0.next() != s1.next()) differs = true;
  CHECK(differs);

  Rng r(3);
  for (int i = 0; i < 1000; ++i) {
    const int v = r.uniform_int(-4, 9);
    CHECK(v >= -4);
    CHECK(v <= 9);
    const double d = r.uniform_double();
    CHECK(d >= 0.0);
    CHECK(d < 1.0);
  }
  CHECK(r.uniform_int(5, 5) == 5);
}
