#include "doctest.h"

#include <boost/random/uniform_int_distribution.hpp>

#include "jdd/bayer.hpp"
#include "jdd/errors.hpp"
#include "support/oracles.hpp"

using namespace jdd;

TEST_CASE("make_mask: single RGGB tile") {
  const auto m = make_mask(2, 2);
  CHECK(m.at(0, 0, 0) == 1.0);
  CHECK(m.at(0, 1, 1) == 1.0);
  CHECK(m.at(1, 0, 1) == 1.0);
  CHECK(m.at(1, 1, 2) == 1.0);
  double total = 0.0;
  for (double v : m.values().values()) total += v;
  CHECK(total == 4.0);
}

TEST_CASE("make_mask: 4x4 repeats the tile") {
  const auto m = make_mask(4, 4);
  const auto tile = make_mask(2, 2);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x)
      for (int c = 0; c < 3; ++c) CHECK(m.at(y, x, c) == tile.at(y % 2, x % 2, c));
}

TEST_CASE("make_mask: one entry per pixel") {
  const auto m = make_mask(6, 8);
  double total = 0.0;
  for (double v : m.values().values()) total += v;
  CHECK(total == 48.0);
}

TEST_CASE("make_mask: rejects odd and non-positive sizes") {
  CHECK_THROWS_AS((void)make_mask(3, 4), DimensionError);
  CHECK_THROWS_AS((void)make_mask(4, 5), DimensionError);
  CHECK_THROWS_AS((void)make_mask(0, 4), DimensionError);
  CHECK_THROWS_AS((void)make_mask(-2, 4), DimensionError);
}

TEST_CASE("image types validate range and parity") {
  CHECK_THROWS_AS(RgbImage(Image(3, 4, 3)), DimensionError);
  CHECK_THROWS_AS(RgbImage(Image(4, 4, 1)), DimensionError);
  CHECK_THROWS_AS(RawImage(Image(4, 4, 3)), DimensionError);
  CHECK_THROWS_AS(RgbImage(Image(4, 4, 3, 1.5)), NumericError);
  Image nan(2, 2, 1);
  nan.at(1, 1) = std::nan("");
  CHECK_THROWS_AS(RawImage{nan}, NumericError);
}

TEST_CASE("mosaic samples the Bayer channel") {
  SUBCASE("constant image") {
    const auto raw = mosaic(RgbImage(Image(2, 2, 3, 0.5)));
    for (double v : raw.pixels().values()) CHECK(v == 0.5);
  }
  SUBCASE("red plane only") {
    Image rgb(2, 2, 3);
    for (int y = 0; y < 2; ++y)
      for (int x = 0; x < 2; ++x) rgb.at(y, x, 0) = 1.0;
    const auto raw = mosaic(RgbImage(rgb));
    CHECK(raw.at(0, 0) == 1.0);
    CHECK(raw.at(0, 1) == 0.0);
    CHECK(raw.at(1, 0) == 0.0);
    CHECK(raw.at(1, 1) == 0.0);
  }
  SUBCASE("matches mask multiply-and-sum") {
    const Image rgb = oracle::random_image(4, 4, 3, 17);
    const auto raw = mosaic(RgbImage(rgb));
    for (int y = 0; y < 4; ++y)
      for (int x = 0; x < 4; ++x) {
        double expected = 0.0;
        for (int c = 0; c < 3; ++c) expected += rgb.at(y, x, c) * oracle::mask_value(y, x, c);
        CHECK(raw.at(y, x) == expected);
      }
  }
}

TEST_CASE("lift places samples on the sparse grid") {
  SUBCASE("ones lift to the mask") {
    const auto lifted = lift(RawImage(Image(2, 2, 1, 1.0)));
    CHECK(lifted == make_mask(2, 2).values());
  }
  SUBCASE("lift(mosaic(x)) == x . m") {
    const Image rgb = oracle::random_image(6, 4, 3, 3);
    const auto projected = lift(mosaic(RgbImage(rgb)));
    CHECK(projected == extract_observed(rgb, make_mask(6, 4)));
  }
  SUBCASE("mosaic(lift(raw)) == raw") {
    const RawImage raw(oracle::random_image(8, 8, 1, 5));
    CHECK(mosaic(RgbImage(lift(raw))) == raw);
  }
}

TEST_CASE("extract_observed") {
  const auto mask = make_mask(4, 6);
  SUBCASE("lifted array is unchanged") {
    const auto lifted = lift(RawImage(oracle::random_image(4, 6, 1, 9)));
    CHECK(extract_observed(lifted, mask) == lifted);
  }
  SUBCASE("zeros off the Bayer grid") {
    const auto out = extract_observed(oracle::random_image(4, 6, 3, 10), mask);
    for (int y = 0; y < 4; ++y)
      for (int x = 0; x < 6; ++x)
        for (int c = 0; c < 3; ++c)
          if (oracle::mask_value(y, x, c) == 0.0) CHECK(out.at(y, x, c) == 0.0);
  }
  SUBCASE("idempotent") {
    const auto once = extract_observed(oracle::random_image(4, 6, 3, 11), mask);
    CHECK(extract_observed(once, mask) == once);
  }
  SUBCASE("shape mismatch") {
    CHECK_THROWS_AS((void)extract_observed(Image(4, 4, 3), mask), DimensionError);
  }
}

TEST_CASE("property: operator algebra on random sizes") {
  Rng rng(2024);
  boost::random::uniform_int_distribution<int> half(1, 12);
  for (int trial = 0; trial < 200; ++trial) {
    const int h = 2 * half(rng);
    const int w = 2 * half(rng);
    const auto seed = static_cast<std::uint64_t>(trial);
    const RawImage raw(oracle::random_image(h, w, 1, seed));
    const RgbImage rgb(oracle::random_image(h, w, 3, seed + 1000));
    const auto mask = make_mask(h, w);

    const Image lifted = lift(raw);
    REQUIRE(mosaic(RgbImage(lifted)) == raw);
    REQUIRE(lift(mosaic(rgb)) == extract_observed(rgb.pixels(), mask));

    double raw_sum = 0.0;
    double lifted_sum = 0.0;
    for (double v : raw.pixels().values()) raw_sum += v;
    for (double v : lifted.values()) lifted_sum += v;
    REQUIRE(raw_sum == lifted_sum);

    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        REQUIRE(mask.at(y, x, 0) + mask.at(y, x, 1) + mask.at(y, x, 2) == 1.0);
  }
}
