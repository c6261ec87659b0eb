#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "softseg/augment.hpp"

using namespace softseg;

namespace {

Image ramp_image(std::size_t w, std::size_t h, std::size_t channels = 1) {
  Image img(w, h, channels);
  for (std::size_t i = 0; i < img.values.size(); ++i) img.values[i] = static_cast<double>(i + 1);
  return img;
}

SoftMask ramp_label(std::size_t w, std::size_t h) {
  std::vector<double> v(w * h);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(i + 1) / static_cast<double>(v.size());
  return SoftMask(w, h, std::move(v));
}

}  // namespace

TEST_CASE("identity parameters are a fixed point") {
  const Image img = ramp_image(6, 4, 2);
  const SoftMask lab = ramp_label(6, 4);
  const Sample out = apply(img, lab, AugmentParams{});
  CHECK(out.first == img);
  CHECK(out.second == lab);
}

TEST_CASE("flips are involutions") {
  const Image img = ramp_image(5, 3);
  const SoftMask lab = ramp_label(5, 3);
  for (int mode = 1; mode < 4; ++mode) {
    AugmentParams p;
    p.hflip = mode & 1;
    p.vflip = mode & 2;
    const Sample once = apply(img, lab, p);
    CHECK_FALSE(once.first == img);
    const Sample twice = apply(once.first, once.second, p);
    for (std::size_t i = 0; i < img.values.size(); ++i)
      CHECK(std::abs(twice.first.values[i] - img.values[i]) <= 1e-12);
    for (std::size_t i = 0; i < lab.size(); ++i) CHECK(std::abs(twice.second[i] - lab[i]) <= 1e-12);
  }
  AugmentParams h;
  h.hflip = true;
  const Sample f = apply(img, lab, h);
  CHECK(f.first.at(0, 0, 0) == img.at(0, 4, 0));
}

TEST_CASE("quarter turn is a coordinate permutation") {
  const Image img = ramp_image(4, 4);
  AugmentParams p;
  p.angle = 90.0;
  const Image out = apply(img, ramp_label(4, 4), p).first;
  const std::vector<double> expected{13, 9, 5, 1, 14, 10, 6, 2, 15, 11, 7, 3, 16, 12, 8, 4};
  CHECK(out.values == expected);
}

TEST_CASE("translation shifts by whole pixels with zero fill") {
  const Image img = ramp_image(4, 2);
  AugmentParams p;
  p.tx = 0.25;
  const Image out = apply(img, ramp_label(4, 2), p).first;
  CHECK(out.values == std::vector<double>{0, 1, 2, 3, 0, 5, 6, 7});
}

TEST_CASE("apply rejects mismatched shapes") {
  CHECK_THROWS_AS(apply(ramp_image(4, 4), ramp_label(4, 3), AugmentParams{}), std::invalid_argument);
}

TEST_CASE("sampled parameters stay in range") {
  Rng rng(1);
  std::size_t hflips = 0, vflips = 0;
  const std::size_t n = 100000;
  for (std::size_t i = 0; i < n; ++i) {
    const AugmentParams p = sample_params(rng, 0.0);
    CHECK((p.angle >= -15.0 && p.angle <= 15.0));
    CHECK((p.tx >= -0.1 && p.tx <= 0.1 && p.ty >= -0.1 && p.ty <= 0.1));
    CHECK((p.zoom >= 0.9 && p.zoom <= 1.1));
    hflips += p.hflip;
    vflips += p.vflip;
  }
  CHECK(std::abs(static_cast<double>(hflips) / n - 0.5) < 0.01);
  CHECK(vflips == 0);

  Rng a(3), b(3);
  for (int i = 0; i < 20; ++i) {
    const AugmentParams x = sample_params(a, 0.5), y = sample_params(b, 0.5);
    CHECK(x.angle == y.angle);
    CHECK(x.tx == y.tx);
    CHECK(x.vflip == y.vflip);
  }
}

TEST_CASE("random warps preserve shape and label range") {
  Rng rng(2);
  const Image img = ramp_image(8, 8, 2);
  std::vector<double> v(64);
  for (std::size_t i = 0; i < 64; ++i) v[i] = (i % 3 == 0) ? 1.0 : (i % 3) * 0.4;
  const SoftMask lab(8, 8, v);
  for (int i = 0; i < 10000; ++i) {
    const Sample s = apply(img, lab, sample_params(rng, 0.5));
    REQUIRE(s.first.extent() == img.extent());
    REQUIRE(s.first.channels == 2);
    for (double x : s.second.values()) REQUIRE((x >= 0.0 && x <= 1.0));
  }
}

TEST_CASE("grow_batch keeps originals first") {
  Rng rng(4);
  std::vector<Sample> batch{{ramp_image(8, 8), ramp_label(8, 8)}, {ramp_image(8, 8, 1), SoftMask(8, 8, 0.6)}};
  const std::vector<Sample> grown = grow_batch(batch, rng, AugmentConfig{});
  REQUIRE(grown.size() == 8);
  CHECK(grown[0].first == batch[0].first);
  CHECK(grown[0].second == batch[0].second);
  CHECK(grown[1].second == batch[1].second);

  AugmentConfig off;
  off.enabled = false;
  const std::vector<Sample> same = grow_batch(batch, rng, off);
  REQUIRE(same.size() == 2);
  CHECK(same[1].second == batch[1].second);

  Rng r1(9), r2(9);
  const auto g1 = grow_batch(batch, r1, AugmentConfig{});
  const auto g2 = grow_batch(batch, r2, AugmentConfig{});
  for (std::size_t i = 0; i < g1.size(); ++i) CHECK(g1[i].second == g2[i].second);
  CHECK_THROWS(grow_batch({}, rng, AugmentConfig{}));
}
