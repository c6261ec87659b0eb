#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "softseg/metrics.hpp"

using namespace softseg;

namespace {

BinaryMask row(std::vector<std::uint8_t> v) {
  const std::size_t n = v.size();
  return BinaryMask(n, 1, std::move(v));
}

BinaryMask square2(std::uint8_t a, std::uint8_t b, std::uint8_t c, std::uint8_t d) {
  return BinaryMask(2, 2, {a, b, c, d});
}

}  // namespace

TEST_CASE("overlap metrics on a small example") {
  const BinaryMask pred = row({1, 1, 0, 0});
  const BinaryMask gt = row({1, 0, 1, 0});
  const ConfusionCounts c = confusion(pred, gt);
  CHECK(c == ConfusionCounts{1, 1, 1, 1});
  CHECK(dice(c) == 0.5);
  CHECK(iou(c) == doctest::Approx(1.0 / 3.0));
  const PrecisionRecall pr = precision_recall(c);
  CHECK(pr.precision == 0.5);
  CHECK(pr.recall == 0.5);
}

TEST_CASE("empty-mask conventions") {
  const BinaryMask empty(8, 8);
  BinaryMask some(8, 8);
  some.set(3, 3, true);

  CHECK(dice(empty, empty) == 1.0);
  CHECK(iou(empty, empty) == 1.0);
  const PrecisionRecall both = precision_recall(empty, empty);
  CHECK(both.precision == 1.0);
  CHECK(both.recall == 1.0);
  CHECK(hausdorff95(empty, empty) == std::optional<double>(0.0));

  CHECK(dice(empty, some) == 0.0);
  CHECK(dice(some, empty) == 0.0);
  const PrecisionRecall missed = precision_recall(empty, some);
  CHECK(missed.precision == 0.0);
  CHECK(missed.recall == 0.0);
  const PrecisionRecall spurious = precision_recall(some, empty);
  CHECK(spurious.precision == 0.0);
  CHECK(spurious.recall == 1.0);
  CHECK_FALSE(hausdorff95(empty, some).has_value());
  CHECK_FALSE(hausdorff95(some, empty).has_value());
}

TEST_CASE("confusion counts match a per-pixel loop") {
  std::mt19937_64 gen(3);
  for (int trial = 0; trial < 100; ++trial) {
    const BinaryMask a = oracle::random_mask(gen, 7, 5, 0.4), b = oracle::random_mask(gen, 7, 5, 0.4);
    ConfusionCounts ref;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (a[i] && b[i]) ++ref.tp;
      else if (a[i]) ++ref.fp;
      else if (b[i]) ++ref.fn_;
      else ++ref.tn;
    }
    CHECK(confusion(a, b) == ref);
    const double d = dice(a, b), j = iou(a, b);
    CHECK((d >= 0.0 && d <= 1.0));
    CHECK(d == doctest::Approx(2 * j / (1 + j)));
    CHECK(d == dice(b, a));
  }
  CHECK_THROWS_AS(confusion(BinaryMask(2, 2), BinaryMask(2, 3)), std::invalid_argument);
}

TEST_CASE("percentile uses linear interpolation") {
  CHECK(percentile({1, 2, 3, 4, 5}, 50) == 3.0);
  CHECK(percentile({0, 10}, 95) == doctest::Approx(9.5));
  CHECK(percentile({4, 1, 3, 2}, 0) == 1.0);
  CHECK(percentile({4, 1, 3, 2}, 100) == 4.0);
  CHECK(percentile({7}, 95) == 7.0);
  CHECK_THROWS_AS(percentile({}, 50), std::invalid_argument);
  CHECK_THROWS_AS(percentile({1}, 101), std::invalid_argument);
}

TEST_CASE("hd95 of a pixel shifted by two") {
  BinaryMask a(8, 8), b(8, 8);
  a.set(2, 2, true);
  b.set(4, 2, true);
  CHECK(*hausdorff95(a, b) == doctest::Approx(2.0));
  CHECK(*hausdorff95(a, a) == 0.0);
}

TEST_CASE("hd95 is symmetric and matches brute force") {
  std::mt19937_64 gen(21);
  std::uniform_int_distribution<std::size_t> side(1, 20);
  std::uniform_real_distribution<double> dens(0.02, 0.6);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t w = side(gen), h = side(gen);
    const BinaryMask a = oracle::random_mask(gen, w, h, dens(gen));
    const BinaryMask b = oracle::random_mask(gen, w, h, dens(gen));
    const auto got = hausdorff95(a, b);
    const auto ref = oracle::hausdorff95(a, b);
    REQUIRE(got.has_value() == ref.has_value());
    if (!got) continue;
    CHECK(std::abs(*got - *ref) <= 1e-9);
    CHECK(*got == *hausdorff95(b, a));
    CHECK(*got >= 0.0);
  }
}

TEST_CASE("squared distance transform against brute force") {
  std::mt19937_64 gen(8);
  for (int trial = 0; trial < 50; ++trial) {
    const BinaryMask m = oracle::random_mask(gen, 11, 6, 0.1);
    if (m.empty_foreground()) continue;
    const auto dt = squared_distance_transform(m);
    for (std::size_t y = 0; y < 6; ++y)
      for (std::size_t x = 0; x < 11; ++x) {
        double best = 1e300;
        for (std::size_t v = 0; v < 6; ++v)
          for (std::size_t u = 0; u < 11; ++u)
            if (m.at(u, v)) {
              const double dx = double(x) - double(u), dy = double(y) - double(v);
              best = std::min(best, dx * dx + dy * dy);
            }
        CHECK(dt[y * 11 + x] == best);
      }
  }
  CHECK_THROWS(squared_distance_transform(BinaryMask(3, 3)));
}

TEST_CASE("threshold sweep of a perfect prediction") {
  const SoftMask gt(4, 1, {0.0, 0.3, 0.6, 1.0});
  const SweepResult r = threshold_sweep(gt, gt, default_thresholds());
  REQUIRE(r.rows.size() == 9);
  for (const MetricRow& m : r.rows) {
    CHECK(m.dsc == 1.0);
    CHECK(m.iou == 1.0);
    CHECK(*m.hd95 == 0.0);
  }
  CHECK(*r.summary.get("dsc").mean == 1.0);
  CHECK(*r.summary.get("dsc").std == 0.0);
}

TEST_CASE("default thresholds") {
  const auto t = default_thresholds();
  REQUIRE(t.size() == 9);
  CHECK(t.front() == 0.1);
  CHECK(t[4] == 0.5);
  CHECK(t.back() == 0.9);
}

TEST_CASE("sweep summary averages per threshold then across thresholds") {
  MetricRow a{0.3, 0.2, 0.1, 1.0, 0.5, 3.0};
  MetricRow b{0.3, 0.4, 0.3, 0.0, 0.5, std::nullopt};
  MetricRow c{0.7, 0.6, 0.5, 1.0, 1.0, 1.0};
  MetricRow d{0.7, 0.8, 0.7, 1.0, 0.0, 5.0};
  const SweepSummary s = summarize_sweeps({{a, c}, {b, d}});
  // Per-threshold dsc means 0.3 and 0.7.
  CHECK(*s.get("dsc").mean == doctest::Approx(0.5));
  CHECK(*s.get("dsc").std == doctest::Approx(0.2));
  // hd95: threshold 0.3 uses only case a (3.0), threshold 0.7 averages 3.0.
  CHECK(*s.get("hd95").mean == doctest::Approx(3.0));
  CHECK(*s.get("hd95").std == doctest::Approx(0.0));
  CHECK(s.get("hd95").skipped_hd95 == 1);
  CHECK_THROWS(s.get("nope"));

  MetricRow e{0.5, 0, 0, 0, 0, std::nullopt};
  const SweepSummary all_undef = summarize_sweeps({{e}});
  CHECK_FALSE(all_undef.get("hd95").mean.has_value());
}

TEST_CASE("ged of identical singletons is zero") {
  const BinaryMask m = square2(1, 0, 1, 1);
  CHECK(ged_squared_general({m}, {m}) == 0.0);
}

TEST_CASE("ged of two small sample sets") {
  const std::vector<BinaryMask> p{square2(1, 1, 0, 0), square2(1, 0, 0, 0), square2(0, 1, 1, 0)};
  const std::vector<BinaryMask> q{square2(1, 1, 0, 0), square2(0, 0, 0, 1)};
  // Frozen from exact rational arithmetic: 2*25/36 - 13/27 - 1/2 = 11/27.
  CHECK(ged_squared_general(p, q) == doctest::Approx(11.0 / 27.0).epsilon(1e-14));
  CHECK(ged_squared_general(q, p) == doctest::Approx(11.0 / 27.0).epsilon(1e-14));
}

TEST_CASE("deterministic ged matches the general form") {
  std::mt19937_64 gen(77);
  std::uniform_int_distribution<std::size_t> side(1, 16), count(1, 6);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t w = side(gen), h = side(gen), n = count(gen);
    std::vector<BinaryMask> anns;
    for (std::size_t k = 0; k < n; ++k) anns.push_back(oracle::random_mask(gen, w, h, 0.3));
    const BinaryMask pred = oracle::random_mask(gen, w, h, 0.3);
    const GedReport r = ged_squared_deterministic(AnnotationSet(anns), pred);
    CHECK(std::abs(r.d2_ged - ged_squared_general({pred}, anns)) <= 1e-12);
    CHECK(r.d2_ged == assemble_d2_ged(r.expected_distance, r.diversity));
    CHECK(r.d2_ged >= -1e-12);
    CHECK((r.expected_dsc >= 0.0 && r.expected_dsc <= 1.0));
  }
}

TEST_CASE("assemble_d2_ged") {
  CHECK(assemble_d2_ged(0.1876, 0.2429) == doctest::Approx(0.1323).epsilon(1e-12));
  CHECK(assemble_d2_ged(0.0, 0.0) == 0.0);
}

TEST_CASE("iou distance") {
  CHECK(iou_distance(BinaryMask(2, 2), BinaryMask(2, 2)) == 0.0);
  CHECK(iou_distance(square2(1, 0, 0, 0), square2(0, 1, 0, 0)) == 1.0);
  CHECK(iou_distance(square2(1, 1, 0, 0), square2(1, 0, 0, 0)) == 0.5);
}
