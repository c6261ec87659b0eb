#pragma once

// Independent reference implementations used only by the tests.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <vector>

#include "softseg/mask.hpp"

namespace oracle {

inline softseg::BinaryMask random_mask(std::mt19937_64& gen, std::size_t w, std::size_t h,
                                       double density) {
  std::bernoulli_distribution on(density);
  std::vector<std::uint8_t> v(w * h);
  for (auto& x : v) x = on(gen) ? 1 : 0;
  return softseg::BinaryMask(w, h, std::move(v));
}

// All-pairs nearest distances, pooled, sorted, 95th percentile by linear
// interpolation between closest ranks.
inline std::optional<double> hausdorff95(const softseg::BinaryMask& a, const softseg::BinaryMask& b) {
  struct P { double x, y; };
  auto points = [](const softseg::BinaryMask& m) {
    std::vector<P> pts;
    for (std::size_t y = 0; y < m.height(); ++y)
      for (std::size_t x = 0; x < m.width(); ++x)
        if (m.at(x, y)) pts.push_back({static_cast<double>(x), static_cast<double>(y)});
    return pts;
  };
  const auto pa = points(a), pb = points(b);
  if (pa.empty() && pb.empty()) return 0.0;
  if (pa.empty() || pb.empty()) return std::nullopt;
  std::vector<double> pooled;
  auto directed = [&](const std::vector<P>& from, const std::vector<P>& to) {
    for (const P& p : from) {
      double best = std::numeric_limits<double>::infinity();
      for (const P& q : to) best = std::min(best, std::sqrt((p.x - q.x) * (p.x - q.x) + (p.y - q.y) * (p.y - q.y)));
      pooled.push_back(best);
    }
  };
  directed(pa, pb);
  directed(pb, pa);
  std::sort(pooled.begin(), pooled.end());
  const double rank = 0.95 * static_cast<double>(pooled.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(rank);
  if (lo + 1 >= pooled.size()) return pooled.back();
  return pooled[lo] * (1.0 - (rank - static_cast<double>(lo))) + pooled[lo + 1] * (rank - static_cast<double>(lo));
}

// Central finite difference of f with respect to x[i].
inline double central_difference(std::vector<double>& x, std::size_t i, double h,
                                 const std::function<double()>& f) {
  const double saved = x[i];
  x[i] = saved + h;
  const double up = f();
  x[i] = saved - h;
  const double down = f();
  x[i] = saved;
  return (up - down) / (2.0 * h);
}

inline double relative_error(double analytic, double numeric, double floor = 1e-8) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

}  // namespace oracle
