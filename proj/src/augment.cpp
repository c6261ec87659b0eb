#include "softseg/augment.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace softseg {

void AugmentConfig::validate() const {
  if (max_translate < 0.0 || max_rotate_deg < 0.0 || max_zoom < 0.0 || max_zoom >= 1.0)
    throw std::invalid_argument("augmentation ranges must be non-negative (zoom below 1)");
  if (hflip_prob < 0.0 || hflip_prob > 1.0 || vflip_prob < 0.0 || vflip_prob > 1.0)
    throw std::invalid_argument("flip probabilities must lie in [0,1]");
}

AugmentParams sample_params(Rng& rng, const AugmentConfig& config) {
  AugmentParams p;
  p.tx = rng.uniform(-config.max_translate, config.max_translate);
  p.ty = rng.uniform(-config.max_translate, config.max_translate);
  p.angle = rng.uniform(-config.max_rotate_deg, config.max_rotate_deg);
  p.zoom = rng.uniform(1.0 - config.max_zoom, 1.0 + config.max_zoom);
  p.hflip = rng.bernoulli(config.hflip_prob);
  p.vflip = rng.bernoulli(config.vflip_prob);
  return p;
}

AugmentParams sample_params(Rng& rng, double vflip_prob) {
  AugmentConfig c;
  c.vflip_prob = vflip_prob;
  return sample_params(rng, c);
}

namespace {

// Source coordinates snap to the grid when within this distance, so exact
// rotations by multiples of 90 degrees resample without interpolation error.
constexpr double kSnap = 1e-9;

double snap(double v) {
  const double r = std::round(v);
  return std::abs(v - r) < kSnap ? r : v;
}

struct InverseMap {
  // source = A * (dest - centre) + offset
  double a00, a01, a10, a11;
  double ox, oy;
};

InverseMap inverse_map(const AugmentParams& p, std::size_t width, std::size_t height) {
  const double cx = (static_cast<double>(width) - 1.0) / 2.0;
  const double cy = (static_cast<double>(height) - 1.0) / 2.0;
  const double theta = p.angle * std::numbers::pi / 180.0;
  const double c = std::cos(theta), s = std::sin(theta);
  const double fx = p.hflip ? -1.0 : 1.0;
  const double fy = p.vflip ? -1.0 : 1.0;
  // Forward: d = F * zoom * R * (u + t). Inverse: u = R^T * (F * d) / zoom - t.
  const double inv = 1.0 / p.zoom;
  InverseMap m;
  m.a00 = c * fx * inv;
  m.a01 = s * fy * inv;
  m.a10 = -s * fx * inv;
  m.a11 = c * fy * inv;
  m.ox = cx - p.tx * static_cast<double>(width);
  m.oy = cy - p.ty * static_cast<double>(height);
  return m;
}

double bilinear(const double* plane, std::size_t w, std::size_t h, double x, double y) {
  const double x0f = std::floor(x), y0f = std::floor(y);
  const double fx = x - x0f, fy = y - y0f;
  const auto x0 = static_cast<long long>(x0f), y0 = static_cast<long long>(y0f);
  auto px = [&](long long xx, long long yy) -> double {
    if (xx < 0 || yy < 0 || xx >= static_cast<long long>(w) || yy >= static_cast<long long>(h))
      return 0.0;
    return plane[static_cast<std::size_t>(yy) * w + static_cast<std::size_t>(xx)];
  };
  const double v00 = px(x0, y0);
  if (fx == 0.0 && fy == 0.0) return v00;
  const double v10 = px(x0 + 1, y0), v01 = px(x0, y0 + 1), v11 = px(x0 + 1, y0 + 1);
  const double top = v00 + fx * (v10 - v00);
  const double bottom = v01 + fx * (v11 - v01);
  return top + fy * (bottom - top);
}

}  // namespace

Sample apply(const Image& image, const SoftMask& label, const AugmentParams& params) {
  if (image.extent() != label.extent())
    throw std::invalid_argument("augment: image and label shapes differ");
  if (!(params.zoom > 0.0)) throw std::invalid_argument("augment: zoom must be positive");
  const std::size_t w = image.width, h = image.height;
  const InverseMap m = inverse_map(params, w, h);
  const double cx = (static_cast<double>(w) - 1.0) / 2.0;
  const double cy = (static_cast<double>(h) - 1.0) / 2.0;

  Image out_image(w, h, image.channels);
  std::vector<double> out_label(w * h);
  const auto lab = label.values();
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const double dx = static_cast<double>(x) - cx;
      const double dy = static_cast<double>(y) - cy;
      const double sx = snap(m.a00 * dx + m.a01 * dy + m.ox);
      const double sy = snap(m.a10 * dx + m.a11 * dy + m.oy);
      for (std::size_t c = 0; c < image.channels; ++c)
        out_image.at(c, x, y) = bilinear(image.values.data() + c * w * h, w, h, sx, sy);
      out_label[y * w + x] = std::clamp(bilinear(lab.data(), w, h, sx, sy), 0.0, 1.0);
    }
  }
  return {std::move(out_image), SoftMask(w, h, std::move(out_label))};
}

std::vector<Sample> grow_batch(const std::vector<Sample>& batch, Rng& rng,
                               const AugmentConfig& config) {
  if (!config.enabled) return batch;
  if (batch.empty()) throw std::invalid_argument("grow_batch: empty batch");
  config.validate();
  std::vector<Sample> out;
  out.reserve(batch.size() * (1 + config.copies));
  out.insert(out.end(), batch.begin(), batch.end());
  for (const Sample& s : batch)
    for (std::size_t k = 0; k < config.copies; ++k)
      out.push_back(apply(s.first, s.second, sample_params(rng, config)));
  return out;
}

}  // namespace softseg
