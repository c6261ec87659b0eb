#include "softseg/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <set>
#include <stdexcept>

#include "softseg/rng.hpp"

namespace softseg {

namespace fs = std::filesystem;

ShapeFamily parse_shape_family(const std::string& name) {
  if (name == "ellipse") return ShapeFamily::ellipse;
  if (name == "blob") return ShapeFamily::blob;
  throw std::invalid_argument("unknown shape family '" + name + "' (expected ellipse or blob)");
}

std::string shape_family_name(ShapeFamily family) {
  return family == ShapeFamily::ellipse ? "ellipse" : "blob";
}

void SynthConfig::validate() const {
  if (size < 8) throw std::invalid_argument("synthetic image size must be at least 8");
  if (cases == 0) throw std::invalid_argument("synthetic dataset needs at least one case");
  if (annotators == 0) throw std::invalid_argument("synthetic dataset needs at least one annotator");
  if (boundary_noise < 0.0 || annotator_bias < 0.0 || image_noise < 0.0)
    throw std::invalid_argument("noise scales must be non-negative");
  if (val_fraction < 0.0 || val_fraction >= 1.0)
    throw std::invalid_argument("val_fraction must lie in [0,1)");
}

std::size_t validation_count(const SynthConfig& config) {
  if (config.cases < 2 || config.val_fraction == 0.0) return 0;
  const auto n = static_cast<std::size_t>(std::lround(static_cast<double>(config.cases) * config.val_fraction));
  return std::clamp<std::size_t>(n, 1, config.cases - 1);
}

namespace {

// Radial signed distance: negative inside, |x - c| - r(angle).
struct LatentShape {
  double cx = 0, cy = 0;
  double a = 1, b = 1, rotation = 0;          // ellipse
  double r0 = 1;                              // blob
  double amp[3] = {0, 0, 0}, phase[3] = {0, 0, 0};
  ShapeFamily family = ShapeFamily::ellipse;

  double sdf(double x, double y) const {
    const double dx = x - cx, dy = y - cy;
    const double dist = std::hypot(dx, dy);
    const double angle = std::atan2(dy, dx);
    double r;
    if (family == ShapeFamily::ellipse) {
      const double phi = angle - rotation;
      const double c = std::cos(phi) / a, s = std::sin(phi) / b;
      r = 1.0 / std::sqrt(c * c + s * s);
    } else {
      double k = 1.0;
      for (int h = 0; h < 3; ++h) k += amp[h] * std::cos((h + 2) * angle + phase[h]);
      r = r0 * k;
    }
    return dist - r;
  }
};

LatentShape sample_shape(const SynthConfig& config, Rng& rng) {
  const double s = static_cast<double>(config.size);
  LatentShape shape;
  shape.family = config.shape;
  shape.cx = rng.uniform(0.38, 0.62) * (s - 1.0);
  shape.cy = rng.uniform(0.38, 0.62) * (s - 1.0);
  shape.a = rng.uniform(0.18, 0.30) * s;
  shape.b = rng.uniform(0.18, 0.30) * s;
  shape.rotation = rng.uniform(0.0, std::numbers::pi);
  shape.r0 = rng.uniform(0.20, 0.28) * s;
  for (int h = 0; h < 3; ++h) {
    shape.amp[h] = rng.uniform(0.0, 0.12);
    shape.phase[h] = rng.uniform(0.0, 2.0 * std::numbers::pi);
  }
  return shape;
}

// Smooth unit-variance-ish field: Gaussian control points every 8 pixels,
// bilinearly interpolated.
std::vector<double> smooth_field(std::size_t size, Rng& rng) {
  constexpr double spacing = 8.0;
  const std::size_t g = static_cast<std::size_t>(std::ceil(static_cast<double>(size - 1) / spacing)) + 1;
  std::vector<double> grid(g * g);
  for (double& v : grid) v = rng.normal();
  std::vector<double> field(size * size);
  for (std::size_t y = 0; y < size; ++y) {
    const double gy = static_cast<double>(y) / spacing;
    const auto y0 = std::min(static_cast<std::size_t>(gy), g - 2);
    const double fy = gy - static_cast<double>(y0);
    for (std::size_t x = 0; x < size; ++x) {
      const double gx = static_cast<double>(x) / spacing;
      const auto x0 = std::min(static_cast<std::size_t>(gx), g - 2);
      const double fx = gx - static_cast<double>(x0);
      const double top = grid[y0 * g + x0] * (1 - fx) + grid[y0 * g + x0 + 1] * fx;
      const double bottom = grid[(y0 + 1) * g + x0] * (1 - fx) + grid[(y0 + 1) * g + x0 + 1] * fx;
      field[y * size + x] = top * (1 - fy) + bottom * fy;
    }
  }
  return field;
}

}  // namespace

SyntheticCase synthesize_case(const SynthConfig& config, std::size_t index) {
  config.validate();
  Rng rng = Rng::stream(config.seed, "synth").split(index);
  const std::size_t n = config.size;
  const LatentShape shape = sample_shape(config, rng);

  std::vector<double> sdf(n * n);
  for (std::size_t y = 0; y < n; ++y)
    for (std::size_t x = 0; x < n; ++x)
      sdf[y * n + x] = shape.sdf(static_cast<double>(x), static_cast<double>(y));

  SyntheticCase out;
  out.image = Image(n, n, 1);
  for (std::size_t i = 0; i < n * n; ++i) {
    const double inside = 1.0 / (1.0 + std::exp(sdf[i]));
    out.image.values[i] = 0.2 + 0.6 * inside + config.image_noise * rng.normal();
  }

  for (std::size_t k = 0; k < config.annotators; ++k) {
    Rng ann = rng.split(1000 + k);
    const double bias = config.annotator_bias * ann.normal();
    const std::vector<double> noise = smooth_field(n, ann);
    BinaryMask mask(n, n);
    for (std::size_t i = 0; i < n * n; ++i)
      mask.set(i, sdf[i] < bias + config.boundary_noise * noise[i]);
    out.annotations.push_back(std::move(mask));
  }
  return out;
}

SynthSummary generate_synthetic(const SynthConfig& config, const fs::path& out_dir) {
  config.validate();
  SynthSummary summary;
  summary.manifest.root = out_dir;
  summary.manifest.seed = config.seed;
  const std::size_t n_val = validation_count(config);
  double levels = 0.0;
  for (std::size_t c = 0; c < config.cases; ++c) {
    char id[32];
    std::snprintf(id, sizeof id, "case_%03zu", c);
    const SyntheticCase sc = synthesize_case(config, c);
    CaseEntry entry;
    entry.id = id;
    entry.image = entry.id + "/image.sseg";
    write_raster(out_dir / entry.image, to_raster(sc.image));
    for (std::size_t k = 0; k < sc.annotations.size(); ++k) {
      entry.annotations.push_back(entry.id + "/annotator_" + std::to_string(k) + ".pgm");
      write_pgm(out_dir / entry.annotations.back(), sc.annotations[k]);
    }
    entry.split = c + n_val >= config.cases && n_val > 0 ? Split::val : Split::train;
    summary.manifest.cases.push_back(std::move(entry));

    const SoftMask fused = fuse_mean(AnnotationSet(sc.annotations));
    const std::set<double> distinct(fused.values().begin(), fused.values().end());
    levels += static_cast<double>(distinct.size());
  }
  summary.mean_distinct_levels = levels / static_cast<double>(config.cases);
  summary.manifest_path = out_dir / "manifest.json";
  write_manifest(summary.manifest_path, summary.manifest);
  return summary;
}

}  // namespace softseg
