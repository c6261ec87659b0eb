#include "softseg/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace softseg {

namespace {

void require_same_size(std::span<const double> p, std::span<const double> g, const char* what) {
  if (p.size() != g.size())
    throw std::invalid_argument(std::string(what) + ": prediction has " + std::to_string(p.size()) +
                                " values, target has " + std::to_string(g.size()));
  if (p.empty()) throw std::invalid_argument(std::string(what) + ": empty input");
}

void require_same_extent(const SoftMask& p, const SoftMask& g, const char* what) {
  if (p.extent() != g.extent())
    throw std::invalid_argument(std::string(what) + ": prediction and target shapes differ");
}

}  // namespace

LossKind parse_loss(std::string_view name) {
  if (name == "ce") return LossKind::cross_entropy;
  if (name == "dice") return LossKind::dice;
  throw std::invalid_argument("unknown loss '" + std::string(name) + "' (expected ce or dice)");
}

std::string loss_name(LossKind kind) {
  return kind == LossKind::cross_entropy ? "ce" : "dice";
}

LossValue cross_entropy(std::span<const double> p, std::span<const double> g) {
  require_same_size(p, g, "cross_entropy");
  const double n = static_cast<double>(p.size());
  LossValue out;
  out.gradient.resize(p.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double q = std::clamp(p[i], kLogClamp, 1.0 - kLogClamp);
    sum -= g[i] * std::log(q) + (1.0 - g[i]) * std::log1p(-q);
    out.gradient[i] = (q - g[i]) / (q * (1.0 - q)) / n;
  }
  out.value = sum / n;
  return out;
}

LossValue cross_entropy(const SoftMask& p, const SoftMask& g) {
  require_same_extent(p, g, "cross_entropy");
  return cross_entropy(p.values(), g.values());
}

LossValue dice_loss(std::span<const double> p, std::span<const double> g) {
  require_same_size(p, g, "dice_loss");
  double inter = 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    inter += g[i] * p[i];
    total += g[i] + p[i];
  }
  LossValue out;
  out.gradient.assign(p.size(), 0.0);
  if (total == 0.0) return out;
  out.value = 1.0 - 2.0 * inter / total;
  const double u2 = total * total;
  for (std::size_t i = 0; i < p.size(); ++i)
    out.gradient[i] = -2.0 * (g[i] * total - inter) / u2;
  return out;
}

LossValue dice_loss(const SoftMask& p, const SoftMask& g) {
  require_same_extent(p, g, "dice_loss");
  return dice_loss(p.values(), g.values());
}

LossValue compute_loss(LossKind kind, std::span<const double> p, std::span<const double> g) {
  return kind == LossKind::cross_entropy ? cross_entropy(p, g) : dice_loss(p, g);
}

double mean_entropy(std::span<const double> g) {
  if (g.empty()) throw std::invalid_argument("mean_entropy: empty input");
  double s = 0.0;
  for (double v : g) {
    if (v > 0.0) s -= v * std::log(v);
    if (v < 1.0) s -= (1.0 - v) * std::log1p(-v);
  }
  return s / static_cast<double>(g.size());
}

}  // namespace softseg
