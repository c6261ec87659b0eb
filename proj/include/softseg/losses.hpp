#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "softseg/mask.hpp"

namespace softseg {

// Loss value plus its gradient with respect to every predicted probability.
struct LossValue {
  double value = 0.0;
  std::vector<double> gradient;
};

enum class LossKind { cross_entropy, dice };

// "ce" | "dice"
LossKind parse_loss(std::string_view name);
std::string loss_name(LossKind kind);

inline constexpr double kLogClamp = 1e-7;

// Mean over pixels of -[g ln p + (1-g) ln(1-p)], p clamped to
// [kLogClamp, 1 - kLogClamp].
LossValue cross_entropy(std::span<const double> p, std::span<const double> g);
LossValue cross_entropy(const SoftMask& p, const SoftMask& g);

// 1 - 2 sum(g p) / sum(g + p) over all given pixels, no smoothing term.
// Both all-zero gives 0 with a zero gradient.
LossValue dice_loss(std::span<const double> p, std::span<const double> g);
LossValue dice_loss(const SoftMask& p, const SoftMask& g);

LossValue compute_loss(LossKind kind, std::span<const double> p, std::span<const double> g);

// Mean binary entropy of g; the lower bound of cross_entropy(., g).
double mean_entropy(std::span<const double> g);

}  // namespace softseg
