#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "softseg/mask.hpp"

namespace softseg {

// Multi-channel input image, stored channel-planar ([C][H][W]) so it can
// be fed to the network without reshuffling.
struct Image {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t channels = 0;
  std::vector<double> values;

  Image() = default;
  Image(std::size_t w, std::size_t h, std::size_t c, double fill = 0.0)
      : width(w), height(h), channels(c), values(w * h * c, fill) {
    if (w == 0 || h == 0 || c == 0)
      throw std::invalid_argument("image dimensions must be positive");
  }

  Extent extent() const { return {width, height}; }
  double& at(std::size_t c, std::size_t x, std::size_t y) { return values[(c * height + y) * width + x]; }
  double at(std::size_t c, std::size_t x, std::size_t y) const { return values[(c * height + y) * width + x]; }

  bool operator==(const Image&) const = default;
};

}  // namespace softseg
