#pragma once

#include <cstddef>
#include <vector>

#include "softseg/rng.hpp"

namespace softseg {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);

// Dense row-major array of 64-bit floats. `grad` stays empty until a
// backward pass fills it.
struct Tensor {
  Shape shape;
  std::vector<double> values;
  std::vector<double> grad;

  Tensor() = default;
  explicit Tensor(Shape s, double fill = 0.0);
  Tensor(Shape s, std::vector<double> v);

  std::size_t numel() const { return values.size(); }
  std::size_t dim(std::size_t axis) const { return shape.at(axis); }
  std::size_t rank() const { return shape.size(); }
};

// Zero-mean normal with std sqrt(2 / fan_in).
Tensor kaiming_init(const Shape& shape, std::size_t fan_in, Rng& rng);
// Uniform in +-sqrt(6 / (fan_in + fan_out)).
Tensor xavier_init(const Shape& shape, std::size_t fan_in, std::size_t fan_out, Rng& rng);

}  // namespace softseg
