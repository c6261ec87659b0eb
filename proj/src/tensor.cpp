#include "softseg/tensor.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace softseg {

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

Tensor::Tensor(Shape s, double fill) : shape(std::move(s)), values(shape_numel(shape), fill) {}

Tensor::Tensor(Shape s, std::vector<double> v) : shape(std::move(s)), values(std::move(v)) {
  if (values.size() != shape_numel(shape))
    throw std::invalid_argument("tensor shape holds " + std::to_string(shape_numel(shape)) +
                                " values, got " + std::to_string(values.size()));
}

Tensor kaiming_init(const Shape& shape, std::size_t fan_in, Rng& rng) {
  if (fan_in == 0) throw std::invalid_argument("kaiming_init: fan_in must be positive");
  const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
  Tensor t(shape);
  for (double& v : t.values) v = rng.normal(0.0, stddev);
  return t;
}

Tensor xavier_init(const Shape& shape, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  if (fan_in == 0 || fan_out == 0)
    throw std::invalid_argument("xavier_init: fans must be positive");
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Tensor t(shape);
  for (double& v : t.values) v = rng.uniform(-bound, bound);
  return t;
}

}  // namespace softseg
