#pragma once

#include <cstddef>
#include <vector>

#include "softseg/tensor.hpp"

namespace softseg {

// Adam moments for a fixed list of parameter tensors. No weight decay.
struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  std::size_t t = 0;

  AdamState() = default;
  explicit AdamState(const std::vector<Tensor>& params);
};

// One bias-corrected Adam update of `params` in place.
void adam_step(AdamState& state, std::vector<Tensor>& params, const std::vector<Tensor>& grads,
               double lr);

struct CosineSchedule {
  double lr_start = 1e-2;
  double lr_end = 1e-4;
  std::size_t total_steps = 1;

  void validate() const;
};

// lr_end + (lr_start - lr_end) * (1 + cos(pi * step / total_steps)) / 2
double cosine_lr(const CosineSchedule& schedule, std::size_t step);

}  // namespace softseg
