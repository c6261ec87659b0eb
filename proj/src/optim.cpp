#include "softseg/optim.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace softseg {

AdamState::AdamState(const std::vector<Tensor>& params) {
  m.reserve(params.size());
  v.reserve(params.size());
  for (const Tensor& p : params) {
    m.emplace_back(p.numel(), 0.0);
    v.emplace_back(p.numel(), 0.0);
  }
}

void adam_step(AdamState& state, std::vector<Tensor>& params, const std::vector<Tensor>& grads,
               double lr) {
  if (params.size() != grads.size() || params.size() != state.m.size())
    throw std::invalid_argument("adam_step: parameter, gradient and moment counts differ");
  for (std::size_t i = 0; i < params.size(); ++i)
    if (params[i].numel() != grads[i].numel() || params[i].numel() != state.m[i].size())
      throw std::invalid_argument("adam_step: shape mismatch at tensor " + std::to_string(i));

  ++state.t;
  const double b1 = state.beta1, b2 = state.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    std::vector<double>& p = params[i].values;
    const std::vector<double>& g = grads[i].values;
    std::vector<double>& m = state.m[i];
    std::vector<double>& v = state.v[i];
    for (std::size_t j = 0; j < p.size(); ++j) {
      m[j] = b1 * m[j] + (1.0 - b1) * g[j];
      v[j] = b2 * v[j] + (1.0 - b2) * g[j] * g[j];
      const double m_hat = m[j] / c1;
      const double v_hat = v[j] / c2;
      p[j] -= lr * m_hat / (std::sqrt(v_hat) + state.eps);
    }
  }
}

void CosineSchedule::validate() const {
  if (!(lr_start > lr_end && lr_end > 0.0))
    throw std::invalid_argument("cosine schedule needs lr_start > lr_end > 0");
  if (total_steps == 0) throw std::invalid_argument("cosine schedule needs total_steps >= 1");
}

double cosine_lr(const CosineSchedule& schedule, std::size_t step) {
  schedule.validate();
  if (step > schedule.total_steps)
    throw std::out_of_range("cosine_lr: step " + std::to_string(step) + " beyond total " +
                            std::to_string(schedule.total_steps));
  const double phase = std::numbers::pi * static_cast<double>(step) /
                       static_cast<double>(schedule.total_steps);
  // Weighted form so both endpoints come out exact.
  const double w = 0.5 * (1.0 + std::cos(phase));
  return schedule.lr_start * w + schedule.lr_end * (1.0 - w);
}

}  // namespace softseg
