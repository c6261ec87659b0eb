#pragma once

// Whole-network finite-difference gradient check, shared by the unit tests
// and the acceptance binary.

#include <algorithm>
#include <cmath>

#include "softseg/losses.hpp"
#include "softseg/rng.hpp"
#include "softseg/unet.hpp"

namespace gradcheck {

struct Result {
  std::size_t checked = 0;
  double worst_relative = 0.0;
  double worst_absolute = 0.0;
};

struct Problem {
  softseg::TinyUNetConfig config;
  softseg::Parameters params;
  softseg::Tensor images;
  std::vector<double> target;
};

// Random weights and biases (biases nonzero so ReLU inputs sit away from 0),
// random images and soft targets on the 1/5 grid.
inline Problem make_problem(const softseg::TinyUNetConfig& config, std::size_t batch, std::size_t side,
                            std::uint64_t seed) {
  softseg::Rng rng = softseg::Rng::stream(seed, "gradcheck");
  Problem pb{config, softseg::init_parameters(config, rng), {}, {}};
  for (softseg::Tensor& t : pb.params)
    for (double& v : t.values) v += 0.1 * rng.normal();
  pb.images = softseg::Tensor({batch, config.input_channels, side, side});
  for (double& v : pb.images.values) v = rng.uniform();
  pb.target.resize(batch * side * side);
  for (double& g : pb.target) g = static_cast<double>(rng.below(6)) / 5.0;
  return pb;
}

inline double loss_of(const Problem& pb, softseg::LossKind kind) {
  const softseg::ForwardPass pass = softseg::forward(pb.config, pb.params, pb.images);
  return softseg::compute_loss(kind, pass.probabilities().values, pb.target).value;
}

// Relative error |a - n| / max(|a|, |n|, floor), worst over every scalar
// parameter, with central differences of step h.
inline Result check(Problem& pb, softseg::LossKind kind, double h = 1e-5, double floor = 1e-6) {
  softseg::ForwardPass pass = softseg::forward(pb.config, pb.params, pb.images);
  const softseg::LossValue loss = softseg::compute_loss(kind, pass.probabilities().values, pb.target);
  const std::vector<softseg::Tensor> grads = softseg::backward(pass, loss);

  Result r;
  for (std::size_t t = 0; t < pb.params.size(); ++t) {
    for (std::size_t i = 0; i < pb.params[t].numel(); ++i) {
      double& w = pb.params[t].values[i];
      const double saved = w;
      w = saved + h;
      const double up = loss_of(pb, kind);
      w = saved - h;
      const double down = loss_of(pb, kind);
      w = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double analytic = grads[t].values[i];
      const double abs_err = std::abs(analytic - numeric);
      const double rel = abs_err / std::max({std::abs(analytic), std::abs(numeric), floor});
      r.worst_relative = std::max(r.worst_relative, rel);
      r.worst_absolute = std::max(r.worst_absolute, abs_err);
      ++r.checked;
    }
  }
  return r;
}

}  // namespace gradcheck
