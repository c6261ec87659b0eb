#pragma once

#include <cstddef>
#include <vector>

#include "softseg/image.hpp"
#include "softseg/losses.hpp"
#include "softseg/mask.hpp"
#include "softseg/rng.hpp"
#include "softseg/tape.hpp"
#include "softseg/tensor.hpp"

namespace softseg {

// Encoder: `depth` blocks of conv3x3 + ReLU + 2x2 average pooling, with
// channel width base_channels * 2^level. Decoder: per level, 2x nearest
// upsampling, concatenation with the encoder skip, conv3x3 + ReLU. Head:
// 1x1 conv to one channel and a sigmoid.
struct TinyUNetConfig {
  std::size_t input_channels = 1;
  std::size_t base_channels = 16;
  std::size_t depth = 2;

  static constexpr std::size_t kernel = 3;

  void validate() const;
  std::size_t channels_at(std::size_t level) const { return base_channels << level; }
  // Spatial dims must be multiples of this.
  std::size_t stride() const { return std::size_t{1} << depth; }

  bool operator==(const TinyUNetConfig&) const = default;
};

using Parameters = std::vector<Tensor>;

// Shapes in parameter order: encoder (w, b) per level, decoder (w, b) from
// the deepest level up, then the head (w, b).
std::vector<Shape> parameter_shapes(const TinyUNetConfig& config);
std::size_t parameter_count(const TinyUNetConfig& config);

// Kaiming normal for hidden convolutions, Xavier uniform for the head,
// zero biases.
Parameters init_parameters(const TinyUNetConfig& config, Rng& rng);

// Throws when the tensors do not match the configuration.
void check_parameters(const TinyUNetConfig& config, const Parameters& params);

struct ForwardPass {
  Tape tape;
  Tape::Var output = 0;
  std::vector<Tape::Var> parameter_vars;

  bool recorded() const { return !tape.empty(); }
  // Sigmoid probabilities, [B,1,H,W].
  const Tensor& probabilities() const { return tape.value(output); }
  SoftMask probability_mask(std::size_t batch_index) const;
};

// Per image and channel: subtract the mean, divide by the population std
// (skipped for constant planes). forward() applies this to its input.
void standardize_channels(Tensor& images);

// images: [B, input_channels, H, W], raw intensities.
ForwardPass forward(const TinyUNetConfig& config, const Parameters& params, const Tensor& images);

// Gradients of the loss with respect to every parameter, in parameter order.
std::vector<Tensor> backward(ForwardPass& pass, const LossValue& loss);

Tensor stack_images(const std::vector<const Image*>& images);

SoftMask predict(const TinyUNetConfig& config, const Parameters& params, const Image& image);

}  // namespace softseg
