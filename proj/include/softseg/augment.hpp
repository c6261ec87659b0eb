#pragma once

#include <utility>
#include <vector>

#include "softseg/image.hpp"
#include "softseg/mask.hpp"
#include "softseg/rng.hpp"

namespace softseg {

struct AugmentConfig {
  bool enabled = true;
  double max_translate = 0.10;  // fraction of width / height
  double max_rotate_deg = 15.0;
  double max_zoom = 0.10;       // zoom factor drawn from [1 - max_zoom, 1 + max_zoom]
  double hflip_prob = 0.5;
  double vflip_prob = 0.5;      // 0 for the kidney-style setting
  std::size_t copies = 3;       // augmented copies per image in a grown batch

  void validate() const;
  bool operator==(const AugmentConfig&) const = default;
};

struct AugmentParams {
  double tx = 0.0;     // fraction of width
  double ty = 0.0;     // fraction of height
  double angle = 0.0;  // degrees
  double zoom = 1.0;
  bool hflip = false;
  bool vflip = false;
};

AugmentParams sample_params(Rng& rng, const AugmentConfig& config);
AugmentParams sample_params(Rng& rng, double vflip_prob);

using Sample = std::pair<Image, SoftMask>;

// Warps image and label with one affine map about the image centre:
// translate, rotate, zoom, then flips. Inverse mapping with bilinear
// sampling, zero outside the source, labels clamped to [0,1].
Sample apply(const Image& image, const SoftMask& label, const AugmentParams& params);

// Originals first (unchanged, in input order), then config.copies augmented
// versions of each image, image by image. Returns the input when disabled.
std::vector<Sample> grow_batch(const std::vector<Sample>& batch, Rng& rng,
                               const AugmentConfig& config);

}  // namespace softseg
