#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "softseg/dataio.hpp"
#include "softseg/image.hpp"
#include "softseg/mask.hpp"

namespace softseg {

enum class ShapeFamily { ellipse, blob };

ShapeFamily parse_shape_family(const std::string& name);
std::string shape_family_name(ShapeFamily family);

// Synthetic multi-annotator data. Every case has a latent signed distance
// field; each simulated annotator marks sdf < bias_k + noise_k(x), with a
// per-annotator constant offset and a smooth per-annotator noise field, so
// annotators disagree mostly near the boundary.
struct SynthConfig {
  std::size_t size = 32;
  std::size_t cases = 48;
  std::size_t annotators = 5;
  ShapeFamily shape = ShapeFamily::ellipse;
  double boundary_noise = 0.7;  // pixels
  double annotator_bias = 1.0;  // pixels
  double image_noise = 0.05;    // intensity std
  double val_fraction = 1.0 / 6.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SyntheticCase {
  Image image;
  std::vector<BinaryMask> annotations;
};

SyntheticCase synthesize_case(const SynthConfig& config, std::size_t index);

// Number of trailing cases tagged "val".
std::size_t validation_count(const SynthConfig& config);

struct SynthSummary {
  std::filesystem::path manifest_path;
  Manifest manifest;
  double mean_distinct_levels = 0.0;  // distinct fused values per case
};

// Writes <out>/case_XXX/{image.sseg, annotator_K.pgm} and <out>/manifest.json.
SynthSummary generate_synthetic(const SynthConfig& config, const std::filesystem::path& out_dir);

}  // namespace softseg
