#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace softseg {

struct Extent {
  std::size_t width = 0;
  std::size_t height = 0;

  std::size_t pixels() const { return width * height; }
  bool operator==(const Extent&) const = default;
};

// {0,1}-valued raster, row-major.
class BinaryMask {
 public:
  BinaryMask(std::size_t width, std::size_t height);
  BinaryMask(std::size_t width, std::size_t height, std::vector<std::uint8_t> values);

  std::size_t width() const { return extent_.width; }
  std::size_t height() const { return extent_.height; }
  Extent extent() const { return extent_; }
  std::size_t size() const { return values_.size(); }

  std::uint8_t operator[](std::size_t i) const { return values_[i]; }
  std::uint8_t at(std::size_t x, std::size_t y) const { return values_[y * extent_.width + x]; }
  void set(std::size_t x, std::size_t y, bool on) { values_[y * extent_.width + x] = on ? 1 : 0; }
  void set(std::size_t i, bool on) { values_[i] = on ? 1 : 0; }

  std::span<const std::uint8_t> values() const { return values_; }
  std::size_t count() const;
  bool empty_foreground() const { return count() == 0; }

  bool operator==(const BinaryMask&) const = default;

 private:
  Extent extent_;
  std::vector<std::uint8_t> values_;
};

// Probability raster with values in [0,1], row-major.
class SoftMask {
 public:
  SoftMask(std::size_t width, std::size_t height, double fill = 0.0);
  SoftMask(std::size_t width, std::size_t height, std::vector<double> values);

  std::size_t width() const { return extent_.width; }
  std::size_t height() const { return extent_.height; }
  Extent extent() const { return extent_; }
  std::size_t size() const { return values_.size(); }

  double operator[](std::size_t i) const { return values_[i]; }
  double at(std::size_t x, std::size_t y) const { return values_[y * extent_.width + x]; }

  std::span<const double> values() const { return values_; }

  bool operator==(const SoftMask&) const = default;

 private:
  Extent extent_;
  std::vector<double> values_;
};

// N >= 1 same-shaped annotator masks for one image.
class AnnotationSet {
 public:
  explicit AnnotationSet(std::vector<BinaryMask> annotations);

  std::size_t size() const { return annotations_.size(); }
  Extent extent() const { return annotations_.front().extent(); }
  const BinaryMask& operator[](std::size_t k) const { return annotations_[k]; }
  const std::vector<BinaryMask>& masks() const { return annotations_; }

 private:
  std::vector<BinaryMask> annotations_;
};

// The levels {0, 1/n, ..., 1} a fused label can take with n annotators.
class GranularitySet {
 public:
  explicit GranularitySet(std::size_t n_annotators);

  std::size_t annotators() const { return n_; }
  const std::vector<double>& levels() const { return levels_; }
  bool contains(double value) const;

 private:
  std::size_t n_;
  std::vector<double> levels_;
};

GranularitySet granularity(std::size_t n_annotators);

// Pixel-wise vote fraction. Each output is count / N computed in one
// correctly rounded division, so it equals the matching granularity level bit for bit.
SoftMask fuse_mean(const AnnotationSet& set);

// Bernoulli variance mean - mean^2 per pixel.
SoftMask variance_map(const SoftMask& mean);

// 1 where mask >= tau. tau must lie in (0,1).
BinaryMask threshold(const SoftMask& mask, double tau);

}  // namespace softseg
