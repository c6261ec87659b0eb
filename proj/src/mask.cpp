#include "softseg/mask.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace softseg {

namespace {

void check_extent(std::size_t width, std::size_t height) {
  if (width == 0 || height == 0)
    throw std::invalid_argument("mask dimensions must be at least 1x1, got " +
                                std::to_string(width) + "x" + std::to_string(height));
}

}  // namespace

BinaryMask::BinaryMask(std::size_t width, std::size_t height)
    : extent_{width, height}, values_(width * height, 0) {
  check_extent(width, height);
}

BinaryMask::BinaryMask(std::size_t width, std::size_t height, std::vector<std::uint8_t> values)
    : extent_{width, height}, values_(std::move(values)) {
  check_extent(width, height);
  if (values_.size() != width * height)
    throw std::invalid_argument("binary mask expects " + std::to_string(width * height) +
                                " values, got " + std::to_string(values_.size()));
  for (std::size_t i = 0; i < values_.size(); ++i)
    if (values_[i] > 1)
      throw std::invalid_argument("binary mask value at index " + std::to_string(i) +
                                  " is not 0 or 1");
}

std::size_t BinaryMask::count() const {
  return static_cast<std::size_t>(std::count(values_.begin(), values_.end(), std::uint8_t{1}));
}

SoftMask::SoftMask(std::size_t width, std::size_t height, double fill)
    : SoftMask(width, height, std::vector<double>(width * height, fill)) {}

SoftMask::SoftMask(std::size_t width, std::size_t height, std::vector<double> values)
    : extent_{width, height}, values_(std::move(values)) {
  check_extent(width, height);
  if (values_.size() != width * height)
    throw std::invalid_argument("soft mask expects " + std::to_string(width * height) +
                                " values, got " + std::to_string(values_.size()));
  for (std::size_t i = 0; i < values_.size(); ++i)
    if (!(values_[i] >= 0.0 && values_[i] <= 1.0))
      throw std::invalid_argument("soft mask value at index " + std::to_string(i) +
                                  " is outside [0,1]");
}

AnnotationSet::AnnotationSet(std::vector<BinaryMask> annotations)
    : annotations_(std::move(annotations)) {
  if (annotations_.empty()) throw std::invalid_argument("annotation set must not be empty");
  const Extent ref = annotations_.front().extent();
  for (std::size_t k = 1; k < annotations_.size(); ++k) {
    const Extent e = annotations_[k].extent();
    if (e != ref)
      throw std::invalid_argument("annotation " + std::to_string(k) + " is " +
                                  std::to_string(e.width) + "x" + std::to_string(e.height) +
                                  ", annotation 0 is " + std::to_string(ref.width) + "x" +
                                  std::to_string(ref.height));
  }
}

GranularitySet::GranularitySet(std::size_t n_annotators) : n_(n_annotators) {
  if (n_ == 0) throw std::invalid_argument("granularity requires at least one annotator");
  levels_.reserve(n_ + 1);
  for (std::size_t i = 0; i <= n_; ++i)
    levels_.push_back(static_cast<double>(i) / static_cast<double>(n_));
}

bool GranularitySet::contains(double value) const {
  return std::binary_search(levels_.begin(), levels_.end(), value);
}

GranularitySet granularity(std::size_t n_annotators) { return GranularitySet(n_annotators); }

SoftMask fuse_mean(const AnnotationSet& set) {
  const Extent e = set.extent();
  std::vector<std::uint32_t> votes(e.pixels(), 0);
  for (const BinaryMask& m : set.masks()) {
    const auto v = m.values();
    for (std::size_t i = 0; i < votes.size(); ++i) votes[i] += v[i];
  }
  const double n = static_cast<double>(set.size());
  std::vector<double> out(votes.size());
  for (std::size_t i = 0; i < votes.size(); ++i) out[i] = static_cast<double>(votes[i]) / n;
  return SoftMask(e.width, e.height, std::move(out));
}

SoftMask variance_map(const SoftMask& mean) {
  std::vector<double> out(mean.size());
  const auto m = mean.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = m[i] - m[i] * m[i];
  return SoftMask(mean.width(), mean.height(), std::move(out));
}

BinaryMask threshold(const SoftMask& mask, double tau) {
  if (!(tau > 0.0 && tau < 1.0))
    throw std::invalid_argument("threshold must lie in (0,1), got " + std::to_string(tau));
  std::vector<std::uint8_t> out(mask.size());
  const auto m = mask.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = m[i] >= tau ? 1 : 0;
  return BinaryMask(mask.width(), mask.height(), std::move(out));
}

}  // namespace softseg
