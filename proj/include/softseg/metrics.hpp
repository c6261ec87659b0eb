#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "softseg/mask.hpp"

namespace softseg {

struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn_ = 0;
  std::size_t tn = 0;

  std::size_t total() const { return tp + fp + fn_ + tn; }
  bool operator==(const ConfusionCounts&) const = default;
};

ConfusionCounts confusion(const BinaryMask& pred, const BinaryMask& gt);

// Both masks empty counts as a perfect match (DSC = IoU = 1).
double dice(const ConfusionCounts& c);
double iou(const ConfusionCounts& c);
double dice(const BinaryMask& pred, const BinaryMask& gt);
double iou(const BinaryMask& pred, const BinaryMask& gt);

struct PrecisionRecall {
  double precision = 0.0;
  double recall = 0.0;
};

// precision = 1 when nothing was predicted and nothing was missed,
// recall = 1 when the ground truth is empty.
PrecisionRecall precision_recall(const ConfusionCounts& c);
PrecisionRecall precision_recall(const BinaryMask& pred, const BinaryMask& gt);

// Linear-interpolation percentile (q in [0,100]) of an unsorted sample.
double percentile(std::vector<double> values, double q);

// 95th percentile of the pooled nearest-neighbour distances a->b and b->a
// between foreground pixel centres. 0 when both masks are empty, nullopt
// when exactly one is.
std::optional<double> hausdorff95(const BinaryMask& a, const BinaryMask& b);

// Squared Euclidean distance from every pixel to the nearest foreground
// pixel of `mask` (exact, separable lower-envelope transform). The mask
// must have at least one foreground pixel.
std::vector<double> squared_distance_transform(const BinaryMask& mask);

struct MetricRow {
  double threshold = 0.0;
  double dsc = 0.0;
  double iou = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  std::optional<double> hd95;
};

MetricRow evaluate_at(const SoftMask& pred, const SoftMask& gt, double tau);

struct MetricSummary {
  std::string metric;
  std::optional<double> mean;
  std::optional<double> std;
  std::size_t skipped_hd95 = 0;
};

// Mean and population std across thresholds for dsc, iou, precision,
// recall, hd95 (in that order).
struct SweepSummary {
  std::vector<MetricSummary> metrics;

  const MetricSummary& get(const std::string& name) const;
};

struct SweepResult {
  std::vector<MetricRow> rows;
  SweepSummary summary;
};

// {0.1, 0.2, ..., 0.9}
std::vector<double> default_thresholds();

SweepResult threshold_sweep(const SoftMask& pred, const SoftMask& gt,
                            const std::vector<double>& thresholds);

// Several cases evaluated at the same thresholds: each metric is first
// averaged over cases per threshold (undefined hd95 entries are skipped and
// counted), then summarised across thresholds.
SweepSummary summarize_sweeps(const std::vector<std::vector<MetricRow>>& per_case);

// d(x, y) = 1 - IoU(x, y)
double iou_distance(const BinaryMask& a, const BinaryMask& b);

// Empirical squared generalized energy distance between two sample sets,
// means taken over all ordered pairs including self-pairs.
double ged_squared_general(const std::vector<BinaryMask>& samples_p,
                           const std::vector<BinaryMask>& samples_q);

struct GedReport {
  double d2_ged = 0.0;
  double expected_distance = 0.0;
  double diversity = 0.0;
  double expected_dsc = 0.0;
};

// GED for a deterministic prediction against the annotation distribution.
GedReport ged_squared_deterministic(const AnnotationSet& annotations, const BinaryMask& pred);

// 2 * expected_distance - diversity
double assemble_d2_ged(double expected_distance, double diversity);

}  // namespace softseg
