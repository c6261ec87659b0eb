#include "softseg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace softseg {

namespace {

void require_same_extent(const BinaryMask& a, const BinaryMask& b, const char* what) {
  if (a.extent() != b.extent())
    throw std::invalid_argument(std::string(what) + ": mask shapes differ (" +
                                std::to_string(a.width()) + "x" + std::to_string(a.height()) +
                                " vs " + std::to_string(b.width()) + "x" +
                                std::to_string(b.height()) + ")");
}

void require_uniform(const std::vector<BinaryMask>& masks, const Extent& ref, const char* what) {
  for (std::size_t k = 0; k < masks.size(); ++k)
    if (masks[k].extent() != ref)
      throw std::invalid_argument(std::string(what) + ": sample " + std::to_string(k) +
                                  " has a different shape");
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double population_std(const std::vector<double>& v, double mean) {
  double s = 0.0;
  for (double x : v) s += (x - mean) * (x - mean);
  return std::sqrt(s / static_cast<double>(v.size()));
}

// Lower envelope of parabolas for one line (Felzenszwalb & Huttenlocher).
// Only finite samples contribute parabolas; a line without any stays infinite.
void distance_1d(const double* f, double* d, std::size_t n, std::vector<std::size_t>& v,
                 std::vector<double>& z) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  v.clear();
  z.clear();
  for (std::size_t q = 0; q < n; ++q) {
    if (f[q] == inf) continue;
    const double dq = static_cast<double>(q);
    while (!v.empty()) {
      const double dp = static_cast<double>(v.back());
      const double s = ((f[q] + dq * dq) - (f[v.back()] + dp * dp)) / (2.0 * (dq - dp));
      if (s <= z.back()) {
        v.pop_back();
        z.pop_back();
        continue;
      }
      v.push_back(q);
      z.push_back(s);
      break;
    }
    if (v.empty()) {
      v.push_back(q);
      z.push_back(-inf);
    }
  }
  if (v.empty()) {
    std::fill(d, d + n, inf);
    return;
  }
  // z[k] is where parabola k starts to win.
  std::size_t k = 0;
  for (std::size_t q = 0; q < n; ++q) {
    const double dq = static_cast<double>(q);
    while (k + 1 < v.size() && z[k + 1] < dq) ++k;
    const double diff = dq - static_cast<double>(v[k]);
    d[q] = diff * diff + f[v[k]];
  }
}

}  // namespace

ConfusionCounts confusion(const BinaryMask& pred, const BinaryMask& gt) {
  require_same_extent(pred, gt, "confusion");
  ConfusionCounts c;
  const auto p = pred.values();
  const auto g = gt.values();
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i]) {
      if (g[i]) ++c.tp; else ++c.fp;
    } else {
      if (g[i]) ++c.fn_; else ++c.tn;
    }
  }
  return c;
}

double dice(const ConfusionCounts& c) {
  const std::size_t denom = 2 * c.tp + c.fp + c.fn_;
  if (denom == 0) return 1.0;
  return static_cast<double>(2 * c.tp) / static_cast<double>(denom);
}

double iou(const ConfusionCounts& c) {
  const std::size_t uni = c.tp + c.fp + c.fn_;
  if (uni == 0) return 1.0;
  return static_cast<double>(c.tp) / static_cast<double>(uni);
}

double dice(const BinaryMask& pred, const BinaryMask& gt) { return dice(confusion(pred, gt)); }
double iou(const BinaryMask& pred, const BinaryMask& gt) { return iou(confusion(pred, gt)); }

PrecisionRecall precision_recall(const ConfusionCounts& c) {
  PrecisionRecall pr;
  if (c.tp + c.fp == 0)
    pr.precision = c.fn_ == 0 ? 1.0 : 0.0;
  else
    pr.precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
  if (c.tp + c.fn_ == 0)
    pr.recall = 1.0;
  else
    pr.recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn_);
  return pr;
}

PrecisionRecall precision_recall(const BinaryMask& pred, const BinaryMask& gt) {
  return precision_recall(confusion(pred, gt));
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("percentile of an empty sample");
  if (!(q >= 0.0 && q <= 100.0)) throw std::invalid_argument("percentile rank outside [0,100]");
  std::sort(values.begin(), values.end());
  const double pos = q / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

std::vector<double> squared_distance_transform(const BinaryMask& mask) {
  if (mask.empty_foreground())
    throw std::invalid_argument("distance transform of a mask without foreground");
  constexpr double inf = std::numeric_limits<double>::infinity();
  const std::size_t w = mask.width();
  const std::size_t h = mask.height();
  std::vector<double> grid(w * h);
  for (std::size_t i = 0; i < grid.size(); ++i) grid[i] = mask[i] ? 0.0 : inf;

  std::vector<std::size_t> v;
  std::vector<double> z;
  std::vector<double> f(std::max(w, h));
  std::vector<double> d(std::max(w, h));
  for (std::size_t x = 0; x < w; ++x) {
    for (std::size_t y = 0; y < h; ++y) f[y] = grid[y * w + x];
    distance_1d(f.data(), d.data(), h, v, z);
    for (std::size_t y = 0; y < h; ++y) grid[y * w + x] = d[y];
  }
  for (std::size_t y = 0; y < h; ++y) {
    distance_1d(&grid[y * w], d.data(), w, v, z);
    std::copy(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(w), grid.begin() + static_cast<std::ptrdiff_t>(y * w));
  }
  return grid;
}

std::optional<double> hausdorff95(const BinaryMask& a, const BinaryMask& b) {
  require_same_extent(a, b, "hausdorff95");
  const bool a_empty = a.empty_foreground();
  const bool b_empty = b.empty_foreground();
  if (a_empty && b_empty) return 0.0;
  if (a_empty || b_empty) return std::nullopt;

  const std::vector<double> to_b = squared_distance_transform(b);
  const std::vector<double> to_a = squared_distance_transform(a);
  std::vector<double> pooled;
  pooled.reserve(a.count() + b.count());
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i]) pooled.push_back(std::sqrt(to_b[i]));
  for (std::size_t i = 0; i < b.size(); ++i)
    if (b[i]) pooled.push_back(std::sqrt(to_a[i]));
  return percentile(std::move(pooled), 95.0);
}

MetricRow evaluate_at(const SoftMask& pred, const SoftMask& gt, double tau) {
  const BinaryMask p = threshold(pred, tau);
  const BinaryMask g = threshold(gt, tau);
  const ConfusionCounts c = confusion(p, g);
  const PrecisionRecall pr = precision_recall(c);
  MetricRow row;
  row.threshold = tau;
  row.dsc = dice(c);
  row.iou = iou(c);
  row.precision = pr.precision;
  row.recall = pr.recall;
  row.hd95 = hausdorff95(p, g);
  return row;
}

const MetricSummary& SweepSummary::get(const std::string& name) const {
  for (const MetricSummary& m : metrics)
    if (m.metric == name) return m;
  throw std::out_of_range("no summary for metric '" + name + "'");
}

std::vector<double> default_thresholds() {
  std::vector<double> t;
  for (int k = 1; k <= 9; ++k) t.push_back(static_cast<double>(k) / 10.0);
  return t;
}

SweepResult threshold_sweep(const SoftMask& pred, const SoftMask& gt,
                            const std::vector<double>& thresholds) {
  if (thresholds.empty()) throw std::invalid_argument("threshold sweep needs at least one threshold");
  if (pred.extent() != gt.extent())
    throw std::invalid_argument("threshold sweep: prediction and ground truth shapes differ");
  SweepResult result;
  result.rows.reserve(thresholds.size());
  for (double tau : thresholds) result.rows.push_back(evaluate_at(pred, gt, tau));
  result.summary = summarize_sweeps({result.rows});
  return result;
}

SweepSummary summarize_sweeps(const std::vector<std::vector<MetricRow>>& per_case) {
  if (per_case.empty() || per_case.front().empty())
    throw std::invalid_argument("cannot summarise an empty sweep");
  const std::size_t n_thresholds = per_case.front().size();
  for (const auto& rows : per_case)
    if (rows.size() != n_thresholds)
      throw std::invalid_argument("all cases must be evaluated at the same thresholds");

  std::vector<double> dsc, iou_v, prec, rec, hd;
  std::size_t skipped = 0;
  const double n_cases = static_cast<double>(per_case.size());
  for (std::size_t t = 0; t < n_thresholds; ++t) {
    double s_dsc = 0, s_iou = 0, s_prec = 0, s_rec = 0, s_hd = 0;
    std::size_t n_hd = 0;
    for (const auto& rows : per_case) {
      const MetricRow& r = rows[t];
      s_dsc += r.dsc;
      s_iou += r.iou;
      s_prec += r.precision;
      s_rec += r.recall;
      if (r.hd95) {
        s_hd += *r.hd95;
        ++n_hd;
      } else {
        ++skipped;
      }
    }
    dsc.push_back(s_dsc / n_cases);
    iou_v.push_back(s_iou / n_cases);
    prec.push_back(s_prec / n_cases);
    rec.push_back(s_rec / n_cases);
    if (n_hd > 0) hd.push_back(s_hd / static_cast<double>(n_hd));
  }

  auto summarize = [](std::string name, const std::vector<double>& v) {
    MetricSummary m;
    m.metric = std::move(name);
    if (!v.empty()) {
      m.mean = mean_of(v);
      m.std = population_std(v, *m.mean);
    }
    return m;
  };
  SweepSummary s;
  s.metrics.push_back(summarize("dsc", dsc));
  s.metrics.push_back(summarize("iou", iou_v));
  s.metrics.push_back(summarize("precision", prec));
  s.metrics.push_back(summarize("recall", rec));
  s.metrics.push_back(summarize("hd95", hd));
  s.metrics.back().skipped_hd95 = skipped;
  return s;
}

double iou_distance(const BinaryMask& a, const BinaryMask& b) { return 1.0 - iou(a, b); }

namespace {

double mean_pairwise_distance(const std::vector<BinaryMask>& x, const std::vector<BinaryMask>& y) {
  double s = 0.0;
  for (const BinaryMask& a : x)
    for (const BinaryMask& b : y) s += iou_distance(a, b);
  return s / (static_cast<double>(x.size()) * static_cast<double>(y.size()));
}

}  // namespace

double ged_squared_general(const std::vector<BinaryMask>& samples_p,
                           const std::vector<BinaryMask>& samples_q) {
  if (samples_p.empty() || samples_q.empty())
    throw std::invalid_argument("generalized energy distance needs non-empty sample sets");
  const Extent ref = samples_p.front().extent();
  require_uniform(samples_p, ref, "ged_squared_general");
  require_uniform(samples_q, ref, "ged_squared_general");
  const double cross = mean_pairwise_distance(samples_p, samples_q);
  const double within_p = mean_pairwise_distance(samples_p, samples_p);
  const double within_q = mean_pairwise_distance(samples_q, samples_q);
  return 2.0 * cross - within_p - within_q;
}

double assemble_d2_ged(double expected_distance, double diversity) {
  return 2.0 * expected_distance - diversity;
}

GedReport ged_squared_deterministic(const AnnotationSet& annotations, const BinaryMask& pred) {
  if (annotations.extent() != pred.extent())
    throw std::invalid_argument("ged_squared_deterministic: prediction shape differs from annotations");
  const std::size_t n = annotations.size();
  const double dn = static_cast<double>(n);
  GedReport r;
  double dist = 0.0;
  double dsc = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const ConfusionCounts c = confusion(annotations[k], pred);
    dist += 1.0 - iou(c);
    dsc += dice(c);
  }
  double div = 0.0;
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t l = 0; l < n; ++l) div += iou_distance(annotations[k], annotations[l]);
  r.expected_distance = dist / dn;
  r.diversity = div / (dn * dn);
  r.expected_dsc = dsc / dn;
  r.d2_ged = assemble_d2_ged(r.expected_distance, r.diversity);
  return r;
}

}  // namespace softseg
