#include "softseg/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "softseg/metrics.hpp"
#include "softseg/optim.hpp"

namespace softseg {

void TrainConfig::validate() const {
  if (epochs == 0) throw std::invalid_argument("epochs must be at least 1");
  if (batch_size == 0) throw std::invalid_argument("batch size must be at least 1");
  CosineSchedule{lr_start, lr_end, 1}.validate();
  augment.validate();
}

Dataset split_dataset(const std::vector<LoadedCase>& cases) {
  Dataset d;
  for (const LoadedCase& c : cases) {
    Sample s{c.image, c.fused};
    if (c.split && *c.split == Split::val)
      d.val.push_back(std::move(s));
    else
      d.train.push_back(std::move(s));
  }
  return d;
}

namespace {

bool all_finite(const std::vector<double>& v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

std::vector<double> stack_labels(const std::vector<Sample>& batch) {
  std::vector<double> g;
  for (const Sample& s : batch) g.insert(g.end(), s.second.values().begin(), s.second.values().end());
  return g;
}

Tensor stack_batch(const std::vector<Sample>& batch) {
  std::vector<const Image*> images;
  images.reserve(batch.size());
  for (const Sample& s : batch) images.push_back(&s.first);
  return stack_images(images);
}

}  // namespace

ValidationStats validate(const std::vector<Sample>& samples, const TinyUNetConfig& model,
                         const Parameters& params, LossKind loss) {
  if (samples.empty()) throw std::invalid_argument("validation set is empty");
  const ForwardPass pass = forward(model, params, stack_batch(samples));
  const std::vector<double>& p = pass.probabilities().values;
  const std::vector<double> g = stack_labels(samples);

  ValidationStats stats;
  stats.loss = compute_loss(loss, p, g).value;
  double err = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) err += std::abs(p[i] - g[i]);
  stats.mean_abs_error = err / static_cast<double>(p.size());

  const std::vector<double> thresholds = default_thresholds();
  std::vector<std::vector<MetricRow>> rows;
  for (std::size_t i = 0; i < samples.size(); ++i)
    rows.push_back(threshold_sweep(pass.probability_mask(i), samples[i].second, thresholds).rows);
  const MetricSummary& dsc = summarize_sweeps(rows).get("dsc");
  stats.dsc_mean = *dsc.mean;
  stats.dsc_std = *dsc.std;
  return stats;
}

TrainResult train(const Dataset& data, const TinyUNetConfig& model, const TrainConfig& config,
                  const EpochCallback& on_epoch) {
  config.validate();
  model.validate();
  if (data.train.empty()) throw std::invalid_argument("training split is empty");
  if (data.val.empty()) throw std::invalid_argument("validation split is empty");
  for (const auto* split : {&data.train, &data.val})
    for (const Sample& s : *split) {
      if (s.first.channels != model.input_channels)
        throw std::invalid_argument("dataset images have " + std::to_string(s.first.channels) +
                                    " channels, model expects " + std::to_string(model.input_channels));
      if (s.first.extent() != data.train.front().first.extent())
        throw std::invalid_argument("all dataset images must share spatial dims");
    }

  Rng init_rng = Rng::stream(config.seed, "init");
  Rng batch_rng = Rng::stream(config.seed, "batch");
  Rng augment_rng = Rng::stream(config.seed, "augment");

  TrainResult result;
  result.params = init_parameters(model, init_rng);
  AdamState adam(result.params);

  const std::size_t n_train = data.train.size();
  const std::size_t steps_per_epoch = (n_train + config.batch_size - 1) / config.batch_size;
  const std::size_t total_updates = steps_per_epoch * config.epochs;
  // The last update runs at exactly lr_end.
  const CosineSchedule schedule{config.lr_start, config.lr_end,
                                std::max<std::size_t>(1, total_updates - 1)};

  std::vector<std::size_t> order(n_train);
  std::size_t step = 0;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = n_train; i > 1; --i) std::swap(order[i - 1], order[batch_rng.below(i)]);

    double loss_sum = 0.0;
    double lr = 0.0;
    for (std::size_t b = 0; b < steps_per_epoch; ++b, ++step) {
      std::vector<Sample> batch;
      const std::size_t end = std::min(n_train, (b + 1) * config.batch_size);
      for (std::size_t i = b * config.batch_size; i < end; ++i) batch.push_back(data.train[order[i]]);
      if (config.augment.enabled) batch = grow_batch(batch, augment_rng, config.augment);

      ForwardPass pass = forward(model, result.params, stack_batch(batch));
      const std::vector<double>& p = pass.probabilities().values;
      if (!all_finite(p)) throw NumericalError("non-finite network output", epoch, step);
      const LossValue loss = compute_loss(config.loss, p, stack_labels(batch));
      if (!std::isfinite(loss.value)) throw NumericalError("non-finite loss", epoch, step);
      const std::vector<Tensor> grads = backward(pass, loss);
      for (const Tensor& g : grads)
        if (!all_finite(g.values)) throw NumericalError("non-finite gradient", epoch, step);

      lr = cosine_lr(schedule, std::min(step, schedule.total_steps));
      adam_step(adam, result.params, grads, lr);
      loss_sum += loss.value;
    }

    const ValidationStats v = validate(data.val, model, result.params, config.loss);
    if (!std::isfinite(v.loss)) throw NumericalError("non-finite validation loss", epoch, step);
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(steps_per_epoch);
    rec.val_loss = v.loss;
    rec.val_dsc_mean = v.dsc_mean;
    rec.val_dsc_std = v.dsc_std;
    rec.lr = lr;
    result.history.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
  return result;
}

}  // namespace softseg
