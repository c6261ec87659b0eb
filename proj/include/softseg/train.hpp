#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "softseg/augment.hpp"
#include "softseg/dataio.hpp"
#include "softseg/losses.hpp"
#include "softseg/unet.hpp"

namespace softseg {

struct TrainConfig {
  std::size_t epochs = 40;
  std::size_t batch_size = 8;
  std::uint64_t seed = 0;
  LossKind loss = LossKind::cross_entropy;
  double lr_start = 1e-2;
  double lr_end = 1e-4;
  AugmentConfig augment;

  void validate() const;
};

struct Dataset {
  std::vector<Sample> train;
  std::vector<Sample> val;
};

// Cases tagged "val" go to validation, everything else to training.
Dataset split_dataset(const std::vector<LoadedCase>& cases);

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;  // mean over the epoch's steps
  double val_loss = 0.0;
  double val_dsc_mean = 0.0;  // threshold sweep over {0.1..0.9}
  double val_dsc_std = 0.0;
  double lr = 0.0;  // learning rate of the epoch's last step
};

struct TrainResult {
  Parameters params;
  std::vector<EpochRecord> history;
};

class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, std::size_t epoch, std::size_t step)
      : std::runtime_error(what), epoch_(epoch), step_(step) {}
  std::size_t epoch() const { return epoch_; }
  std::size_t step() const { return step_; }

 private:
  std::size_t epoch_;
  std::size_t step_;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

// Single-threaded and deterministic for a given seed. Random streams:
// "init" for weights, "batch" for shuffling, "augment" for augmentation.
TrainResult train(const Dataset& data, const TinyUNetConfig& model, const TrainConfig& config,
                  const EpochCallback& on_epoch = {});

struct ValidationStats {
  double loss = 0.0;
  double dsc_mean = 0.0;
  double dsc_std = 0.0;
  double mean_abs_error = 0.0;  // mean |p - g| over all pixels
};

ValidationStats validate(const std::vector<Sample>& samples, const TinyUNetConfig& model,
                         const Parameters& params, LossKind loss);

}  // namespace softseg
