#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "tpgaze/adam.hpp"
#include "tpgaze/model.hpp"
#include "tpgaze/synthgaze.hpp"

namespace tpgaze {

struct TrainConfig {
  int epochs = 10;
  int batch_size = 64;
  double lr = 1e-3;
  /// 0-based epoch from which lr * lr_decay_factor applies.
  int lr_decay_epoch = 5;
  double lr_decay_factor = 0.1;
  double l1_weight = 1.0;
  double sym_weight = 1.0;
  double beta1 = 0.5;
  double beta2 = 0.95;
  std::uint64_t seed = 1;

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

void validate(const TrainConfig& config);

/// Learning rate in effect during `epoch`.
double scheduled_lr(const TrainConfig& config, int epoch);

struct EpochLog {
  int epoch = 0;
  double train_l1 = 0.0;
  double train_sym = 0.0;
  double lr = 0.0;
};

/// Supervised pre-training of theta on L1 + symmetry loss. Prompts stay
/// constant (they are bound without gradients). Mini-batches are drawn from
/// a per-epoch shuffle seeded by `config.seed`. Throws NumericError with the
/// epoch and step if the loss stops being finite.
std::vector<EpochLog> pretrain(Model& model, const LabeledSplit& source, const TrainConfig& config,
                               const std::function<void(const EpochLog&)>& on_epoch = {});

/// Mean L1 gaze loss of `w` over a labeled split, evaluated in chunks.
double mean_l1(const ModelConfig& config, const Weights<float>& w, const LabeledSplit& split);

}  // namespace tpgaze
