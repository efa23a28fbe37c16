#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "ata/model.hpp"
#include "ata/synthdata.hpp"

namespace ata {

struct TrainHyper {
  double lr = 0.05;
  std::size_t epochs = 20;
  std::size_t batch = 16;
  std::uint64_t seed = 0;
  double momentum = 0.9;
  /// 0 selects resolve_threads().
  std::size_t threads = 0;
};

struct EpochMetrics {
  std::size_t epoch = 0;
  double loss = 0.0;       // mean training cross-entropy over the epoch
  double train_acc = 0.0;  // accuracy of the pre-update forward passes
  double val_acc = 0.0;
};

struct TrainResult {
  ModelParams params;
  std::vector<EpochMetrics> history;
};

using EpochCallback = std::function<void(const EpochMetrics&)>;

/// Mini-batch SGD with momentum on softmax cross-entropy. Batches are
/// evaluated clip-parallel with per-clip gradients summed in index order,
/// so results do not depend on the thread count.
TrainResult train(std::span<const SyntheticClip> train_set, std::span<const SyntheticClip> val_set,
                  const ModelConfig& cfg, const TrainHyper& hyper, const EpochCallback& on_epoch = {});

/// Same as train() but starting from the given parameters.
TrainResult train_from(ModelParams params, std::span<const SyntheticClip> train_set,
                       std::span<const SyntheticClip> val_set, const ModelConfig& cfg, const TrainHyper& hyper,
                       const EpochCallback& on_epoch = {});

/// Fraction of clips whose arg-max logit equals the label.
double evaluate_accuracy(std::span<const SyntheticClip> clips, ModelParams& params, const ModelConfig& cfg,
                         std::size_t threads = 0);

}  // namespace ata
