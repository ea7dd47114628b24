#pragma once

#include "vqvol/checkpoint.hpp"
#include "vqvol/volume.hpp"

#include <functional>
#include <vector>

namespace vqvol {

struct TrainLogEntry {
  long long step = 0;
  double lr = 0.0;
  double total = 0.0;
  double reconstruction = 0.0;
  double codebook = 0.0;
  /// Mean squared reconstruction error over the batch.
  double mse = 0.0;
  /// Code perplexity of the finest level over the batch.
  double perplexity = 0.0;
};

using TrainLogSink = std::function<void(const TrainLogEntry&)>;

/// Fresh state: model weights and codebooks seeded from config.train.seed.
TrainingState initial_state(const ExperimentConfig& config, std::string mode = "H");

/// Fine-tune: keeps the weights and codebooks of `pretrained`, resets the
/// optimizer and step counter. Refuses a checkpoint whose model config differs.
TrainingState fine_tune_state(TrainingState pretrained, const ExperimentConfig& config, std::string mode = "PB");

/// Indices of the batch used at `step`: consecutive slices of a per-epoch
/// permutation seeded by (seed, epoch).
std::vector<Index> batch_indices(long long step, Index batch_size, Index dataset_size, std::uint64_t seed);

/// Runs `steps` optimization steps from state.step onward. Each step: forward
/// loss, backward, Adam with the SGDR rate, EMA codebook update.
std::vector<TrainLogEntry> train(TrainingState& state, const std::vector<Volume>& data, long long steps,
                                 const TrainLogSink& sink = {});

/// Mean reconstruction loss over `data`, evaluated in batches without gradients.
double reconstruction_loss(const Model<float>& model, const std::vector<Volume>& data, Index batch_size);

}  // namespace vqvol
