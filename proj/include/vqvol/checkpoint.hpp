#pragma once

#include "vqvol/config.hpp"
#include "vqvol/model.hpp"
#include "vqvol/optim.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace vqvol {

/// Everything needed to resume training or run inference.
struct TrainingState {
  ExperimentConfig config;
  Model<float> model;
  Adam adam;
  long long step = 0;
  std::uint64_t data_seed = 0;
  /// Training-mode label: H (healthy), P (pathological) or PB (pretrained, fine-tuned).
  std::string mode = "H";
};

/// "VQCK" container, little-endian, length-prefixed records: config JSON,
/// step, seeds, mode, named parameter tensors, codebooks with EMA state and
/// Adam moments.
std::vector<std::uint8_t> serialize_checkpoint(const TrainingState& state);
TrainingState deserialize_checkpoint(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const std::filesystem::path& path, const TrainingState& state);
TrainingState load_checkpoint(const std::filesystem::path& path);

}  // namespace vqvol
