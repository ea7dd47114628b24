#pragma once

#include "vqvol/losses.hpp"
#include "vqvol/quantizer.hpp"
#include "vqvol/volume.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace vqvol {

struct LevelConfig {
  Dims3 dims{1, 1, 1};
  /// Code dimension D.
  Index code_dim = 1;
  /// Codebook size K.
  Index codes = 256;
  friend bool operator==(const LevelConfig&, const LevelConfig&) = default;
};

enum class LossKind { baur, adaptive };

std::string loss_name(LossKind kind);
LossKind parse_loss(const std::string& name);

struct ModelConfig {
  Dims3 input_dims{24, 24, 24};
  Index base_width = 16;
  /// Channel count cap for the deepest resolutions.
  Index max_width = 256;
  Index blocks_per_resolution = 2;
  /// Coarsest level first.
  std::vector<LevelConfig> levels;
  LossKind loss = LossKind::baur;
  CodebookOptions codebook;
  AdaptiveLossOptions adaptive;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
  /// Power-of-two downsampling factor of level `l` relative to the input.
  Index level_factor(std::size_t l) const;
  /// Number of stride-2 encoder stages (log2 of the coarsest factor).
  int depth() const;

  /// 24^3 input, 3^3 x 16 and 6^3 x 4 latents, K = 256.
  static ModelConfig desk();
  /// 192x256x192 input, 3x4x3 x 32, 12x16x12 x 8 and 48x64x48 x 2 latents, K = 256.
  static ModelConfig full_res();

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

struct TrainConfig {
  Index batch_size = 4;
  double lr_max = 1e-4;
  double lr_min = 1e-6;
  Index cycle_steps = 100;
  double cycle_mult = 2.0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  std::uint64_t seed = 0;
  Index log_every = 10;

  void validate() const;
  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

struct ExperimentConfig {
  ModelConfig model = ModelConfig::desk();
  TrainConfig train;
};

/// Canonical JSON text (sorted keys, fixed formatting).
std::string model_config_json(const ModelConfig& c);
ModelConfig parse_model_config(const std::string& json_text);
std::string experiment_config_json(const ExperimentConfig& c);
ExperimentConfig parse_experiment_config(const std::string& json_text);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

/// 64-bit FNV-1a of the canonical model JSON.
std::uint64_t config_hash(const ModelConfig& c);
std::uint64_t fnv1a64(const void* data, std::size_t size, std::uint64_t seed = 0xcbf29ce484222325ULL);

}  // namespace vqvol
