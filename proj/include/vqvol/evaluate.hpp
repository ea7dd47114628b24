#pragma once

#include "vqvol/metrics.hpp"
#include "vqvol/model.hpp"
#include "vqvol/volume.hpp"

#include <string>
#include <vector>

namespace vqvol {

struct VolumeScores {
  std::string name;
  double ms_ssim = 0.0;
  double dice_wm = 0.0;
  double dice_gm = 0.0;
  double dice_csf = 0.0;
};

struct Aggregate {
  double mean = 0.0;
  /// Sample standard deviation over volumes; 0 for a single value.
  double std = 0.0;
};

struct EvaluationReport {
  std::string mode;
  std::vector<VolumeScores> volumes;
  Aggregate ms_ssim;
  /// log of the squared MMD between the original and reconstructed sets.
  Aggregate log_mmd;
  Aggregate dice_wm;
  Aggregate dice_gm;
  Aggregate dice_csf;
  double mean_dice() const { return (dice_wm.mean + dice_gm.mean + dice_csf.mean) / 3.0; }
};

/// Scores reconstructions against originals. Dice compares threshold
/// segmentations of both volumes.
EvaluationReport evaluate_pairs(const std::vector<Volume>& originals, const std::vector<Volume>& reconstructions,
                                const std::vector<std::string>& names = {}, const std::string& mode = "H");

EvaluationReport evaluate_model(const Model<float>& model, const std::vector<Volume>& test,
                                const std::vector<std::string>& names = {}, const std::string& mode = "H");

std::vector<Volume> reconstruct_all(const Model<float>& model, const std::vector<Volume>& volumes, Index batch_size = 4);

/// JSON text with a "metrics" object keyed by "MS-SSIM", "log(MMD)",
/// "Dice WM", "Dice GM" and "Dice CSF" (each {"mean", "std"}), plus
/// "mode" and per-volume scores.
std::string report_json(const EvaluationReport& report);

Aggregate aggregate(const std::vector<double>& values);

}  // namespace vqvol
