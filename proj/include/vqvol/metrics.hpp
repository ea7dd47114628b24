#pragma once

#include "vqvol/volume.hpp"

#include <array>
#include <optional>
#include <vector>

namespace vqvol {

struct MsSsimOptions {
  int scales = 5;
  /// Per-scale exponents; empty selects the standard five-scale weights,
  /// truncated to `scales` and renormalized to sum to one.
  std::vector<double> weights;
  Index window = 11;
  double sigma = 1.5;
  double data_range = 1.0;
};

/// Largest configuration that fits `dims`: scales are dropped first, then the
/// window shrinks to the largest odd size that fits a single scale.
MsSsimOptions ms_ssim_options_for(Dims3 dims, MsSsimOptions requested = {});

/// 3D multi-scale SSIM with a separable Gaussian window (valid filtering) and
/// 2x average-pool downsampling between scales. Contrast-structure terms are
/// clamped at zero; the coarsest scale contributes the full SSIM.
double ms_ssim(const Volume& x, const Volume& y, const MsSsimOptions& options = {});

/// Mean SSIM map at a single scale (the one-scale case of ms_ssim).
double ssim(const Volume& x, const Volume& y, const MsSsimOptions& options = {});

/// Biased squared MMD with a Gaussian RBF kernel exp(-d^2 / (2 s^2)) on
/// flattened volumes. s defaults to the median pairwise distance over the
/// pooled set.
double mmd2(const std::vector<Volume>& a, const std::vector<Volume>& b,
            std::optional<double> bandwidth = std::nullopt);
/// log of mmd2, floored at the smallest positive double.
double log_mmd(double mmd2_value);

struct TissueThresholds {
  double csf = 0.15;
  double gm = 0.45;
  double wm = 0.75;
};

/// Band classification; a value equal to a threshold goes to the higher class.
SegmentationMask segment_tissues(const Volume& x, const TissueThresholds& thresholds = {});

/// 2|A and B| / (|A| + |B|) for one class; 1 when the class is absent from both.
double dice(const SegmentationMask& a, const SegmentationMask& b, Tissue tissue);

struct TMap {
  Volume t;
  /// 1 where the statistic is defined.
  std::vector<std::uint8_t> valid;
  Index n1 = 0;
  Index n2 = 0;
  Index valid_count() const;
  double mean_abs() const;
};

inline constexpr double kVarianceFloor = 1e-12;

/// Voxelwise Welch statistic (mean_a - mean_b) / sqrt(var_a / n1 + var_b / n2)
/// with unbiased variances floored at kVarianceFloor. A voxel is masked when
/// both groups have zero variance and equal means.
TMap t_map(const std::vector<Volume>& group_a, const std::vector<Volume>& group_b);

/// Pearson correlation over voxels valid in both maps.
double pearson(const TMap& a, const TMap& b);

}  // namespace vqvol
