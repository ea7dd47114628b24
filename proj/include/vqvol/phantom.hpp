#pragma once

#include "vqvol/volume.hpp"

#include <cstdint>
#include <string>

namespace vqvol {

enum class Cohort { control, atrophy };

Cohort parse_cohort(const std::string& name);
std::string cohort_name(Cohort c);

/// Brain-like phantom: nested deformed ellipsoidal shells (WM core, GM shell,
/// CSF rim) with two CSF ventricles and Gaussian noise inside the head.
struct PhantomSpec {
  Dims3 dims{24, 24, 24};
  Cohort cohort = Cohort::control;
  std::uint64_t seed = 0;
  float csf_intensity = 0.3f;
  float gm_intensity = 0.6f;
  float wm_intensity = 0.9f;
  /// Ventricle enlargement and cortical thinning factor; 1 for controls.
  double atrophy_scale = 1.0;
  /// Relative amplitude of the smooth radial deformation of the outer surface.
  double deformation = 0.08;
  double noise_sigma = 0.02;

  /// Defaults for a cohort: atrophy uses atrophy_scale 1.4.
  static PhantomSpec for_cohort(Cohort cohort, Dims3 dims, std::uint64_t seed);
  void validate() const;
};

struct Phantom {
  Volume volume;
  SegmentationMask labels;
};

Phantom generate_phantom(const PhantomSpec& spec);

}  // namespace vqvol
