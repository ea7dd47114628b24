#include "vqvol/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace vqvol {

namespace {

constexpr double kWmBoundary = 0.62;
constexpr double kCsfRim = 0.1;
constexpr int kDeformTerms = 4;

struct Wave {
  double wz, wy, wx, phase, weight;
};

bool inside_ellipsoid(double z, double y, double x, const double c[3], const double r[3]) {
  const double a = (z - c[0]) / r[0], b = (y - c[1]) / r[1], e = (x - c[2]) / r[2];
  return a * a + b * b + e * e <= 1.0;
}

}  // namespace

Cohort parse_cohort(const std::string& name) {
  if (name == "control") return Cohort::control;
  if (name == "atrophy") return Cohort::atrophy;
  throw std::invalid_argument("unknown cohort '" + name + "' (expected control or atrophy)");
}

std::string cohort_name(Cohort c) { return c == Cohort::control ? "control" : "atrophy"; }

PhantomSpec PhantomSpec::for_cohort(Cohort cohort, Dims3 dims, std::uint64_t seed) {
  PhantomSpec s;
  s.dims = dims;
  s.cohort = cohort;
  s.seed = seed;
  s.atrophy_scale = cohort == Cohort::atrophy ? 1.4 : 1.0;
  return s;
}

void PhantomSpec::validate() const {
  for (Index d : dims) {
    if (d < 16) throw std::invalid_argument("phantom: dims must be >= 16 per axis");
  }
  if (!(0.0f <= csf_intensity && csf_intensity < gm_intensity && gm_intensity < wm_intensity &&
        wm_intensity <= 1.0f)) {
    throw std::invalid_argument("phantom: intensity bands must be ordered within [0, 1]");
  }
  if (cohort == Cohort::atrophy && atrophy_scale < 1.0) {
    throw std::invalid_argument("phantom: atrophy cohort needs atrophy_scale >= 1");
  }
  if (!(atrophy_scale > 0.0) || 0.1 * atrophy_scale >= 1.0 - kWmBoundary - 0.05) {
    throw std::invalid_argument("phantom: atrophy_scale out of range");
  }
  if (!(deformation >= 0.0 && deformation < 0.5)) throw std::invalid_argument("phantom: deformation must lie in [0, 0.5)");
  if (!(noise_sigma >= 0.0)) throw std::invalid_argument("phantom: noise_sigma must be >= 0");
}

Phantom generate_phantom(const PhantomSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);

  const double centre[3] = {0.03 * unit(rng), 0.03 * unit(rng), 0.03 * unit(rng)};
  const double radii[3] = {0.78 * (1.0 + 0.04 * unit(rng)), 0.84 * (1.0 + 0.04 * unit(rng)),
                           0.74 * (1.0 + 0.04 * unit(rng))};
  Wave waves[kDeformTerms];
  double weight_total = 0.0;
  for (auto& w : waves) {
    w = {2.5 * unit(rng), 2.5 * unit(rng), 2.5 * unit(rng), std::numbers::pi * unit(rng), 0.5 + 0.5 * std::abs(unit(rng))};
    weight_total += w.weight;
  }

  const double v = spec.atrophy_scale;
  const double vent_offset = 0.14 * (1.0 + 0.05 * unit(rng));
  const double vent_radii[3] = {0.10 * v, 0.24 * v, 0.07 * v};
  const double vent_left[3] = {centre[0] + 0.05, centre[1], centre[2] - vent_offset};
  const double vent_right[3] = {centre[0] + 0.05, centre[1], centre[2] + vent_offset};
  const double gm_outer = 1.0 - kCsfRim * v;

  Phantom p{Volume(spec.dims), SegmentationMask(spec.dims)};
  const auto [d, h, w] = spec.dims;
  std::normal_distribution<double> noise(0.0, spec.noise_sigma);
  for (Index z = 0; z < d; ++z)
    for (Index y = 0; y < h; ++y)
      for (Index x = 0; x < w; ++x) {
        const double pz = 2.0 * (static_cast<double>(z) + 0.5) / static_cast<double>(d) - 1.0;
        const double py = 2.0 * (static_cast<double>(y) + 0.5) / static_cast<double>(h) - 1.0;
        const double px = 2.0 * (static_cast<double>(x) + 0.5) / static_cast<double>(w) - 1.0;
        const double ez = (pz - centre[0]) / radii[0];
        const double ey = (py - centre[1]) / radii[1];
        const double ex = (px - centre[2]) / radii[2];
        const double r = std::sqrt(ez * ez + ey * ey + ex * ex);
        double delta = 0.0;
        if (r > 0.0) {
          for (const auto& wv : waves) delta += wv.weight * std::cos(wv.wz * ez / r + wv.wy * ey / r + wv.wx * ex / r + wv.phase);
          delta *= spec.deformation / weight_total;
        }
        const double reff = r / (1.0 + delta);

        Tissue t = Tissue::background;
        if (reff <= 1.0) {
          if (reff > gm_outer) {
            t = Tissue::csf;
          } else if (reff > kWmBoundary) {
            t = Tissue::gm;
          } else {
            t = Tissue::wm;
          }
          if (inside_ellipsoid(pz, py, px, vent_left, vent_radii) || inside_ellipsoid(pz, py, px, vent_right, vent_radii)) {
            t = Tissue::csf;
          }
        }
        float value = 0.0f;
        switch (t) {
          case Tissue::background: value = 0.0f; break;
          case Tissue::csf: value = spec.csf_intensity; break;
          case Tissue::gm: value = spec.gm_intensity; break;
          case Tissue::wm: value = spec.wm_intensity; break;
        }
        if (t != Tissue::background && spec.noise_sigma > 0.0) {
          value = static_cast<float>(std::clamp(static_cast<double>(value) + noise(rng), 0.0, 1.0));
        }
        p.volume.at(z, y, x) = value;
        p.labels.labels[static_cast<std::size_t>((z * h + y) * w + x)] = static_cast<std::uint8_t>(t);
      }
  return p;
}

}  // namespace vqvol
