#pragma once

#include "vqvol/bytes.hpp"
#include "vqvol/tensor.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace vqvol {

using Dims3 = std::array<Index, 3>;

/// Dense scalar field, z-major row-major, with voxel spacing in mm.
struct Volume {
  Dims3 dims{0, 0, 0};
  std::vector<float> data;
  std::array<float, 3> spacing{1.0f, 1.0f, 1.0f};

  Volume() = default;
  explicit Volume(Dims3 d, float fill = 0.0f);
  Index voxels() const { return dims[0] * dims[1] * dims[2]; }
  float& at(Index z, Index y, Index x) { return data[static_cast<std::size_t>((z * dims[1] + y) * dims[2] + x)]; }
  float at(Index z, Index y, Index x) const {
    return data[static_cast<std::size_t>((z * dims[1] + y) * dims[2] + x)];
  }
  friend bool operator==(const Volume&, const Volume&) = default;
};

enum class Tissue : std::uint8_t { background = 0, csf = 1, gm = 2, wm = 3 };

/// One tissue label per voxel.
struct SegmentationMask {
  Dims3 dims{0, 0, 0};
  std::vector<std::uint8_t> labels;
  std::array<float, 3> spacing{1.0f, 1.0f, 1.0f};

  SegmentationMask() = default;
  explicit SegmentationMask(Dims3 d, Tissue fill = Tissue::background);
  Index voxels() const { return dims[0] * dims[1] * dims[2]; }
  Index count(Tissue t) const;
  friend bool operator==(const SegmentationMask&, const SegmentationMask&) = default;
};

std::vector<std::uint8_t> encode_vol(const Volume& v);
std::vector<std::uint8_t> encode_mask(const SegmentationMask& m);
Volume decode_vol(const std::vector<std::uint8_t>& bytes);
SegmentationMask decode_mask(const std::vector<std::uint8_t>& bytes);

void write_vol(const std::filesystem::path& path, const Volume& v);
Volume read_vol(const std::filesystem::path& path);
void write_mask(const std::filesystem::path& path, const SegmentationMask& m);
SegmentationMask read_mask(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);

/// Linear map of [P_lo, P_hi] onto [0, 1] with clamping. Percentiles use
/// linear interpolation between order statistics.
Volume robust_minmax(const Volume& v, double lo_pct = 1.0, double hi_pct = 99.0);
double percentile(std::vector<float> values, double pct);

struct Split {
  std::vector<Index> train;
  std::vector<Index> test;
};
/// Shuffled, disjoint and exhaustive split of `count` items. The test part holds
/// round(count * test_fraction) items, at least one.
Split split_dataset(Index count, double test_fraction, std::uint64_t seed);

/// Stacks volumes into a [B, 1, d, h, w] tensor.
template <typename Scalar>
Tensor<Scalar> to_batch(const std::vector<const Volume*>& volumes);
template <typename Scalar>
Tensor<Scalar> to_batch(const std::vector<Volume>& volumes);
/// Splits a [B, 1, d, h, w] tensor back into volumes.
template <typename Scalar>
std::vector<Volume> from_batch(const Tensor<Scalar>& batch);

}  // namespace vqvol
