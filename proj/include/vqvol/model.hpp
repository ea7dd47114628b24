#pragma once

#include "vqvol/config.hpp"
#include "vqvol/layers.hpp"
#include "vqvol/losses.hpp"
#include "vqvol/quantizer.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace vqvol {

template <typename Scalar>
struct LatentLevel {
  /// One grid per batch item.
  std::vector<CodeGrid> grids;
  /// Forward value of the assigned codes, [B, D, d, h, w].
  Tensor<Scalar> quantized;
  /// Pre-quantization encoder output (empty when decoding from grids).
  Tensor<Scalar> features;
  Tensor<Scalar> codes_used;
  double mean_squared_distance = 0.0;
};

/// Coarsest level first.
template <typename Scalar>
struct LatentStack {
  std::vector<LatentLevel<Scalar>> levels;
  Index batch() const { return levels.empty() ? 0 : static_cast<Index>(levels.front().grids.size()); }
  /// grids()[level][item]
  std::vector<std::vector<CodeGrid>> grids() const;
};

template <typename Scalar>
struct LossParts {
  Tensor<Scalar> total;
  Tensor<Scalar> reconstruction_loss;
  /// Per level, coarsest first.
  std::vector<Tensor<Scalar>> codebook_losses;
  Tensor<Scalar> reconstruction;
  LatentStack<Scalar> latents;
};

/// Hierarchical VQ-VAE. The encoder is a pyramid of stride-2 stages with
/// channel doubling and FixUp blocks at every resolution. The coarsest level
/// is quantized from the deepest features; each finer level concatenates the
/// nearest-upsampled coarser codes with the encoder features at its
/// resolution before a 1x1x1 projection to D and quantization. The decoder
/// mirrors the pyramid with ICNR transpose-conv upsampling, merges each finer
/// level's codes on the way up, and ends in a subpixel layer followed by
/// clamp((1 + 2m) * sigmoid(z) - m, 0, 1) with m = kOutputMargin.
inline constexpr double kOutputMargin = 0.1;

template <typename Scalar>
class Model {
 public:
  using Frozen = std::vector<FrozenQuantization<Scalar>>;

  Model() = default;
  Model(ModelConfig config, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }

  /// x: [B, 1, d, h, w] matching config.input_dims. `frozen` fixes the
  /// assignment of every level (gradient checks).
  LatentStack<Scalar> encode(const Tensor<Scalar>& x, const Frozen* frozen = nullptr) const;
  Tensor<Scalar> decode(const LatentStack<Scalar>& latents) const;
  /// Rebuilds quantized tensors from code grids (grids[level][item]).
  LatentStack<Scalar> latents_from_grids(const std::vector<std::vector<CodeGrid>>& grids) const;
  Tensor<Scalar> reconstruct(const Tensor<Scalar>& x) const;

  LossParts<Scalar> forward_loss(const Tensor<Scalar>& x, const Frozen* frozen = nullptr) const;
  /// EMA codebook step from a forward pass; no-op for non-EMA codebooks.
  void update_codebooks(const LatentStack<Scalar>& latents);

  /// Trainable tensors in a stable order, including codebook codes in non-EMA
  /// mode and the adaptive-loss latents in adaptive mode.
  ParameterList<Scalar> parameters();

  std::vector<Codebook<Scalar>>& codebooks() { return codebooks_; }
  const std::vector<Codebook<Scalar>>& codebooks() const { return codebooks_; }
  AdaptiveLossParams<Scalar>& adaptive() { return adaptive_; }
  const AdaptiveLossParams<Scalar>& adaptive() const { return adaptive_; }

  /// Channel count at pyramid depth s (resolution input / 2^s).
  Index width(int s) const;

 private:
  void check_input(const Tensor<Scalar>& x) const;
  int level_depth(std::size_t l) const;

  ModelConfig config_;
  ConvLayer<Scalar> stem_;
  /// enc_blocks_[s]: residual blocks at depth s.
  std::vector<std::vector<FixupBlock<Scalar>>> enc_blocks_;
  /// enc_down_[s]: depth s -> s + 1.
  std::vector<StridedDown<Scalar>> enc_down_;
  std::vector<ConvLayer<Scalar>> pre_vq_;
  std::vector<Codebook<Scalar>> codebooks_;
  ConvLayer<Scalar> dec_in_;
  /// dec_merge_[l] for l >= 1: (features + level codes) -> features.
  std::vector<ConvLayer<Scalar>> dec_merge_;
  std::vector<std::vector<FixupBlock<Scalar>>> dec_blocks_;
  /// dec_up_[s]: depth s -> s - 1 for s >= 2.
  std::vector<IcnrUp<Scalar>> dec_up_;
  SubpixelUp<Scalar> output_;
  AdaptiveLossParams<Scalar> adaptive_;
};

/// Shapes of every intermediate activation for one input item, computed
/// without allocating the model.
struct ShapeTraceEntry {
  std::string name;
  Shape shape;
};
std::vector<ShapeTraceEntry> trace_shapes(const ModelConfig& config);

struct CompressionReport {
  /// Sum over levels of d*h*w*D.
  Index latent_variables = 0;
  Index input_voxels = 0;
  /// latent_variables / input_voxels.
  double variable_ratio = 0.0;
  /// (latent_variables * 8 bits) / (input_voxels * 32 bits).
  double bitwise_ratio = 0.0;
  /// Code indices, one byte per latent voxel.
  Index payload_bytes = 0;
  Index header_bytes = 0;
  /// Exact size of the VQC1 stream.
  Index bytes = 0;
  Index input_bytes = 0;
};
CompressionReport compression_report(const ModelConfig& config);

extern template class Model<float>;
extern template class Model<double>;

}  // namespace vqvol
