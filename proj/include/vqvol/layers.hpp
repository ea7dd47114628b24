#pragma once

#include "vqvol/conv.hpp"
#include "vqvol/tensor.hpp"

#include <random>
#include <string>
#include <utility>
#include <vector>

namespace vqvol {

inline constexpr double kLeakySlope = 0.01;

/// Named references to trainable tensors, in a stable order.
template <typename Scalar>
using ParameterList = std::vector<std::pair<std::string, Tensor<Scalar>*>>;

enum class LayerKind { fixup_residual, strided_down, icnr_up, subpixel_up };

struct LayerSpec {
  LayerKind kind = LayerKind::fixup_residual;
  Index in_channels = 1;
  Index out_channels = 1;
  Index kernel = 3;
  Index stride = 1;
  /// Upsampling factor r.
  Index factor = 1;

  void validate() const;
};

/// He-normal weight [out, in, k, k, k] scaled by `gain`.
template <typename Scalar>
Tensor<Scalar> he_normal(Shape shape, Index fan_in, double gain, std::mt19937_64& rng);

/// Plain convolution with bias.
template <typename Scalar>
struct ConvLayer {
  Tensor<Scalar> weight;
  Tensor<Scalar> bias;
  ConvGeometry geometry;

  ConvLayer() = default;
  ConvLayer(Index in, Index out, Index kernel, ConvGeometry geometry, std::mt19937_64& rng,
            double gain = 1.0);
  Tensor<Scalar> forward(const Tensor<Scalar>& x) const;
  void collect(ParameterList<Scalar>& out, const std::string& prefix);
};

/// Residual block without normalization: two kernel-3 convolutions wrapped by
/// scalar biases and a scalar multiplier that starts at zero, so the block is
/// the identity map at initialization.
///
///   out = x + scale * conv2(lrelu(conv1(x + b1a) + b1b) + b2a) + b2b
///
/// Branch weights are He-initialized and shrunk by L^(-1/(2m-2)), with L the
/// number of residual blocks in the network and m = 2 layers per branch.
template <typename Scalar>
class FixupBlock {
 public:
  FixupBlock() = default;
  FixupBlock(Index channels, Index total_blocks, std::mt19937_64& rng);

  Tensor<Scalar> forward(const Tensor<Scalar>& x) const;
  void collect(ParameterList<Scalar>& out, const std::string& prefix);

  Index channels() const { return conv1_.dim(0); }
  Tensor<Scalar>& conv1() { return conv1_; }
  Tensor<Scalar>& conv2() { return conv2_; }
  Tensor<Scalar>& scale() { return scale_; }

 private:
  Tensor<Scalar> conv1_, conv2_;
  Tensor<Scalar> bias1a_, bias1b_, bias2a_, bias2b_, scale_;
};

/// Kernel-3, stride-2 convolution halving each spatial dim, then leaky ReLU.
/// Odd spatial extents are rejected.
template <typename Scalar>
class StridedDown {
 public:
  StridedDown() = default;
  StridedDown(Index in, Index out, std::mt19937_64& rng);
  Tensor<Scalar> forward(const Tensor<Scalar>& x) const;
  void collect(ParameterList<Scalar>& out, const std::string& prefix);
  ConvLayer<Scalar>& conv() { return conv_; }

 private:
  ConvLayer<Scalar> conv_;
};

/// Kernel-4 stride-2 transpose convolution with ICNR weights, followed by an
/// edge-padded kernel-2 stride-1 average pool and leaky ReLU. Doubles each dim.
template <typename Scalar>
class IcnrUp {
 public:
  IcnrUp() = default;
  IcnrUp(Index in, Index out, std::mt19937_64& rng);
  /// Transpose-convolution output before smoothing.
  Tensor<Scalar> upsample(const Tensor<Scalar>& x) const;
  Tensor<Scalar> forward(const Tensor<Scalar>& x) const;
  void collect(ParameterList<Scalar>& out, const std::string& prefix);
  Tensor<Scalar>& weight() { return weight_; }
  Tensor<Scalar>& bias() { return bias_; }

 private:
  Tensor<Scalar> weight_;
  Tensor<Scalar> bias_;
};

/// Kernel-3 convolution to out*r^3 channels (ICNR-initialized) and voxel shuffle.
template <typename Scalar>
class SubpixelUp {
 public:
  SubpixelUp() = default;
  SubpixelUp(Index in, Index out, Index factor, std::mt19937_64& rng);
  Tensor<Scalar> forward(const Tensor<Scalar>& x) const;
  void collect(ParameterList<Scalar>& out, const std::string& prefix);
  ConvLayer<Scalar>& conv() { return conv_; }
  Index factor() const { return factor_; }

 private:
  ConvLayer<Scalar> conv_;
  Index factor_ = 2;
};

/// Expands a base kernel [C, Cin, k, k, k] to [C*r^3, Cin, k, k, k] so that all
/// r^3 channels feeding one output voxel block are identical.
template <typename Scalar>
Tensor<Scalar> icnr_subpixel(const Tensor<Scalar>& base, Index r);

/// Transpose-convolution weight [Cin, Cout, 2r, 2r, 2r] (padding r/2) whose r^3
/// output phases are identical: taps [r/2, r/2 + r) per axis carry base[Cin, Cout],
/// the rest are zero, making the layer a nearest-neighbour upsample of a 1x1x1 conv.
template <typename Scalar>
Tensor<Scalar> icnr_transpose(const Tensor<Scalar>& base, Index r);

/// Largest variance across the r^3 phases of any output block, per channel.
template <typename Scalar>
double max_phase_variance(const Tensor<Scalar>& upsampled, Index r);

extern template class FixupBlock<float>;
extern template class FixupBlock<double>;
extern template class StridedDown<float>;
extern template class StridedDown<double>;
extern template class IcnrUp<float>;
extern template class IcnrUp<double>;
extern template class SubpixelUp<float>;
extern template class SubpixelUp<double>;
extern template struct ConvLayer<float>;
extern template struct ConvLayer<double>;

}  // namespace vqvol
