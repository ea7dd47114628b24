#pragma once

#include "vqvol/tensor.hpp"

namespace vqvol {

struct ConvGeometry {
  Index stride = 1;
  Index padding = 0;
};

/// Output extent of a strided cross-correlation, or <= 0 when the window does not fit.
Index conv_output_extent(Index input, Index kernel, ConvGeometry g);
/// Output extent of the matching transposed convolution: (n-1)*s - 2p + k.
Index conv_transpose_output_extent(Index input, Index kernel, ConvGeometry g);

/// 3D cross-correlation (no kernel flip).
/// input [B, Cin, D, H, W], weight [Cout, Cin, k, k, k], bias [Cout] or undefined.
template <typename Scalar>
Tensor<Scalar> conv3d(const Tensor<Scalar>& input, const Tensor<Scalar>& weight,
                      const Tensor<Scalar>& bias, ConvGeometry geometry = {});

/// Adjoint of conv3d with the same geometry.
/// input [B, Cin, D, H, W], weight [Cin, Cout, k, k, k], bias [Cout] or undefined.
template <typename Scalar>
Tensor<Scalar> conv_transpose3d(const Tensor<Scalar>& input, const Tensor<Scalar>& weight,
                                const Tensor<Scalar>& bias, ConvGeometry geometry = {});

}  // namespace vqvol
