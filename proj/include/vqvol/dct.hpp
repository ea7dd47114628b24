#pragma once

#include "vqvol/tensor.hpp"

#include <Eigen/Core>

namespace vqvol {

/// Orthonormal DCT-II matrix: row k holds s_k cos(pi (n + 1/2) k / N),
/// s_0 = sqrt(1/N), s_k = sqrt(2/N). Its transpose is the inverse (DCT-III).
Eigen::MatrixXd dct_matrix(Index n);

/// Separable 3D DCT over the three trailing axes of a [..., d, h, w] tensor.
/// The backward rule applies the inverse transform.
template <typename Scalar>
Tensor<Scalar> dct3(const Tensor<Scalar>& x, bool inverse = false);

/// In-place separable transform of one z-major [d, h, w] block.
template <typename Scalar>
void dct3_inplace(Scalar* data, Index d, Index h, Index w, bool inverse);

}  // namespace vqvol
