#pragma once

#include "vqvol/tensor.hpp"

#include <array>
#include <vector>

namespace vqvol {

enum class BinaryOp { add, sub, mul, div };
enum class UnaryOp { neg, abs, relu, exp, log, sigmoid, softplus, square, sqrt, clamp01 };
enum class ReduceOp { sum, mean };

// Elementwise arithmetic. Shapes must be equal, except that a single-element
// operand broadcasts against the other (the only broadcasting supported).
template <typename Scalar>
Tensor<Scalar> elementwise(BinaryOp op, const Tensor<Scalar>& a, const Tensor<Scalar>& b);
template <typename Scalar>
Tensor<Scalar> elementwise(BinaryOp op, const Tensor<Scalar>& a, Scalar b);
template <typename Scalar>
Tensor<Scalar> unary(UnaryOp op, const Tensor<Scalar>& a);

template <typename Scalar>
Tensor<Scalar> pow(const Tensor<Scalar>& a, Scalar exponent);
template <typename Scalar>
Tensor<Scalar> leaky_relu(const Tensor<Scalar>& a, Scalar slope = Scalar(0.01));

template <typename S> Tensor<S> add(const Tensor<S>& a, const Tensor<S>& b) { return elementwise(BinaryOp::add, a, b); }
template <typename S> Tensor<S> sub(const Tensor<S>& a, const Tensor<S>& b) { return elementwise(BinaryOp::sub, a, b); }
template <typename S> Tensor<S> mul(const Tensor<S>& a, const Tensor<S>& b) { return elementwise(BinaryOp::mul, a, b); }
template <typename S> Tensor<S> div(const Tensor<S>& a, const Tensor<S>& b) { return elementwise(BinaryOp::div, a, b); }
template <typename S> Tensor<S> abs(const Tensor<S>& a) { return unary(UnaryOp::abs, a); }
template <typename S> Tensor<S> relu(const Tensor<S>& a) { return unary(UnaryOp::relu, a); }
template <typename S> Tensor<S> exp(const Tensor<S>& a) { return unary(UnaryOp::exp, a); }
template <typename S> Tensor<S> log(const Tensor<S>& a) { return unary(UnaryOp::log, a); }
template <typename S> Tensor<S> sigmoid(const Tensor<S>& a) { return unary(UnaryOp::sigmoid, a); }
template <typename S> Tensor<S> softplus(const Tensor<S>& a) { return unary(UnaryOp::softplus, a); }
template <typename S> Tensor<S> square(const Tensor<S>& a) { return unary(UnaryOp::square, a); }
template <typename S> Tensor<S> sqrt(const Tensor<S>& a) { return unary(UnaryOp::sqrt, a); }
/// Clamps to [0, 1]; the gradient passes only strictly inside.
template <typename S> Tensor<S> clamp01(const Tensor<S>& a) { return unary(UnaryOp::clamp01, a); }

template <typename S> Tensor<S> operator+(const Tensor<S>& a, const Tensor<S>& b) { return elementwise(BinaryOp::add, a, b); }
template <typename S> Tensor<S> operator-(const Tensor<S>& a, const Tensor<S>& b) { return elementwise(BinaryOp::sub, a, b); }
template <typename S> Tensor<S> operator*(const Tensor<S>& a, const Tensor<S>& b) { return elementwise(BinaryOp::mul, a, b); }
template <typename S> Tensor<S> operator/(const Tensor<S>& a, const Tensor<S>& b) { return elementwise(BinaryOp::div, a, b); }
template <typename S> Tensor<S> operator+(const Tensor<S>& a, S b) { return elementwise(BinaryOp::add, a, b); }
template <typename S> Tensor<S> operator-(const Tensor<S>& a, S b) { return elementwise(BinaryOp::sub, a, b); }
template <typename S> Tensor<S> operator*(const Tensor<S>& a, S b) { return elementwise(BinaryOp::mul, a, b); }
template <typename S> Tensor<S> operator/(const Tensor<S>& a, S b) { return elementwise(BinaryOp::div, a, b); }
template <typename S> Tensor<S> operator*(S a, const Tensor<S>& b) { return elementwise(BinaryOp::mul, b, a); }
template <typename S> Tensor<S> operator-(const Tensor<S>& a) { return unary(UnaryOp::neg, a); }

/// Sum or mean over the given axes (all axes when empty); reduced axes are removed.
template <typename Scalar>
Tensor<Scalar> reduce(ReduceOp op, const Tensor<Scalar>& a, const std::vector<Index>& axes = {});
template <typename S> Tensor<S> sum(const Tensor<S>& a) { return reduce(ReduceOp::sum, a); }
template <typename S> Tensor<S> mean(const Tensor<S>& a) { return reduce(ReduceOp::mean, a); }

template <typename Scalar>
Tensor<Scalar> reshape(const Tensor<Scalar>& a, Shape shape);

/// Forward copies the values; backward contributes nothing.
template <typename Scalar>
Tensor<Scalar> stop_gradient(const Tensor<Scalar>& a);

/// Forward value is `replacement`, gradient flows unchanged to `source`.
/// `replacement` receives no gradient along this edge.
template <typename Scalar>
Tensor<Scalar> straight_through(const Tensor<Scalar>& source, const Tensor<Scalar>& replacement);

// The ops below expect activations laid out as [batch, channels, depth, height, width].

template <typename Scalar>
Tensor<Scalar> concat_channels(const Tensor<Scalar>& a, const Tensor<Scalar>& b);

template <typename Scalar>
Tensor<Scalar> upsample_nearest(const Tensor<Scalar>& a, std::array<Index, 3> factors);

/// Replicates border voxels; `before`/`after` are per spatial axis.
template <typename Scalar>
Tensor<Scalar> pad_edge(const Tensor<Scalar>& a, std::array<Index, 3> before,
                        std::array<Index, 3> after);

/// out[i] = a[i+1] - a[i] along spatial axis 0..2, zero on the trailing face.
/// Any extent >= 1 is accepted; an axis of length 1 yields zeros.
template <typename Scalar>
Tensor<Scalar> forward_difference(const Tensor<Scalar>& a, int spatial_axis);

/// [B, C*r^3, d, h, w] -> [B, C, d*r, h*r, w*r]. Channel c*r^3 + (pz*r^2 + py*r + px)
/// lands at spatial offset (pz, py, px) of each r^3 block.
template <typename Scalar>
Tensor<Scalar> voxel_shuffle(const Tensor<Scalar>& a, Index r);
template <typename Scalar>
Tensor<Scalar> voxel_unshuffle(const Tensor<Scalar>& a, Index r);

template <typename Scalar>
Tensor<Scalar> avg_pool3d(const Tensor<Scalar>& a, Index kernel, Index stride);

/// Spatial dims of an activation tensor.
std::array<Index, 3> spatial_dims(const Shape& shape);
void require_activation(const Shape& shape, const char* op);

}  // namespace vqvol
