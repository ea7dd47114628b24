#pragma once

#include "vqvol/layers.hpp"
#include "vqvol/tensor.hpp"

#include <array>

namespace vqvol {

/// Forward differences of a [B, 1, d, h, w] volume along z, y, x, stacked as
/// [B, 3, d, h, w]; the trailing face of each axis is zero. Every axis must
/// have at least two voxels.
template <typename Scalar>
Tensor<Scalar> spatial_gradient(const Tensor<Scalar>& x);

/// mean|r| + mean r^2 + mean|grad r| + mean (grad r)^2 with r = x - x_hat.
/// Axes of length one contribute zero gradient terms.
template <typename Scalar>
Tensor<Scalar> baur_loss(const Tensor<Scalar>& x, const Tensor<Scalar>& x_hat);

/// General robust loss rho(x, alpha, c). Closed-form limits are used at
/// alpha = 2 (half squared error) and alpha = 0 (log form).
double adaptive_rho(double x, double alpha, double scale);

struct AdaptiveRhoGrad {
  double dx = 0.0;
  double dalpha = 0.0;
  double dscale = 0.0;
};
AdaptiveRhoGrad adaptive_rho_grad(double x, double alpha, double scale);

/// Elementwise rho over x. `alpha` and `scale` hold either one value or one
/// value per entry of a block whose size divides x.size(); entry i uses
/// parameter i mod block.
template <typename Scalar>
Tensor<Scalar> adaptive_rho(const Tensor<Scalar>& x, const Tensor<Scalar>& alpha,
                            const Tensor<Scalar>& scale);

struct AdaptiveLossOptions {
  double alpha_lo = 0.0;
  double alpha_hi = 2.0;
  /// Lower bound added to the softplus scale.
  double scale_lo = 1e-5;
  double alpha_init = 1.0;
  double scale_init = 1.0;
  /// One (alpha, c) pair for all coefficients instead of one per coefficient.
  bool shared = false;
  friend bool operator==(const AdaptiveLossOptions&, const AdaptiveLossOptions&) = default;
};

/// Learnable (alpha, c) stored as unconstrained latents:
///   alpha = lo + (hi - lo) * sigmoid(alpha_latent),  c = softplus(scale_latent) + scale_lo.
template <typename Scalar>
class AdaptiveLossParams {
 public:
  AdaptiveLossParams() = default;
  AdaptiveLossParams(std::array<Index, 3> coefficient_dims, AdaptiveLossOptions options = {});

  Tensor<Scalar> alpha() const;
  Tensor<Scalar> scale() const;
  void set_alpha(double alpha);
  void set_scale(double scale);

  Tensor<Scalar>& alpha_latent() { return alpha_latent_; }
  Tensor<Scalar>& scale_latent() { return scale_latent_; }
  const AdaptiveLossOptions& options() const { return options_; }
  const std::array<Index, 3>& dims() const { return dims_; }

  void collect(ParameterList<Scalar>& out, const std::string& prefix);

 private:
  std::array<Index, 3> dims_{1, 1, 1};
  AdaptiveLossOptions options_;
  Tensor<Scalar> alpha_latent_;
  Tensor<Scalar> scale_latent_;
};

/// mean over DCT coefficients of (x - x_hat) of rho(coef, alpha, c) + log c.
template <typename Scalar>
Tensor<Scalar> adaptive_loss(const Tensor<Scalar>& x, const Tensor<Scalar>& x_hat,
                             const AdaptiveLossParams<Scalar>& params);

extern template class AdaptiveLossParams<float>;
extern template class AdaptiveLossParams<double>;

}  // namespace vqvol
