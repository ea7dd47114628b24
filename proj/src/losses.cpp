#include "vqvol/losses.hpp"

#include "vqvol/dct.hpp"
#include "vqvol/ops.hpp"

#include <cmath>
#include <stdexcept>

namespace vqvol {

namespace {

constexpr double kLimitBand = 1e-10;
// Width of the band around alpha in {0, 2} where d rho / d alpha is taken at
// the band edge; the analytic expression cancels badly inside it.
constexpr double kAlphaGradBand = 1e-4;

template <typename Scalar>
void require_volume(const Tensor<Scalar>& x, const char* op) {
  require_activation(x.shape(), op);
  if (x.dim(1) != 1) {
    throw std::invalid_argument(std::string(op) + ": expected single-channel volumes, got " +
                                to_string(x.shape()));
  }
}

template <typename Scalar>
Tensor<Scalar> stacked_differences(const Tensor<Scalar>& r) {
  return concat_channels(concat_channels(forward_difference(r, 0), forward_difference(r, 1)),
                         forward_difference(r, 2));
}

}  // namespace

template <typename Scalar>
Tensor<Scalar> spatial_gradient(const Tensor<Scalar>& x) {
  require_volume(x, "spatial_gradient");
  for (int a = 2; a < 5; ++a) {
    if (x.dim(a) < 2) {
      throw std::invalid_argument("spatial_gradient: degenerate dims " + to_string(x.shape()));
    }
  }
  return stacked_differences(x);
}

template <typename Scalar>
Tensor<Scalar> baur_loss(const Tensor<Scalar>& x, const Tensor<Scalar>& x_hat) {
  detail::check_same_shape(x.shape(), x_hat.shape(), "baur_loss");
  require_volume(x, "baur_loss");
  Tensor<Scalar> r = x - x_hat;
  Tensor<Scalar> g = stacked_differences(r);
  return mean(abs(r)) + mean(square(r)) + mean(abs(g)) + mean(square(g));
}

double adaptive_rho(double x, double alpha, double scale) {
  if (!(scale > 0.0)) throw std::invalid_argument("adaptive_rho: scale must be positive");
  const double z2 = (x / scale) * (x / scale);
  if (std::abs(alpha - 2.0) < kLimitBand) return 0.5 * z2;
  if (std::abs(alpha) < kLimitBand) return std::log1p(0.5 * z2);
  const double b = std::abs(alpha - 2.0);
  return (b / alpha) * std::expm1(0.5 * alpha * std::log1p(z2 / b));
}

AdaptiveRhoGrad adaptive_rho_grad(double x, double alpha, double scale) {
  if (!(scale > 0.0)) throw std::invalid_argument("adaptive_rho: scale must be positive");
  const double z = x / scale;
  const double z2 = z * z;
  AdaptiveRhoGrad g;
  // d rho / dx = (x / c^2) (z^2 / b + 1)^(alpha/2 - 1), continuous through both limits.
  double factor;
  if (std::abs(alpha - 2.0) < kLimitBand) {
    factor = 1.0;
  } else {
    const double b = std::abs(alpha - 2.0);
    factor = std::exp((0.5 * alpha - 1.0) * std::log1p(z2 / b));
  }
  g.dx = x / (scale * scale) * factor;
  g.dscale = -z2 / scale * factor;

  double a = alpha;
  if (std::abs(a - 2.0) < kAlphaGradBand) a = a < 2.0 || a == 2.0 ? 2.0 - kAlphaGradBand : 2.0 + kAlphaGradBand;
  if (std::abs(a) < kAlphaGradBand) a = a < 0.0 ? -kAlphaGradBand : kAlphaGradBand;
  const double b = std::abs(a - 2.0);
  const double s = a > 2.0 ? 1.0 : -1.0;
  const double log_u = std::log1p(z2 / b);
  const double u_p = std::exp(0.5 * a * log_u);
  const double u_pm1 = std::exp((0.5 * a - 1.0) * log_u);
  g.dalpha = (s / a - b / (a * a)) * std::expm1(0.5 * a * log_u) + (b / a) * u_p * 0.5 * log_u -
             u_pm1 * z2 * s / (2.0 * b);
  return g;
}

template <typename Scalar>
Tensor<Scalar> adaptive_rho(const Tensor<Scalar>& x, const Tensor<Scalar>& alpha,
                            const Tensor<Scalar>& scale) {
  const Index n = x.size();
  const Index block = std::max(alpha.size(), scale.size());
  if ((alpha.size() != 1 && alpha.size() != block) || (scale.size() != 1 && scale.size() != block) ||
      block == 0 || n % block != 0) {
    throw std::invalid_argument("adaptive_rho: parameter sizes " + to_string(alpha.shape()) + ", " +
                                to_string(scale.shape()) + " do not tile input " +
                                to_string(x.shape()));
  }
  const Index a_block = alpha.size();
  const Index c_block = scale.size();
  VectorX<Scalar> out(n);
  for (Index i = 0; i < n; ++i) {
    out(i) = static_cast<Scalar>(adaptive_rho(static_cast<double>(x.values()(i)),
                                              static_cast<double>(alpha.values()(i % a_block)),
                                              static_cast<double>(scale.values()(i % c_block))));
  }
  auto xn = x.node();
  auto an = alpha.node();
  auto cn = scale.node();
  return detail::make_result<Scalar>(
      x.shape(), std::move(out), {xn, an, cn},
      [xn, an, cn, n, a_block, c_block](detail::Node<Scalar>& self) {
        VectorX<Scalar> gx(n);
        VectorX<double> ga = VectorX<double>::Zero(a_block);
        VectorX<double> gc = VectorX<double>::Zero(c_block);
        for (Index i = 0; i < n; ++i) {
          const double up = static_cast<double>(self.grad(i));
          const auto g = adaptive_rho_grad(static_cast<double>(xn->value(i)),
                                           static_cast<double>(an->value(i % a_block)),
                                           static_cast<double>(cn->value(i % c_block)));
          gx(i) = static_cast<Scalar>(up * g.dx);
          ga(i % a_block) += up * g.dalpha;
          gc(i % c_block) += up * g.dscale;
        }
        xn->accumulate(gx);
        an->accumulate(ga.cast<Scalar>());
        cn->accumulate(gc.cast<Scalar>());
      },
      "adaptive_rho");
}

template <typename Scalar>
AdaptiveLossParams<Scalar>::AdaptiveLossParams(std::array<Index, 3> dims, AdaptiveLossOptions options)
    : dims_(dims), options_(options) {
  if (!(options.alpha_lo < options.alpha_hi)) {
    throw std::invalid_argument("adaptive loss: alpha bounds must satisfy lo < hi");
  }
  if (!(options.scale_lo >= 0.0)) throw std::invalid_argument("adaptive loss: scale_lo must be >= 0");
  const Shape shape = options.shared ? Shape{1} : Shape{dims[0], dims[1], dims[2]};
  alpha_latent_ = Tensor<Scalar>::zeros(shape, true);
  scale_latent_ = Tensor<Scalar>::zeros(shape, true);
  set_alpha(options.alpha_init);
  set_scale(options.scale_init);
}

template <typename Scalar>
Tensor<Scalar> AdaptiveLossParams<Scalar>::alpha() const {
  const auto lo = static_cast<Scalar>(options_.alpha_lo);
  const auto span = static_cast<Scalar>(options_.alpha_hi - options_.alpha_lo);
  return sigmoid(alpha_latent_) * span + lo;
}

template <typename Scalar>
Tensor<Scalar> AdaptiveLossParams<Scalar>::scale() const {
  return softplus(scale_latent_) + static_cast<Scalar>(options_.scale_lo);
}

template <typename Scalar>
void AdaptiveLossParams<Scalar>::set_alpha(double alpha) {
  const double t = (alpha - options_.alpha_lo) / (options_.alpha_hi - options_.alpha_lo);
  if (!(t > 0.0 && t < 1.0)) {
    throw std::invalid_argument("adaptive loss: alpha must lie strictly inside its bounds");
  }
  alpha_latent_.mutable_values().setConstant(static_cast<Scalar>(std::log(t / (1.0 - t))));
}

template <typename Scalar>
void AdaptiveLossParams<Scalar>::set_scale(double scale) {
  const double target = scale - options_.scale_lo;
  if (!(target > 0.0)) throw std::invalid_argument("adaptive loss: scale must exceed scale_lo");
  // Inverse softplus: log(exp(t) - 1).
  const double latent = target > 30.0 ? target : std::log(std::expm1(target));
  scale_latent_.mutable_values().setConstant(static_cast<Scalar>(latent));
}

template <typename Scalar>
void AdaptiveLossParams<Scalar>::collect(ParameterList<Scalar>& out, const std::string& prefix) {
  out.emplace_back(prefix + ".alpha_latent", &alpha_latent_);
  out.emplace_back(prefix + ".scale_latent", &scale_latent_);
}

template <typename Scalar>
Tensor<Scalar> adaptive_loss(const Tensor<Scalar>& x, const Tensor<Scalar>& x_hat,
                             const AdaptiveLossParams<Scalar>& params) {
  detail::check_same_shape(x.shape(), x_hat.shape(), "adaptive_loss");
  require_volume(x, "adaptive_loss");
  const auto& dims = params.dims();
  if (!params.options().shared && (x.dim(2) != dims[0] || x.dim(3) != dims[1] || x.dim(4) != dims[2])) {
    throw std::invalid_argument("adaptive_loss: volume " + to_string(x.shape()) +
                                " does not match parameter dims");
  }
  Tensor<Scalar> coefficients = dct3(x - x_hat);
  Tensor<Scalar> c = params.scale();
  return mean(adaptive_rho(coefficients, params.alpha(), c)) + mean(log(c));
}

template class AdaptiveLossParams<float>;
template class AdaptiveLossParams<double>;

#define VQVOL_INSTANTIATE_LOSSES(S)                                                        \
  template Tensor<S> spatial_gradient(const Tensor<S>&);                                   \
  template Tensor<S> baur_loss(const Tensor<S>&, const Tensor<S>&);                        \
  template Tensor<S> adaptive_rho(const Tensor<S>&, const Tensor<S>&, const Tensor<S>&);   \
  template Tensor<S> adaptive_loss(const Tensor<S>&, const Tensor<S>&, const AdaptiveLossParams<S>&);

VQVOL_INSTANTIATE_LOSSES(float)
VQVOL_INSTANTIATE_LOSSES(double)

}  // namespace vqvol
