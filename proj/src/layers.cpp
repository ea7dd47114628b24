#include "vqvol/layers.hpp"

#include "vqvol/ops.hpp"

#include <cmath>
#include <stdexcept>

namespace vqvol {

void LayerSpec::validate() const {
  if (factor < 1) throw std::invalid_argument("layer: upsample factor must be >= 1");
  if (in_channels < 1 || out_channels < 1) throw std::invalid_argument("layer: channels must be positive");
  switch (kind) {
    case LayerKind::fixup_residual:
      if (in_channels != out_channels) throw std::invalid_argument("fixup block: in/out channels differ");
      if (kernel % 2 == 0) throw std::invalid_argument("fixup block: kernel must be odd");
      break;
    case LayerKind::strided_down:
      if (kernel % 2 == 0 || stride != 2) throw std::invalid_argument("strided block: odd kernel, stride 2");
      break;
    case LayerKind::icnr_up:
      if (kernel != 2 * factor || stride != factor) {
        throw std::invalid_argument("icnr upsample: kernel must be 2r with stride r");
      }
      break;
    case LayerKind::subpixel_up:
      if (kernel % 2 == 0) throw std::invalid_argument("subpixel upsample: kernel must be odd");
      break;
  }
}

template <typename Scalar>
Tensor<Scalar> he_normal(Shape shape, Index fan_in, double gain, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, gain * std::sqrt(2.0 / static_cast<double>(fan_in)));
  VectorX<Scalar> v(element_count(shape));
  for (Index i = 0; i < v.size(); ++i) v(i) = static_cast<Scalar>(normal(rng));
  return Tensor<Scalar>(std::move(shape), std::move(v), true);
}

template <typename Scalar>
ConvLayer<Scalar>::ConvLayer(Index in, Index out, Index kernel, ConvGeometry g, std::mt19937_64& rng,
                             double gain)
    : weight(he_normal<Scalar>(Shape{out, in, kernel, kernel, kernel}, in * kernel * kernel * kernel,
                               gain, rng)),
      bias(Tensor<Scalar>::zeros(Shape{out}, true)),
      geometry(g) {}

template <typename Scalar>
Tensor<Scalar> ConvLayer<Scalar>::forward(const Tensor<Scalar>& x) const {
  return conv3d(x, weight, bias, geometry);
}

template <typename Scalar>
void ConvLayer<Scalar>::collect(ParameterList<Scalar>& out, const std::string& prefix) {
  out.emplace_back(prefix + ".weight", &weight);
  out.emplace_back(prefix + ".bias", &bias);
}

template <typename Scalar>
FixupBlock<Scalar>::FixupBlock(Index channels, Index total_blocks, std::mt19937_64& rng) {
  LayerSpec{LayerKind::fixup_residual, channels, channels, 3, 1, 1}.validate();
  constexpr int m = 2;
  const double shrink = std::pow(static_cast<double>(std::max<Index>(total_blocks, 1)),
                                 -1.0 / (2.0 * m - 2.0));
  const Index fan_in = channels * 27;
  conv1_ = he_normal<Scalar>(Shape{channels, channels, 3, 3, 3}, fan_in, shrink, rng);
  conv2_ = he_normal<Scalar>(Shape{channels, channels, 3, 3, 3}, fan_in, shrink, rng);
  bias1a_ = Tensor<Scalar>::scalar(0, true);
  bias1b_ = Tensor<Scalar>::scalar(0, true);
  bias2a_ = Tensor<Scalar>::scalar(0, true);
  bias2b_ = Tensor<Scalar>::scalar(0, true);
  scale_ = Tensor<Scalar>::scalar(0, true);
}

template <typename Scalar>
Tensor<Scalar> FixupBlock<Scalar>::forward(const Tensor<Scalar>& x) const {
  require_activation(x.shape(), "fixup_block");
  if (x.dim(1) != channels()) {
    throw std::invalid_argument("fixup_block: input has " + std::to_string(x.dim(1)) +
                                " channels, block expects " + std::to_string(channels()));
  }
  const ConvGeometry same{1, 1};
  Tensor<Scalar> h = conv3d(x + bias1a_, conv1_, Tensor<Scalar>{}, same);
  h = leaky_relu(h + bias1b_, static_cast<Scalar>(kLeakySlope));
  h = conv3d(h + bias2a_, conv2_, Tensor<Scalar>{}, same);
  return x + (h * scale_ + bias2b_);
}

template <typename Scalar>
void FixupBlock<Scalar>::collect(ParameterList<Scalar>& out, const std::string& prefix) {
  out.emplace_back(prefix + ".conv1", &conv1_);
  out.emplace_back(prefix + ".conv2", &conv2_);
  out.emplace_back(prefix + ".bias1a", &bias1a_);
  out.emplace_back(prefix + ".bias1b", &bias1b_);
  out.emplace_back(prefix + ".bias2a", &bias2a_);
  out.emplace_back(prefix + ".bias2b", &bias2b_);
  out.emplace_back(prefix + ".scale", &scale_);
}

template <typename Scalar>
StridedDown<Scalar>::StridedDown(Index in, Index out, std::mt19937_64& rng)
    : conv_(in, out, 3, ConvGeometry{2, 1}, rng) {}

template <typename Scalar>
Tensor<Scalar> StridedDown<Scalar>::forward(const Tensor<Scalar>& x) const {
  require_activation(x.shape(), "strided_down");
  for (int a = 2; a < 5; ++a) {
    if (x.dim(a) % 2 != 0) {
      throw std::invalid_argument("strided_down: odd spatial dims " + to_string(x.shape()));
    }
  }
  return leaky_relu(conv_.forward(x), static_cast<Scalar>(kLeakySlope));
}

template <typename Scalar>
void StridedDown<Scalar>::collect(ParameterList<Scalar>& out, const std::string& prefix) {
  conv_.collect(out, prefix + ".conv");
}

template <typename Scalar>
IcnrUp<Scalar>::IcnrUp(Index in, Index out, std::mt19937_64& rng) {
  Tensor<Scalar> base = he_normal<Scalar>(Shape{in, out}, in, 1.0, rng);
  weight_ = icnr_transpose(base, 2);
  bias_ = Tensor<Scalar>::zeros(Shape{out}, true);
}

template <typename Scalar>
Tensor<Scalar> IcnrUp<Scalar>::upsample(const Tensor<Scalar>& x) const {
  return conv_transpose3d(x, weight_, bias_, ConvGeometry{2, 1});
}

template <typename Scalar>
Tensor<Scalar> IcnrUp<Scalar>::forward(const Tensor<Scalar>& x) const {
  Tensor<Scalar> up = upsample(x);
  Tensor<Scalar> smooth = avg_pool3d(pad_edge(up, {0, 0, 0}, {1, 1, 1}), 2, 1);
  return leaky_relu(smooth, static_cast<Scalar>(kLeakySlope));
}

template <typename Scalar>
void IcnrUp<Scalar>::collect(ParameterList<Scalar>& out, const std::string& prefix) {
  out.emplace_back(prefix + ".weight", &weight_);
  out.emplace_back(prefix + ".bias", &bias_);
}

template <typename Scalar>
SubpixelUp<Scalar>::SubpixelUp(Index in, Index out, Index factor, std::mt19937_64& rng)
    : factor_(factor) {
  LayerSpec{LayerKind::subpixel_up, in, out, 3, 1, factor}.validate();
  Tensor<Scalar> base = he_normal<Scalar>(Shape{out, in, 3, 3, 3}, in * 27, 1.0, rng);
  conv_.weight = icnr_subpixel(base, factor);
  conv_.bias = Tensor<Scalar>::zeros(Shape{out * factor * factor * factor}, true);
  conv_.geometry = ConvGeometry{1, 1};
}

template <typename Scalar>
Tensor<Scalar> SubpixelUp<Scalar>::forward(const Tensor<Scalar>& x) const {
  return voxel_shuffle(conv_.forward(x), factor_);
}

template <typename Scalar>
void SubpixelUp<Scalar>::collect(ParameterList<Scalar>& out, const std::string& prefix) {
  conv_.collect(out, prefix + ".conv");
}

template <typename Scalar>
Tensor<Scalar> icnr_subpixel(const Tensor<Scalar>& base, Index r) {
  const Shape& s = base.shape();
  if (s.size() != 5) throw std::invalid_argument("icnr_subpixel: base must be [C, Cin, k, k, k]");
  if (r < 1) throw std::invalid_argument("icnr_subpixel: factor must be >= 1");
  const Index r3 = r * r * r;
  const Index per_channel = element_count(s) / s[0];
  VectorX<Scalar> out(element_count(s) * r3);
  for (Index c = 0; c < s[0]; ++c)
    for (Index p = 0; p < r3; ++p)
      out.segment((c * r3 + p) * per_channel, per_channel) =
          base.values().segment(c * per_channel, per_channel);
  Shape os = s;
  os[0] *= r3;
  return Tensor<Scalar>(std::move(os), std::move(out), true);
}

template <typename Scalar>
Tensor<Scalar> icnr_transpose(const Tensor<Scalar>& base, Index r) {
  const Shape& s = base.shape();
  if (s.size() != 2) throw std::invalid_argument("icnr_transpose: base must be [Cin, Cout]");
  if (r < 2 || r % 2 != 0) {
    throw std::invalid_argument("icnr_transpose: stride must be even so that padding r/2 is integral");
  }
  const Index k = 2 * r;
  const Index lo = r / 2;
  const Index hi = lo + r;
  const Index k3 = k * k * k;
  VectorX<Scalar> w = VectorX<Scalar>::Zero(s[0] * s[1] * k3);
  for (Index ci = 0; ci < s[0]; ++ci)
    for (Index co = 0; co < s[1]; ++co) {
      const Scalar v = base.values()(ci * s[1] + co);
      Scalar* tap = w.data() + (ci * s[1] + co) * k3;
      for (Index z = lo; z < hi; ++z)
        for (Index y = lo; y < hi; ++y)
          for (Index x = lo; x < hi; ++x) tap[(z * k + y) * k + x] = v;
    }
  return Tensor<Scalar>(Shape{s[0], s[1], k, k, k}, std::move(w), true);
}

template <typename Scalar>
double max_phase_variance(const Tensor<Scalar>& up, Index r) {
  require_activation(up.shape(), "max_phase_variance");
  const Shape& s = up.shape();
  const Index bc = s[0] * s[1];
  const Index d = s[2] / r, h = s[3] / r, w = s[4] / r;
  const auto& v = up.values();
  double worst = 0.0;
  for (Index c = 0; c < bc; ++c)
    for (Index z = 0; z < d; ++z)
      for (Index y = 0; y < h; ++y)
        for (Index x = 0; x < w; ++x) {
          // Shifted by the first phase, so identical phases give exactly zero.
          const Index n = r * r * r;
          auto at = [&](Index pz, Index py, Index px) {
            return static_cast<double>(v(((c * s[2] + z * r + pz) * s[3] + y * r + py) * s[4] + x * r + px));
          };
          const double ref = at(0, 0, 0);
          double sum = 0.0, sq = 0.0;
          for (Index pz = 0; pz < r; ++pz)
            for (Index py = 0; py < r; ++py)
              for (Index px = 0; px < r; ++px) {
                const double dv = at(pz, py, px) - ref;
                sum += dv;
                sq += dv * dv;
              }
          const double mean = sum / static_cast<double>(n);
          worst = std::max(worst, sq / static_cast<double>(n) - mean * mean);
        }
  return worst;
}

template class FixupBlock<float>;
template class FixupBlock<double>;
template class StridedDown<float>;
template class StridedDown<double>;
template class IcnrUp<float>;
template class IcnrUp<double>;
template class SubpixelUp<float>;
template class SubpixelUp<double>;
template struct ConvLayer<float>;
template struct ConvLayer<double>;

#define VQVOL_INSTANTIATE_LAYERS(S)                                              \
  template Tensor<S> he_normal(Shape, Index, double, std::mt19937_64&);          \
  template Tensor<S> icnr_subpixel(const Tensor<S>&, Index);                     \
  template Tensor<S> icnr_transpose(const Tensor<S>&, Index);                    \
  template double max_phase_variance(const Tensor<S>&, Index);

VQVOL_INSTANTIATE_LAYERS(float)
VQVOL_INSTANTIATE_LAYERS(double)

}  // namespace vqvol
