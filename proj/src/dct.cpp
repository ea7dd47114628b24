#include "vqvol/dct.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace vqvol {

Eigen::MatrixXd dct_matrix(Index n) {
  if (n < 1) throw std::invalid_argument("dct_matrix: length must be positive");
  Eigen::MatrixXd m(n, n);
  const double nn = static_cast<double>(n);
  for (Index k = 0; k < n; ++k) {
    const double s = k == 0 ? std::sqrt(1.0 / nn) : std::sqrt(2.0 / nn);
    for (Index i = 0; i < n; ++i) {
      m(k, i) = s * std::cos(std::numbers::pi * (static_cast<double>(i) + 0.5) *
                             static_cast<double>(k) / nn);
    }
  }
  return m;
}

template <typename Scalar>
void dct3_inplace(Scalar* data, Index d, Index h, Index w, bool inverse) {
  using Mat = RowMatrixX<Scalar>;
  auto basis = [inverse](Index n) -> Mat {
    Eigen::MatrixXd m = dct_matrix(n);
    if (inverse) m.transposeInPlace();
    return m.cast<Scalar>();
  };
  if (w > 1) {
    // Rows of length w: X = X * M^T.
    const Mat m = basis(w);
    Eigen::Map<Mat> rows(data, d * h, w);
    rows = (rows * m.transpose()).eval();
  }
  if (h > 1) {
    const Mat m = basis(h);
    for (Index z = 0; z < d; ++z) {
      Eigen::Map<Mat> slice(data + z * h * w, h, w);
      slice = (m * slice).eval();
    }
  }
  if (d > 1) {
    const Mat m = basis(d);
    Eigen::Map<Mat> slab(data, d, h * w);
    slab = (m * slab).eval();
  }
}

template <typename Scalar>
Tensor<Scalar> dct3(const Tensor<Scalar>& x, bool inverse) {
  const Shape& s = x.shape();
  if (s.size() < 3) {
    throw std::invalid_argument("dct3: need at least 3 axes, got " + to_string(s));
  }
  const Index d = s[s.size() - 3], h = s[s.size() - 2], w = s[s.size() - 1];
  const Index block = d * h * w;
  const Index blocks = block > 0 ? x.size() / block : 0;
  VectorX<Scalar> out = x.values();
  for (Index b = 0; b < blocks; ++b) dct3_inplace(out.data() + b * block, d, h, w, inverse);
  auto xn = x.node();
  return detail::make_result<Scalar>(
      s, std::move(out), {xn},
      [xn, d, h, w, block, blocks, inverse](detail::Node<Scalar>& self) {
        VectorX<Scalar> g = self.grad;
        for (Index b = 0; b < blocks; ++b) dct3_inplace(g.data() + b * block, d, h, w, !inverse);
        xn->accumulate(g);
      },
      "dct3");
}

template Tensor<float> dct3(const Tensor<float>&, bool);
template Tensor<double> dct3(const Tensor<double>&, bool);
template void dct3_inplace(float*, Index, Index, Index, bool);
template void dct3_inplace(double*, Index, Index, Index, bool);

}  // namespace vqvol
