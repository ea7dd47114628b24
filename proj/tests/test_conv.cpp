#include "test_support.hpp"
#include "vqvol/conv.hpp"
#include "vqvol/gradcheck.hpp"
#include "vqvol/ops.hpp"

using namespace vqvol;
using test::random_tensor;

namespace {

// Direct seven-loop cross-correlation with zero padding.
VectorX<double> conv_oracle(const Tensor<double>& x, const Tensor<double>& w, const Tensor<double>& b,
                            ConvGeometry g, Shape& out_shape) {
  const Index B = x.dim(0), Ci = x.dim(1), D = x.dim(2), H = x.dim(3), W = x.dim(4);
  const Index Co = w.dim(0), k = w.dim(2);
  const Index od = (D + 2 * g.padding - k) / g.stride + 1;
  const Index oh = (H + 2 * g.padding - k) / g.stride + 1;
  const Index ow = (W + 2 * g.padding - k) / g.stride + 1;
  out_shape = {B, Co, od, oh, ow};
  VectorX<double> out = VectorX<double>::Zero(B * Co * od * oh * ow);
  auto xv = [&](Index bi, Index c, Index z, Index y, Index xx) {
    if (z < 0 || y < 0 || xx < 0 || z >= D || y >= H || xx >= W) return 0.0;
    return x.values()((((bi * Ci + c) * D + z) * H + y) * W + xx);
  };
  for (Index bi = 0; bi < B; ++bi)
    for (Index o = 0; o < Co; ++o)
      for (Index z = 0; z < od; ++z)
        for (Index y = 0; y < oh; ++y)
          for (Index xx = 0; xx < ow; ++xx) {
            double acc = b.defined() ? b.values()(o) : 0.0;
            for (Index c = 0; c < Ci; ++c)
              for (Index kz = 0; kz < k; ++kz)
                for (Index ky = 0; ky < k; ++ky)
                  for (Index kx = 0; kx < k; ++kx) {
                    acc += w.values()((((o * Ci + c) * k + kz) * k + ky) * k + kx) *
                           xv(bi, c, z * g.stride - g.padding + kz, y * g.stride - g.padding + ky,
                              xx * g.stride - g.padding + kx);
                  }
            out((((bi * Co + o) * od + z) * oh + y) * ow + xx) = acc;
          }
  return out;
}

}  // namespace

TEST(Conv, OutputExtents) {
  EXPECT_EQ(conv_output_extent(8, 3, {2, 1}), 4);
  EXPECT_EQ(conv_output_extent(5, 3, {1, 0}), 3);
  EXPECT_LE(conv_output_extent(2, 5, {1, 0}), 0);
  EXPECT_EQ(conv_transpose_output_extent(4, 4, {2, 1}), 8);
}

TEST(Conv, MatchesDirectOracle) {
  for (auto [stride, pad, k] : std::vector<std::tuple<Index, Index, Index>>{{1, 1, 3}, {2, 1, 3}, {1, 0, 1}, {2, 0, 2}}) {
    Tensor<double> x = random_tensor({2, 3, 5, 4, 6}, 1, -1, 1, false);
    Tensor<double> w = random_tensor({4, 3, k, k, k}, 2, -1, 1, false);
    Tensor<double> b = random_tensor({4}, 3, -1, 1, false);
    const ConvGeometry g{stride, pad};
    Shape shape;
    const VectorX<double> expected = conv_oracle(x, w, b, g, shape);
    Tensor<double> y = conv3d(x, w, b, g);
    ASSERT_EQ(y.shape(), shape);
    EXPECT_LT((y.values() - expected).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Conv, TransposeIsAdjoint) {
  const ConvGeometry g{2, 1};
  Tensor<double> x = random_tensor({1, 2, 6, 4, 4}, 4, -1, 1, false);
  Tensor<double> w = random_tensor({3, 2, 4, 4, 4}, 5, -1, 1, false);
  Tensor<double> y = conv3d(x, w, Tensor<double>(), g);
  Tensor<double> r = random_tensor(y.shape(), 6, -1, 1, false);
  Tensor<double> back = conv_transpose3d(r, w, Tensor<double>(), g);
  ASSERT_EQ(back.shape(), x.shape());
  EXPECT_NEAR(y.values().dot(r.values()), x.values().dot(back.values()), 1e-10);
}

TEST(Conv, RejectsMismatchedChannels) {
  Tensor<double> x = Tensor<double>::zeros({1, 2, 4, 4, 4});
  Tensor<double> w = Tensor<double>::zeros({3, 1, 3, 3, 3});
  EXPECT_THROW(conv3d(x, w, Tensor<double>(), {1, 1}), std::invalid_argument);
  EXPECT_THROW(conv3d(Tensor<double>::zeros({2, 4, 4}), w, Tensor<double>()), std::invalid_argument);
}

TEST(Conv, Gradients) {
  for (ConvGeometry g : {ConvGeometry{1, 1}, ConvGeometry{2, 1}}) {
    Tensor<double> x = random_tensor({2, 2, 4, 4, 3}, 7);
    Tensor<double> w = random_tensor({2, 2, 3, 3, 3}, 8);
    Tensor<double> b = random_tensor({2}, 9);
    auto fn = [&] {
      Tensor<double> y = conv3d(x, w, b, g);
      return sum(y * random_tensor(y.shape(), 10, -1, 1, false));
    };
    GradCheckReport r = check_gradients(fn, {x, w, b});
    EXPECT_LT(r.max_relative_error, 1e-4);
  }
}

TEST(Conv, TransposeGradients) {
  Tensor<double> x = random_tensor({1, 2, 2, 3, 2}, 11);
  Tensor<double> w = random_tensor({2, 3, 4, 4, 4}, 12);
  Tensor<double> b = random_tensor({3}, 13);
  auto fn = [&] {
    Tensor<double> y = conv_transpose3d(x, w, b, {2, 1});
    return sum(y * random_tensor(y.shape(), 14, -1, 1, false));
  };
  GradCheckReport r = check_gradients(fn, {x, w, b});
  EXPECT_LT(r.max_relative_error, 1e-4);
}

TEST(Conv, FloatMatchesDouble) {
  Tensor<double> x = random_tensor({1, 2, 4, 4, 4}, 15, -1, 1, false);
  Tensor<double> w = random_tensor({3, 2, 3, 3, 3}, 16, -1, 1, false);
  Tensor<float> xf(x.shape(), x.values().cast<float>());
  Tensor<float> wf(w.shape(), w.values().cast<float>());
  Tensor<double> y = conv3d(x, w, Tensor<double>(), {1, 1});
  Tensor<float> yf = conv3d(xf, wf, Tensor<float>(), {1, 1});
  EXPECT_LT((y.values() - yf.values().cast<double>()).cwiseAbs().maxCoeff(), 1e-5);
}
