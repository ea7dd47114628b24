#include "test_support.hpp"
#include "vqvol/dct.hpp"
#include "vqvol/gradcheck.hpp"
#include "vqvol/ops.hpp"

#include <cmath>
#include <numbers>

using namespace vqvol;
using test::random_tensor;

namespace {

// Definitional O(N^2)-per-axis orthonormal DCT-II of one [d, h, w] block.
VectorX<double> dct_oracle(const VectorX<double>& x, Index d, Index h, Index w) {
  auto coef = [](Index k, Index n, Index N) {
    const double s = k == 0 ? std::sqrt(1.0 / N) : std::sqrt(2.0 / N);
    return s * std::cos(std::numbers::pi * (n + 0.5) * k / N);
  };
  VectorX<double> out(d * h * w);
  for (Index kz = 0; kz < d; ++kz)
    for (Index ky = 0; ky < h; ++ky)
      for (Index kx = 0; kx < w; ++kx) {
        double acc = 0.0;
        for (Index z = 0; z < d; ++z)
          for (Index y = 0; y < h; ++y)
            for (Index xx = 0; xx < w; ++xx)
              acc += coef(kz, z, d) * coef(ky, y, h) * coef(kx, xx, w) * x((z * h + y) * w + xx);
        out((kz * h + ky) * w + kx) = acc;
      }
  return out;
}

}  // namespace

TEST(Dct, MatrixIsOrthonormal) {
  for (Index n : {1, 2, 5, 16}) {
    Eigen::MatrixXd m = dct_matrix(n);
    EXPECT_LT((m * m.transpose() - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Dct, MatchesDefinitionalOracle) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 10; ++trial) {
    const Index d = 1 + static_cast<Index>(rng() % 6), h = 1 + static_cast<Index>(rng() % 6),
                w = 1 + static_cast<Index>(rng() % 16);
    Tensor<double> x = random_tensor({1, 1, d, h, w}, 100 + trial, -1, 1, false);
    Tensor<double> c = dct3(x);
    EXPECT_LT((c.values() - dct_oracle(x.values(), d, h, w)).cwiseAbs().maxCoeff(), 1e-6);
  }
  Tensor<double> line = random_tensor({1, 1, 1, 1, 16}, 7, -1, 1, false);
  EXPECT_LT((dct3(line).values() - dct_oracle(line.values(), 1, 1, 16)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Dct, RoundTripAndParseval) {
  Tensor<double> x = random_tensor({2, 3, 4, 5, 6}, 2, -1, 1, false);
  Tensor<double> c = dct3(x);
  EXPECT_LT((dct3(c, true).values() - x.values()).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_NEAR(c.values().squaredNorm(), x.values().squaredNorm(), 1e-10);

  Tensor<float> xf(x.shape(), x.values().cast<float>());
  Tensor<float> back = dct3(dct3(xf), true);
  EXPECT_LT((back.values() - xf.values()).cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_NEAR(dct3(xf).values().squaredNorm() / xf.values().squaredNorm(), 1.0, 1e-5);
}

TEST(Dct, ConstantMapsToDcOnly) {
  Tensor<double> x = Tensor<double>::filled({1, 1, 2, 3, 4}, 2.0);
  Tensor<double> c = dct3(x);
  EXPECT_NEAR(c.values()(0), 2.0 * std::sqrt(24.0), 1e-12);
  EXPECT_LT(c.values().tail(23).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Dct, Gradients) {
  Tensor<double> x = random_tensor({1, 2, 3, 2, 4}, 3);
  for (bool inverse : {false, true}) {
    auto r = check_gradients([&] { return sum(square(dct3(x, inverse)) * random_tensor(x.shape(), 4, 0, 1, false)); }, {x});
    EXPECT_LT(r.max_relative_error, 1e-4);
  }
}
