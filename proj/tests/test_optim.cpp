#include "test_support.hpp"
#include "vqvol/ops.hpp"
#include "vqvol/optim.hpp"

#include <cmath>
#include <numbers>

using namespace vqvol;

namespace {

Tensor<double> param(std::initializer_list<double> v) {
  VectorX<double> x(static_cast<Index>(v.size()));
  Index i = 0;
  for (double e : v) x(i++) = e;
  return Tensor<double>({x.size()}, x, true);
}

}  // namespace

TEST(Adam, FirstStepMovesByLearningRate) {
  Tensor<double> p = param({1.0, -2.0, 3.0});
  sum(p * Tensor<double>({3}, (VectorX<double>(3) << 4.0, -0.5, 0.0).finished())).backward();
  ParameterList<double> params{{"p", &p}};
  Adam adam;
  adam.step(params, 0.1);
  // m_hat = g and v_hat = g^2 after one step, so each entry moves by lr * sign(g).
  EXPECT_NEAR(p.values()(0), 0.9, 1e-8);
  EXPECT_NEAR(p.values()(1), -1.9, 1e-8);
  EXPECT_EQ(p.values()(2), 3.0);
  EXPECT_EQ(adam.steps(), 1);
  EXPECT_EQ(adam.last_lr(), 0.1);
}

TEST(Adam, HandTraceTwoSteps) {
  AdamOptions o{0.5, 0.75, 0.0};
  Adam adam(o);
  Tensor<double> p = param({0.0});
  ParameterList<double> params{{"p", &p}};
  double m = 0, v = 0, x = 0;
  for (int k = 1; k <= 2; ++k) {
    const double g = k == 1 ? 2.0 : -1.0;
    p.zero_grad();
    sum(p * Tensor<double>::filled({1}, g)).backward();
    adam.step(params, 0.01);
    m = 0.5 * m + 0.5 * g;
    v = 0.75 * v + 0.25 * g * g;
    x -= 0.01 * (m / (1 - std::pow(0.5, k))) / std::sqrt(v / (1 - std::pow(0.75, k)));
    EXPECT_NEAR(p.values()(0), x, 1e-12) << "step " << k;
  }
  EXPECT_NEAR(adam.slots()[0].m(0), m, 1e-15);
  EXPECT_NEAR(adam.slots()[0].v(0), v, 1e-15);
}

TEST(Adam, MissingGradientIsZero) {
  Tensor<double> p = param({5.0});
  ParameterList<double> params{{"p", &p}};
  Adam adam;
  adam.step(params, 1.0);
  EXPECT_EQ(p.values()(0), 5.0);
}

TEST(Adam, RejectsChangedParameterList) {
  Tensor<double> a = param({1.0}), b = param({1.0, 2.0});
  Adam adam;
  adam.step(ParameterList<double>{{"a", &a}}, 0.1);
  EXPECT_THROW(adam.step(ParameterList<double>{{"a", &a}, {"b", &b}}, 0.1), std::invalid_argument);
  EXPECT_THROW(adam.step(ParameterList<double>{{"b", &a}}, 0.1), std::invalid_argument);
}

TEST(Adam, RestoreContinuesIdentically) {
  Tensor<double> p1 = param({1.0, 2.0}), p2 = param({1.0, 2.0});
  Adam a1, a2;
  for (int k = 0; k < 3; ++k) {
    p1.zero_grad();
    sum(square(p1)).backward();
    a1.step(ParameterList<double>{{"p", &p1}}, 0.05);
    if (k == 1) {
      p2.mutable_values() = p1.values();
      a2.restore(a1.steps(), a1.last_lr(), a1.slots());
    }
  }
  p2.zero_grad();
  sum(square(p2)).backward();
  a2.step(ParameterList<double>{{"p", &p2}}, 0.05);
  EXPECT_EQ(p1.values(), p2.values());
  EXPECT_THROW(a2.restore(-1, 0.0, {}), std::invalid_argument);
}

TEST(Adam, MinimizesQuadratic) {
  Tensor<double> p = param({3.0, -4.0});
  Adam adam;
  for (int k = 0; k < 2000; ++k) {
    p.zero_grad();
    sum(square(p)).backward();
    adam.step(ParameterList<double>{{"p", &p}}, 0.01);
  }
  EXPECT_LT(p.values().cwiseAbs().maxCoeff(), 1e-2);
}

TEST(Sgdr, CosineWithWarmRestarts) {
  SgdrSchedule s{1.0, 0.0, 4, 2.0};
  EXPECT_DOUBLE_EQ(s.lr(0), 1.0);
  EXPECT_NEAR(s.lr(2), 0.5, 1e-15);
  EXPECT_NEAR(s.lr(1), 0.5 * (1 + std::cos(std::numbers::pi / 4)), 1e-15);
  EXPECT_DOUBLE_EQ(s.lr(4), 1.0);
  EXPECT_NEAR(s.lr(8), 0.5, 1e-15);
  EXPECT_DOUBLE_EQ(s.lr(12), 1.0);
  for (long long t = 0; t < 40; ++t) {
    EXPECT_GE(s.lr(t), 0.0);
    EXPECT_LE(s.lr(t), 1.0);
  }
  SgdrSchedule flat{2.0, 1.0, 3, 1.0};
  EXPECT_DOUBLE_EQ(flat.lr(3), 2.0);
  EXPECT_DOUBLE_EQ(flat.lr(7), flat.lr(1));
  EXPECT_THROW(s.lr(-1), std::invalid_argument);
  EXPECT_THROW((SgdrSchedule{1.0, 0.0, 0, 2.0}.lr(0)), std::invalid_argument);
}
