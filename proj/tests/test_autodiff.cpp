#include "test_support.hpp"
#include "vqvol/gradcheck.hpp"
#include "vqvol/ops.hpp"

#include <cmath>

using namespace vqvol;
using test::random_tensor;
using test::signed_away_from_zero;

namespace {

Tensor<double> weighted_sum(const Tensor<double>& t, std::uint64_t seed) {
  return sum(t * random_tensor(t.shape(), seed, -1.0, 1.0, false));
}

void expect_gradients(const std::function<Tensor<double>()>& fn, std::vector<Tensor<double>> inputs) {
  const GradCheckReport r = check_gradients(fn, std::move(inputs));
  EXPECT_TRUE(r.passed) << "max relative error " << r.max_relative_error;
  EXPECT_LT(r.max_relative_error, 1e-4);
  EXPECT_GT(r.entries_checked, 0);
}

}  // namespace

TEST(Tensor, ConstructionAndShapes) {
  Tensor<float> t = Tensor<float>::filled({2, 3}, 1.5f);
  EXPECT_EQ(t.size(), 6);
  EXPECT_EQ(t.rank(), 2);
  EXPECT_EQ(t.dim(1), 3);
  EXPECT_FLOAT_EQ(t.values()(5), 1.5f);
  EXPECT_THROW(Tensor<float>({2, 2}, VectorX<float>::Zero(3)), std::invalid_argument);
  EXPECT_THROW(Tensor<float>::scalar(1.0f).dim(3), std::out_of_range);
  EXPECT_DOUBLE_EQ(Tensor<double>::scalar(2.0).item(), 2.0);
  EXPECT_THROW(Tensor<double>::zeros({2}).item(), std::logic_error);
}

TEST(Tensor, ElementwiseValues) {
  Tensor<double> a({3}, (VectorX<double>(3) << 1, 2, 3).finished());
  Tensor<double> b({3}, (VectorX<double>(3) << 4, 5, 6).finished());
  EXPECT_EQ((a + b).values(), (VectorX<double>(3) << 5, 7, 9).finished());
  EXPECT_EQ((a - b).values(), (VectorX<double>(3) << -3, -3, -3).finished());
  EXPECT_EQ((a * b).values(), (VectorX<double>(3) << 4, 10, 18).finished());
  EXPECT_DOUBLE_EQ((a / b).values()(2), 0.5);
  EXPECT_EQ((2.0 * a).values(), (VectorX<double>(3) << 2, 4, 6).finished());
  EXPECT_EQ((Tensor<double>::scalar(10.0) - a).values(), (VectorX<double>(3) << 9, 8, 7).finished());
  EXPECT_EQ((a - 1.0).values(), (VectorX<double>(3) << 0, 1, 2).finished());
  EXPECT_THROW(a + Tensor<double>::zeros({2}), std::invalid_argument);
}

TEST(Tensor, ReduceAxes) {
  Tensor<double> a({2, 3}, (VectorX<double>(6) << 1, 2, 3, 4, 5, 6).finished());
  EXPECT_DOUBLE_EQ(sum(a).item(), 21.0);
  EXPECT_DOUBLE_EQ(mean(a).item(), 3.5);
  Tensor<double> rows = reduce(ReduceOp::sum, a, {1});
  EXPECT_EQ(rows.shape(), Shape({2}));
  EXPECT_EQ(rows.values(), (VectorX<double>(2) << 6, 15).finished());
  Tensor<double> cols = reduce(ReduceOp::mean, a, {0});
  EXPECT_EQ(cols.values(), (VectorX<double>(3) << 2.5, 3.5, 4.5).finished());
  EXPECT_THROW(reduce(ReduceOp::sum, a, {2}), std::invalid_argument);
}

TEST(Tensor, SharedSubexpressionAccumulates) {
  Tensor<double> x = Tensor<double>::filled({1}, 3.0, true);
  Tensor<double> y = x * x + x;
  sum(y).backward();
  EXPECT_DOUBLE_EQ(x.grad()(0), 7.0);
  x.zero_grad();
  EXPECT_FALSE(x.has_grad());
}

TEST(Tensor, GraphVisitsEachNodeOnce) {
  Tensor<double> x = Tensor<double>::filled({2}, 1.0, true);
  Tensor<double> h = exp(x);
  Tensor<double> root = sum(h * h + h);
  Graph<double> g(root);
  EXPECT_EQ(g.size(), 5);
  EXPECT_EQ(g.order().back(), root.node().get());
  EXPECT_EQ(g.order().front(), x.node().get());
}

TEST(Tensor, NoGradGuardDropsGraph) {
  Tensor<double> x = Tensor<double>::filled({2}, 1.0, true);
  {
    NoGradGuard guard;
    EXPECT_FALSE(NoGradGuard::grad_enabled());
    Tensor<double> y = x * x;
    EXPECT_FALSE(y.requires_grad());
    EXPECT_TRUE(y.node()->inputs.empty());
  }
  EXPECT_TRUE(NoGradGuard::grad_enabled());
  EXPECT_TRUE((x * x).requires_grad());
}

TEST(Tensor, DetachAndStopGradient) {
  Tensor<double> x = Tensor<double>::filled({2}, 2.0, true);
  Tensor<double> y = stop_gradient(x) * x;
  sum(y).backward();
  EXPECT_DOUBLE_EQ(x.grad()(0), 2.0);
  EXPECT_FALSE(x.detach().requires_grad());
}

TEST(Tensor, StraightThroughForwardsReplacement) {
  Tensor<double> src = Tensor<double>::filled({3}, 1.0, true);
  Tensor<double> rep = Tensor<double>::filled({3}, 5.0, true);
  Tensor<double> st = straight_through(src, rep);
  EXPECT_DOUBLE_EQ(st.values()(1), 5.0);
  sum(st * 2.0).backward();
  EXPECT_DOUBLE_EQ(src.grad()(0), 2.0);
  EXPECT_FALSE(rep.has_grad());
}

TEST(GradCheck, BinaryOps) {
  for (BinaryOp op : {BinaryOp::add, BinaryOp::sub, BinaryOp::mul, BinaryOp::div}) {
    Tensor<double> a = random_tensor({2, 3, 2}, 1);
    Tensor<double> b = random_tensor({2, 3, 2}, 2, 0.5, 1.5);
    expect_gradients([&] { return weighted_sum(elementwise(op, a, b), 3); }, {a, b});
    Tensor<double> s = random_tensor({1}, 4, 0.5, 1.5);
    expect_gradients([&] { return weighted_sum(elementwise(op, a, s), 5); }, {a, s});
    expect_gradients([&] { return weighted_sum(elementwise(op, s, b), 6); }, {s, b});
  }
}

TEST(GradCheck, UnaryOps) {
  const std::vector<UnaryOp> ops = {UnaryOp::neg,     UnaryOp::abs,      UnaryOp::relu,   UnaryOp::exp,
                                    UnaryOp::sigmoid, UnaryOp::softplus, UnaryOp::square};
  for (UnaryOp op : ops) {
    Tensor<double> a = signed_away_from_zero({3, 4}, 10 + static_cast<int>(op));
    expect_gradients([&] { return weighted_sum(unary(op, a), 7); }, {a});
  }
  for (UnaryOp op : {UnaryOp::log, UnaryOp::sqrt}) {
    Tensor<double> a = random_tensor({3, 4}, 20 + static_cast<int>(op), 0.3, 2.0);
    expect_gradients([&] { return weighted_sum(unary(op, a), 8); }, {a});
  }
}

TEST(Ops, Clamp01) {
  Tensor<double> a({5}, (VectorX<double>(5) << -0.5, 0.0, 0.25, 0.8, 1.5).finished(), true);
  Tensor<double> y = clamp01(a);
  EXPECT_EQ(y.values(), (VectorX<double>(5) << 0.0, 0.0, 0.25, 0.8, 1.0).finished());
  sum(y * Tensor<double>({5}, (VectorX<double>(5) << 1, 2, 3, 4, 5).finished())).backward();
  EXPECT_EQ(a.grad(), (VectorX<double>(5) << 0, 0, 3, 4, 0).finished());
  Tensor<double> b = random_tensor({3, 4}, 35, 0.05, 0.95);
  expect_gradients([&] { return weighted_sum(clamp01(b), 36); }, {b});
}

TEST(GradCheck, PowAndLeakyRelu) {
  Tensor<double> a = random_tensor({5}, 30, 0.3, 2.0);
  expect_gradients([&] { return weighted_sum(pow(a, 1.7), 31); }, {a});
  Tensor<double> b = signed_away_from_zero({6}, 32);
  expect_gradients([&] { return weighted_sum(leaky_relu(b, 0.1), 33); }, {b});
}

TEST(GradCheck, ReduceAndReshape) {
  Tensor<double> a = random_tensor({2, 3, 4}, 40);
  expect_gradients([&] { return weighted_sum(reduce(ReduceOp::sum, a, {1}), 41); }, {a});
  expect_gradients([&] { return weighted_sum(reduce(ReduceOp::mean, a, {0, 2}), 42); }, {a});
  expect_gradients([&] { return weighted_sum(reshape(a, {4, 6}), 43); }, {a});
  expect_gradients([&] { return mean(a); }, {a});
}

TEST(GradCheck, VolumeOps) {
  Tensor<double> a = random_tensor({1, 2, 2, 3, 2}, 50);
  Tensor<double> b = random_tensor({1, 1, 2, 3, 2}, 51);
  expect_gradients([&] { return weighted_sum(concat_channels(a, b), 52); }, {a, b});
  expect_gradients([&] { return weighted_sum(upsample_nearest(a, {2, 1, 2}), 53); }, {a});
  expect_gradients([&] { return weighted_sum(pad_edge(a, {1, 0, 1}, {0, 1, 1}), 54); }, {a});
  for (int axis = 0; axis < 3; ++axis) {
    expect_gradients([&] { return weighted_sum(forward_difference(a, axis), 55 + axis); }, {a});
  }
  Tensor<double> c = random_tensor({1, 8, 2, 2, 1}, 60);
  expect_gradients([&] { return weighted_sum(voxel_shuffle(c, 2), 61); }, {c});
  Tensor<double> d = random_tensor({1, 1, 4, 4, 2}, 62);
  expect_gradients([&] { return weighted_sum(voxel_unshuffle(d, 2), 63); }, {d});
  expect_gradients([&] { return weighted_sum(avg_pool3d(d, 2, 2), 64); }, {d});
  expect_gradients([&] { return weighted_sum(avg_pool3d(d, 2, 1), 65); }, {d});
}

TEST(VolumeOps, VoxelShuffleRoundTripIsExact) {
  Tensor<double> x = random_tensor({2, 16, 2, 3, 1}, 70, -1, 1, false);
  Tensor<double> y = voxel_shuffle(x, 2);
  EXPECT_EQ(y.shape(), Shape({2, 2, 4, 6, 2}));
  EXPECT_EQ(voxel_unshuffle(y, 2).values(), x.values());
  Tensor<double> z = random_tensor({1, 3, 6, 3, 9}, 71, -1, 1, false);
  EXPECT_EQ(voxel_shuffle(voxel_unshuffle(z, 3), 3).values(), z.values());
  EXPECT_THROW(voxel_shuffle(Tensor<double>::zeros({1, 7, 1, 1, 1}), 2), std::invalid_argument);
  EXPECT_THROW(voxel_unshuffle(Tensor<double>::zeros({1, 1, 3, 2, 2}), 2), std::invalid_argument);
}

TEST(VolumeOps, VoxelShufflePhaseLayout) {
  VectorX<double> v(8);
  for (int i = 0; i < 8; ++i) v(i) = i;
  Tensor<double> y = voxel_shuffle(Tensor<double>({1, 8, 1, 1, 1}, v), 2);
  // Channel pz*4 + py*2 + px lands at (pz, py, px).
  for (int pz = 0; pz < 2; ++pz)
    for (int py = 0; py < 2; ++py)
      for (int px = 0; px < 2; ++px) EXPECT_EQ(y.values()((pz * 2 + py) * 2 + px), pz * 4 + py * 2 + px);
}

TEST(VolumeOps, ForwardDifferenceValues) {
  VectorX<double> v(3);
  v << 1, 4, 9;
  Tensor<double> d = forward_difference(Tensor<double>({1, 1, 1, 1, 3}, v), 2);
  EXPECT_EQ(d.values(), (VectorX<double>(3) << 3, 5, 0).finished());
  Tensor<double> flat = forward_difference(Tensor<double>({1, 1, 1, 1, 3}, v), 0);
  EXPECT_TRUE(flat.values().isZero());
}

TEST(VolumeOps, UpsampleAndPool) {
  Tensor<double> a({1, 1, 1, 1, 2}, (VectorX<double>(2) << 1, 3).finished());
  Tensor<double> up = upsample_nearest(a, {1, 1, 2});
  EXPECT_EQ(up.values(), (VectorX<double>(4) << 1, 1, 3, 3).finished());
  Tensor<double> pooled = avg_pool3d(Tensor<double>({1, 1, 1, 1, 4}, (VectorX<double>(4) << 1, 3, 5, 7).finished()), 1, 1);
  EXPECT_EQ(pooled.values()(3), 7.0);
  Tensor<double> cube = Tensor<double>::filled({1, 1, 2, 2, 2}, 2.0);
  EXPECT_DOUBLE_EQ(avg_pool3d(cube, 2, 2).item(), 2.0);
}
