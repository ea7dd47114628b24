#include "test_support.hpp"
#include "vqvol/metrics.hpp"
#include "vqvol/phantom.hpp"

#include <algorithm>
#include <cmath>

using namespace vqvol;

namespace {

Volume random_volume(Dims3 dims, std::uint64_t seed, float lo = 0.0f, float hi = 1.0f) {
  Volume v(dims);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(lo, hi);
  for (auto& x : v.data) x = u(rng);
  return v;
}

Volume binary_sphere(Index n) {
  Volume v(Dims3{n, n, n});
  const double c = (n - 1) / 2.0;
  for (Index z = 0; z < n; ++z)
    for (Index y = 0; y < n; ++y)
      for (Index x = 0; x < n; ++x) {
        const double r2 = (z - c) * (z - c) + (y - c) * (y - c) + (x - c) * (x - c);
        v.at(z, y, x) = r2 < (n * 0.3) * (n * 0.3) ? 1.0f : 0.0f;
      }
  return v;
}

// Mean SSIM over every valid window position with explicit 3D Gaussian weights.
double ssim_oracle(const Volume& a, const Volume& b, Index win, double sigma) {
  std::vector<double> g(static_cast<std::size_t>(win));
  double total = 0.0;
  for (Index i = 0; i < win; ++i) {
    const double t = i - (win - 1) / 2.0;
    g[static_cast<std::size_t>(i)] = std::exp(-t * t / (2 * sigma * sigma));
    total += g[static_cast<std::size_t>(i)];
  }
  for (double& v : g) v /= total;
  const double c1 = 1e-4, c2 = 9e-4;
  double acc = 0.0;
  Index count = 0;
  for (Index z = 0; z + win <= a.dims[0]; ++z)
    for (Index y = 0; y + win <= a.dims[1]; ++y)
      for (Index x = 0; x + win <= a.dims[2]; ++x) {
        double mx = 0, my = 0, sxx = 0, syy = 0, sxy = 0;
        for (Index i = 0; i < win; ++i)
          for (Index j = 0; j < win; ++j)
            for (Index k = 0; k < win; ++k) {
              const double w = g[static_cast<std::size_t>(i)] * g[static_cast<std::size_t>(j)] * g[static_cast<std::size_t>(k)];
              const double p = a.at(z + i, y + j, x + k), q = b.at(z + i, y + j, x + k);
              mx += w * p;
              my += w * q;
              sxx += w * p * p;
              syy += w * q * q;
              sxy += w * p * q;
            }
        const double vx = sxx - mx * mx, vy = syy - my * my, cxy = sxy - mx * my;
        acc += (2 * mx * my + c1) * (2 * cxy + c2) / ((mx * mx + my * my + c1) * (vx + vy + c2));
        ++count;
      }
  return acc / static_cast<double>(count);
}

double mmd2_oracle(const std::vector<Volume>& a, const std::vector<Volume>& b, double bw) {
  auto k = [&](const Volume& p, const Volume& q) {
    double s = 0.0;
    for (std::size_t i = 0; i < p.data.size(); ++i) {
      const double d = static_cast<double>(p.data[i]) - static_cast<double>(q.data[i]);
      s += d * d;
    }
    return std::exp(-s / (2 * bw * bw));
  };
  double kaa = 0, kbb = 0, kab = 0;
  for (const auto& p : a)
    for (const auto& q : a) kaa += k(p, q);
  for (const auto& p : b)
    for (const auto& q : b) kbb += k(p, q);
  for (const auto& p : a)
    for (const auto& q : b) kab += k(p, q);
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  return kaa / (na * na) + kbb / (nb * nb) - 2 * kab / (na * nb);
}

double median_pairwise_distance(const std::vector<Volume>& pooled) {
  std::vector<double> d;
  for (std::size_t i = 0; i < pooled.size(); ++i)
    for (std::size_t j = i + 1; j < pooled.size(); ++j) {
      double s = 0;
      for (std::size_t k = 0; k < pooled[i].data.size(); ++k) {
        const double t = static_cast<double>(pooled[i].data[k]) - pooled[j].data[k];
        s += t * t;
      }
      d.push_back(std::sqrt(s));
    }
  std::sort(d.begin(), d.end());
  const std::size_t m = d.size();
  return m % 2 ? d[m / 2] : 0.5 * (d[m / 2 - 1] + d[m / 2]);
}

}  // namespace

TEST(MsSsim, IdentityIsExactlyOne) {
  Volume x = random_volume({24, 24, 24}, 1);
  EXPECT_EQ(ms_ssim(x, x, ms_ssim_options_for(x.dims)), 1.0);
  Volume big = random_volume({32, 32, 32}, 2);
  MsSsimOptions o;
  o.scales = 2;
  o.window = 7;
  EXPECT_EQ(ms_ssim(big, big, o), 1.0);
}

TEST(MsSsim, SymmetricAndBelowOneForDifferentInputs) {
  Volume x = random_volume({24, 24, 24}, 3);
  Volume y = random_volume({24, 24, 24}, 4);
  const MsSsimOptions o = ms_ssim_options_for(x.dims);
  const double xy = ms_ssim(x, y, o);
  EXPECT_NEAR(xy, ms_ssim(y, x, o), 1e-12);
  EXPECT_LT(xy, 1.0);
  EXPECT_GE(xy, 0.0);
}

TEST(MsSsim, StructureInversion) {
  Volume x = binary_sphere(24);
  Volume inv = x;
  for (auto& v : inv.data) v = 1.0f - v;
  const double value = ms_ssim(x, inv, ms_ssim_options_for(x.dims));
  EXPECT_LT(value, 0.2);
  EXPECT_GE(value, 0.0);
}

TEST(MsSsim, SingleScaleMatchesSlidingWindowOracle) {
  Volume x = random_volume({13, 14, 12}, 5);
  Volume y = x;
  std::mt19937_64 rng(6);
  std::normal_distribution<float> n(0.0f, 0.1f);
  for (auto& v : y.data) v += n(rng);
  MsSsimOptions o;
  o.scales = 1;
  o.window = 7;
  const double oracle = ssim_oracle(x, y, 7, 1.5);
  EXPECT_NEAR(ms_ssim(x, y, o), oracle, 1e-5);
  EXPECT_NEAR(ssim(x, y, o), oracle, 1e-10);
}

TEST(MsSsim, OptionsFitSmallVolumes) {
  MsSsimOptions o = ms_ssim_options_for({24, 24, 24});
  EXPECT_EQ(o.scales, 2);
  EXPECT_EQ(o.window, 11);
  o = ms_ssim_options_for({192, 256, 192});
  EXPECT_EQ(o.scales, 5);
  o = ms_ssim_options_for({8, 10, 9});
  EXPECT_EQ(o.scales, 1);
  EXPECT_EQ(o.window, 7);
  Volume tiny = random_volume({8, 8, 8}, 7);
  EXPECT_THROW(ms_ssim(tiny, tiny), std::invalid_argument);
  EXPECT_THROW(ms_ssim(tiny, random_volume({8, 8, 9}, 8), ms_ssim_options_for(tiny.dims)), std::invalid_argument);
}

TEST(MsSsim, CustomWeightsRenormalized) {
  Volume x = random_volume({24, 24, 24}, 9);
  Volume y = random_volume({24, 24, 24}, 10);
  MsSsimOptions a;
  a.scales = 2;
  a.window = 5;
  a.weights = {1.0, 1.0};
  MsSsimOptions b = a;
  b.weights = {3.0, 3.0};
  EXPECT_NEAR(ms_ssim(x, y, a), ms_ssim(x, y, b), 1e-14);
}

TEST(Mmd, SameSetIsZero) {
  std::vector<Volume> a{random_volume({4, 4, 4}, 11), random_volume({4, 4, 4}, 12), random_volume({4, 4, 4}, 13)};
  std::vector<Volume> b{a[2], a[0], a[1]};
  EXPECT_NEAR(mmd2(a, b), 0.0, 1e-12);
}

TEST(Mmd, FarApartDeltasApproachTwo) {
  Volume p(Dims3{2, 2, 2}, 0.0f), q(Dims3{2, 2, 2}, 0.0f);
  double prev = 0.0;
  for (float sep : {1.0f, 3.0f, 10.0f}) {
    q = Volume(Dims3{2, 2, 2}, sep);
    const double d2 = 8.0 * sep * sep;
    const double expected = 2.0 * (1.0 - std::exp(-d2 / 2.0));
    const double v = mmd2({p, p}, {q, q}, 1.0);
    EXPECT_NEAR(v, expected, 1e-12);
    EXPECT_GT(v, prev);
    prev = v;
  }
  EXPECT_NEAR(prev, 2.0, 1e-12);
}

TEST(Mmd, MatchesDoubleLoopOracle) {
  std::vector<Volume> a, b;
  for (int i = 0; i < 5; ++i) {
    a.push_back(random_volume({8, 8, 8}, 100 + i));
    b.push_back(random_volume({8, 8, 8}, 200 + i, 0.1f, 1.1f));
  }
  std::vector<Volume> pooled = a;
  pooled.insert(pooled.end(), b.begin(), b.end());
  const double bw = median_pairwise_distance(pooled);
  EXPECT_NEAR(mmd2(a, b), mmd2_oracle(a, b, bw), 1e-10);
  EXPECT_NEAR(mmd2(a, b, 3.0), mmd2_oracle(a, b, 3.0), 1e-10);
  EXPECT_GE(mmd2(a, b), 0.0);
  std::vector<Volume> a_perm{a[3], a[1], a[4], a[0], a[2]};
  EXPECT_NEAR(mmd2(a_perm, b), mmd2(a, b), 1e-14);
}

TEST(Mmd, Errors) {
  std::vector<Volume> one{random_volume({2, 2, 2}, 1)};
  std::vector<Volume> two{random_volume({2, 2, 2}, 2), random_volume({2, 2, 2}, 3)};
  EXPECT_THROW(mmd2(one, two), std::invalid_argument);
  EXPECT_THROW(mmd2(two, {random_volume({2, 2, 3}, 4), random_volume({2, 2, 3}, 5)}), std::invalid_argument);
  EXPECT_EQ(log_mmd(std::exp(-3.0)), -3.0);
  EXPECT_TRUE(std::isfinite(log_mmd(0.0)));
}

TEST(Segmentation, ThresholdBands) {
  Volume v(Dims3{1, 1, 7});
  v.data = {0.0f, 0.1f, 0.15f, 0.3f, 0.45f, 0.75f, 1.0f};
  SegmentationMask m = segment_tissues(v);
  EXPECT_EQ(m.labels, (std::vector<std::uint8_t>{0, 0, 1, 1, 2, 3, 3}));
  TissueThresholds bad{0.5, 0.4, 0.9};
  EXPECT_THROW(segment_tissues(v, bad), std::invalid_argument);
}

TEST(Segmentation, NoiselessPhantomRecoversLabels) {
  PhantomSpec spec = PhantomSpec::for_cohort(Cohort::control, {24, 24, 24}, 4);
  spec.noise_sigma = 0.0;
  Phantom p = generate_phantom(spec);
  EXPECT_EQ(segment_tissues(p.volume).labels, p.labels.labels);
}

TEST(Dice, Values) {
  SegmentationMask a(Dims3{1, 1, 4}), b(Dims3{1, 1, 4});
  a.labels = {3, 3, 2, 0};
  b.labels = {3, 2, 2, 0};
  EXPECT_DOUBLE_EQ(dice(a, b, Tissue::wm), 2.0 * 1 / 3);
  EXPECT_DOUBLE_EQ(dice(a, b, Tissue::gm), 2.0 * 1 / 3);
  EXPECT_DOUBLE_EQ(dice(a, b, Tissue::csf), 1.0);
  EXPECT_DOUBLE_EQ(dice(a, a, Tissue::wm), 1.0);
  EXPECT_DOUBLE_EQ(dice(a, b, Tissue::wm), dice(b, a, Tissue::wm));
  SegmentationMask c(Dims3{1, 1, 4}, Tissue::csf);
  EXPECT_DOUBLE_EQ(dice(a, c, Tissue::csf), 0.0);
  EXPECT_THROW(dice(a, SegmentationMask(Dims3{1, 2, 2}), Tissue::wm), std::invalid_argument);
}

TEST(TMap, HandExampleAndMasking) {
  Volume a0(Dims3{1, 1, 2}), a1(Dims3{1, 1, 2}), b0(Dims3{1, 1, 2}), b1(Dims3{1, 1, 2});
  a0.data = {0.0f, 1.0f};
  a1.data = {0.0f, 3.0f};
  b0.data = {1.0f, 2.0f};
  b1.data = {1.0f, 6.0f};
  TMap t = t_map({a0, a1}, {b0, b1});
  EXPECT_EQ(t.n1, 2);
  EXPECT_EQ(t.n2, 2);
  // Voxel 0: both groups constant with different means; the floor keeps t finite and large.
  EXPECT_EQ(t.valid[0], 1);
  EXPECT_LT(t.t.data[0], -1e5);
  // Voxel 1: means 2 vs 4, variances 2 and 8.
  EXPECT_NEAR(t.t.data[1], (2.0 - 4.0) / std::sqrt(2.0 / 2 + 8.0 / 2), 1e-6);
  TMap same = t_map({a0, a0}, {a0, a0});
  EXPECT_EQ(same.valid_count(), 0);
  EXPECT_EQ(same.mean_abs(), 0.0);
}

TEST(TMap, WelchMatchesDirectFormulaAndFlipsSign) {
  std::vector<Volume> a, b;
  for (int i = 0; i < 4; ++i) a.push_back(random_volume({3, 3, 3}, 300 + i));
  for (int i = 0; i < 6; ++i) b.push_back(random_volume({3, 3, 3}, 400 + i, 0.2f, 1.0f));
  TMap ab = t_map(a, b);
  TMap ba = t_map(b, a);
  for (std::size_t v = 0; v < 27; ++v) {
    auto stats = [&](const std::vector<Volume>& g) {
      double m = 0;
      for (const auto& x : g) m += x.data[v];
      m /= g.size();
      double s = 0;
      for (const auto& x : g) s += (x.data[v] - m) * (x.data[v] - m);
      return std::pair{m, s / (g.size() - 1)};
    };
    auto [ma, va] = stats(a);
    auto [mb, vb] = stats(b);
    EXPECT_NEAR(ab.t.data[v], (ma - mb) / std::sqrt(va / 4 + vb / 6), 1e-5);
    EXPECT_EQ(ab.t.data[v], -ba.t.data[v]);
  }
  EXPECT_THROW(t_map({a[0]}, b), std::invalid_argument);
}

TEST(TMap, PearsonOverValidVoxels) {
  std::vector<Volume> a, b;
  for (int i = 0; i < 5; ++i) {
    a.push_back(random_volume({4, 4, 4}, 500 + i));
    b.push_back(random_volume({4, 4, 4}, 600 + i));
  }
  TMap t = t_map(a, b);
  EXPECT_NEAR(pearson(t, t), 1.0, 1e-12);
  TMap neg = t_map(b, a);
  EXPECT_NEAR(pearson(t, neg), -1.0, 1e-12);
}
