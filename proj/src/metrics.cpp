#include "vqvol/metrics.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <stdexcept>

namespace vqvol {

namespace {

constexpr double kStandardWeights[5] = {0.0448, 0.2856, 0.3001, 0.2363, 0.1333};

struct Grid {
  Dims3 dims{};
  std::vector<double> v;
  double& at(Index z, Index y, Index x) { return v[static_cast<std::size_t>((z * dims[1] + y) * dims[2] + x)]; }
  double at(Index z, Index y, Index x) const { return v[static_cast<std::size_t>((z * dims[1] + y) * dims[2] + x)]; }
};

Grid to_grid(const Volume& vol) {
  Grid g{vol.dims, std::vector<double>(vol.data.begin(), vol.data.end())};
  return g;
}

std::vector<double> gaussian_window(Index size, double sigma) {
  std::vector<double> k(static_cast<std::size_t>(size));
  const double c = static_cast<double>(size - 1) / 2.0;
  double total = 0.0;
  for (Index i = 0; i < size; ++i) {
    const double t = static_cast<double>(i) - c;
    k[static_cast<std::size_t>(i)] = std::exp(-t * t / (2.0 * sigma * sigma));
    total += k[static_cast<std::size_t>(i)];
  }
  for (double& x : k) x /= total;
  return k;
}

// Valid-mode correlation with `k` along one axis.
Grid filter_axis(const Grid& g, const std::vector<double>& k, int axis) {
  const Index n = static_cast<Index>(k.size());
  Grid out;
  out.dims = g.dims;
  out.dims[axis] = g.dims[axis] - n + 1;
  out.v.assign(static_cast<std::size_t>(out.dims[0] * out.dims[1] * out.dims[2]), 0.0);
  for (Index z = 0; z < out.dims[0]; ++z)
    for (Index y = 0; y < out.dims[1]; ++y)
      for (Index x = 0; x < out.dims[2]; ++x) {
        double s = 0.0;
        for (Index i = 0; i < n; ++i) {
          const double w = k[static_cast<std::size_t>(i)];
          switch (axis) {
            case 0: s += w * g.at(z + i, y, x); break;
            case 1: s += w * g.at(z, y + i, x); break;
            default: s += w * g.at(z, y, x + i); break;
          }
        }
        out.at(z, y, x) = s;
      }
  return out;
}

Grid blur(const Grid& g, const std::vector<double>& k) {
  return filter_axis(filter_axis(filter_axis(g, k, 0), k, 1), k, 2);
}

Grid product(const Grid& a, const Grid& b) {
  Grid out{a.dims, std::vector<double>(a.v.size())};
  for (std::size_t i = 0; i < a.v.size(); ++i) out.v[i] = a.v[i] * b.v[i];
  return out;
}

Grid downsample(const Grid& g) {
  Grid out;
  out.dims = {g.dims[0] / 2, g.dims[1] / 2, g.dims[2] / 2};
  out.v.assign(static_cast<std::size_t>(out.dims[0] * out.dims[1] * out.dims[2]), 0.0);
  for (Index z = 0; z < out.dims[0]; ++z)
    for (Index y = 0; y < out.dims[1]; ++y)
      for (Index x = 0; x < out.dims[2]; ++x) {
        double s = 0.0;
        for (Index a = 0; a < 2; ++a)
          for (Index b = 0; b < 2; ++b)
            for (Index c = 0; c < 2; ++c) s += g.at(2 * z + a, 2 * y + b, 2 * x + c);
        out.at(z, y, x) = s / 8.0;
      }
  return out;
}

struct ScaleTerms {
  double cs = 0.0;
  double ssim = 0.0;
};

ScaleTerms scale_terms(const Grid& x, const Grid& y, const std::vector<double>& k, double c1, double c2) {
  const Grid mx = blur(x, k), my = blur(y, k);
  const Grid sxx = blur(product(x, x), k), syy = blur(product(y, y), k), sxy = blur(product(x, y), k);
  double cs_total = 0.0, ssim_total = 0.0;
  const std::size_t n = mx.v.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double ux = mx.v[i], uy = my.v[i];
    const double vx = sxx.v[i] - ux * ux, vy = syy.v[i] - uy * uy, cxy = sxy.v[i] - ux * uy;
    const double l = (2.0 * ux * uy + c1) / (ux * ux + uy * uy + c1);
    const double cs = (2.0 * cxy + c2) / (vx + vy + c2);
    cs_total += cs;
    ssim_total += l * cs;
  }
  return {cs_total / static_cast<double>(n), ssim_total / static_cast<double>(n)};
}

std::vector<double> resolve_weights(const MsSsimOptions& o) {
  if (o.scales < 1) throw std::invalid_argument("ms_ssim: scales must be >= 1");
  std::vector<double> w = o.weights;
  if (w.empty()) {
    if (o.scales > 5) throw std::invalid_argument("ms_ssim: standard weights cover at most 5 scales");
    w.assign(kStandardWeights, kStandardWeights + o.scales);
  }
  if (static_cast<int>(w.size()) != o.scales) throw std::invalid_argument("ms_ssim: one weight per scale required");
  double total = 0.0;
  for (double v : w) total += v;
  if (!(total > 0.0)) throw std::invalid_argument("ms_ssim: weights must sum to a positive value");
  for (double& v : w) v /= total;
  return w;
}

void check_fits(Dims3 dims, const MsSsimOptions& o) {
  if (o.window < 1 || o.window % 2 == 0) throw std::invalid_argument("ms_ssim: window must be odd and positive");
  const Index need = o.window << (o.scales - 1);
  for (Index d : dims) {
    if (d < need) {
      throw std::invalid_argument("ms_ssim: volume too small for " + std::to_string(o.scales) +
                                  " scales with window " + std::to_string(o.window));
    }
  }
}

void check_pair(const Volume& x, const Volume& y, const char* op) {
  if (x.dims != y.dims) throw std::invalid_argument(std::string(op) + ": volumes differ in dims");
}

}  // namespace

MsSsimOptions ms_ssim_options_for(Dims3 dims, MsSsimOptions requested) {
  const Index smallest = std::min({dims[0], dims[1], dims[2]});
  MsSsimOptions o = requested;
  const bool standard = o.weights.empty();
  while (o.scales > 1 && smallest < (o.window << (o.scales - 1))) --o.scales;
  if (smallest < o.window) o.window = smallest % 2 == 1 ? smallest : smallest - 1;
  if (o.window < 1) throw std::invalid_argument("ms_ssim: empty volume");
  if (!standard) o.weights.resize(static_cast<std::size_t>(o.scales));
  return o;
}

double ms_ssim(const Volume& x, const Volume& y, const MsSsimOptions& options) {
  check_pair(x, y, "ms_ssim");
  check_fits(x.dims, options);
  const std::vector<double> w = resolve_weights(options);
  const std::vector<double> k = gaussian_window(options.window, options.sigma);
  const double c1 = std::pow(0.01 * options.data_range, 2), c2 = std::pow(0.03 * options.data_range, 2);
  Grid gx = to_grid(x), gy = to_grid(y);
  double result = 1.0;
  for (int s = 0; s < options.scales; ++s) {
    const ScaleTerms t = scale_terms(gx, gy, k, c1, c2);
    const bool last = s + 1 == options.scales;
    const double term = std::max(last ? t.ssim : t.cs, 0.0);
    result *= std::pow(term, w[static_cast<std::size_t>(s)]);
    if (!last) {
      gx = downsample(gx);
      gy = downsample(gy);
    }
  }
  return result;
}

double ssim(const Volume& x, const Volume& y, const MsSsimOptions& options) {
  check_pair(x, y, "ssim");
  MsSsimOptions o = options;
  o.scales = 1;
  o.weights = {1.0};
  check_fits(x.dims, o);
  const std::vector<double> k = gaussian_window(o.window, o.sigma);
  const double c1 = std::pow(0.01 * o.data_range, 2), c2 = std::pow(0.03 * o.data_range, 2);
  return scale_terms(to_grid(x), to_grid(y), k, c1, c2).ssim;
}

double mmd2(const std::vector<Volume>& a, const std::vector<Volume>& b, std::optional<double> bandwidth) {
  if (a.size() < 2 || b.size() < 2) throw std::invalid_argument("mmd2: need at least 2 volumes per set");
  std::vector<const Volume*> all;
  for (const auto& v : a) all.push_back(&v);
  for (const auto& v : b) all.push_back(&v);
  for (const auto* v : all) {
    if (v->dims != a.front().dims) throw std::invalid_argument("mmd2: volumes differ in dims");
  }
  const std::size_t n = all.size();
  Eigen::MatrixXd d2 = Eigen::MatrixXd::Zero(static_cast<Index>(n), static_cast<Index>(n));
  std::vector<double> distances;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < all[i]->data.size(); ++k) {
        const double diff = static_cast<double>(all[i]->data[k]) - static_cast<double>(all[j]->data[k]);
        s += diff * diff;
      }
      d2(static_cast<Index>(i), static_cast<Index>(j)) = s;
      d2(static_cast<Index>(j), static_cast<Index>(i)) = s;
      distances.push_back(std::sqrt(s));
    }
  double bw;
  if (bandwidth) {
    if (!(*bandwidth > 0.0)) throw std::invalid_argument("mmd2: bandwidth must be positive");
    bw = *bandwidth;
  } else {
    std::sort(distances.begin(), distances.end());
    const std::size_t m = distances.size();
    bw = m % 2 == 1 ? distances[m / 2] : 0.5 * (distances[m / 2 - 1] + distances[m / 2]);
    if (!(bw > 0.0)) bw = 1.0;
  }
  const Index na = static_cast<Index>(a.size());
  const Eigen::MatrixXd k = (-d2.array() / (2.0 * bw * bw)).exp().matrix();
  const Index nb = static_cast<Index>(n) - na;
  const double kaa = k.topLeftCorner(na, na).sum() / static_cast<double>(na * na);
  const double kbb = k.bottomRightCorner(nb, nb).sum() / static_cast<double>(nb * nb);
  const double kab = k.topRightCorner(na, nb).sum() / static_cast<double>(na * nb);
  return kaa + kbb - 2.0 * kab;
}

double log_mmd(double mmd2_value) { return std::log(std::max(mmd2_value, DBL_MIN)); }

SegmentationMask segment_tissues(const Volume& x, const TissueThresholds& t) {
  if (!(t.csf < t.gm && t.gm < t.wm)) throw std::invalid_argument("segment_tissues: thresholds must be increasing");
  SegmentationMask m(x.dims);
  m.spacing = x.spacing;
  // Compare at the precision of the data so that a stored 0.45f counts as >= 0.45.
  const float wm = static_cast<float>(t.wm), gm = static_cast<float>(t.gm), csf = static_cast<float>(t.csf);
  for (std::size_t i = 0; i < x.data.size(); ++i) {
    const float v = x.data[i];
    Tissue c = Tissue::background;
    if (v >= wm) {
      c = Tissue::wm;
    } else if (v >= gm) {
      c = Tissue::gm;
    } else if (v >= csf) {
      c = Tissue::csf;
    }
    m.labels[i] = static_cast<std::uint8_t>(c);
  }
  return m;
}

double dice(const SegmentationMask& a, const SegmentationMask& b, Tissue tissue) {
  if (a.dims != b.dims) throw std::invalid_argument("dice: masks differ in dims");
  const auto label = static_cast<std::uint8_t>(tissue);
  Index na = 0, nb = 0, both = 0;
  for (std::size_t i = 0; i < a.labels.size(); ++i) {
    const bool ia = a.labels[i] == label, ib = b.labels[i] == label;
    na += ia;
    nb += ib;
    both += ia && ib;
  }
  if (na + nb == 0) return 1.0;
  return 2.0 * static_cast<double>(both) / static_cast<double>(na + nb);
}

Index TMap::valid_count() const { return std::count(valid.begin(), valid.end(), std::uint8_t{1}); }

double TMap::mean_abs() const {
  double s = 0.0;
  Index n = 0;
  for (std::size_t i = 0; i < valid.size(); ++i) {
    if (!valid[i]) continue;
    s += std::abs(static_cast<double>(t.data[i]));
    ++n;
  }
  return n > 0 ? s / static_cast<double>(n) : 0.0;
}

TMap t_map(const std::vector<Volume>& group_a, const std::vector<Volume>& group_b) {
  if (group_a.size() < 2 || group_b.size() < 2) throw std::invalid_argument("t_map: each group needs at least 2 volumes");
  const Dims3 dims = group_a.front().dims;
  for (const auto* g : {&group_a, &group_b})
    for (const auto& v : *g)
      if (v.dims != dims) throw std::invalid_argument("t_map: volumes differ in dims");
  TMap out;
  out.t = Volume(dims);
  out.valid.assign(static_cast<std::size_t>(out.t.voxels()), 0);
  out.n1 = static_cast<Index>(group_a.size());
  out.n2 = static_cast<Index>(group_b.size());
  auto moments = [](const std::vector<Volume>& g, std::size_t i, double& mean, double& var) {
    double s = 0.0;
    for (const auto& v : g) s += v.data[i];
    mean = s / static_cast<double>(g.size());
    double q = 0.0;
    for (const auto& v : g) q += (v.data[i] - mean) * (v.data[i] - mean);
    var = q / static_cast<double>(g.size() - 1);
  };
  for (std::size_t i = 0; i < out.valid.size(); ++i) {
    double ma, va, mb, vb;
    moments(group_a, i, ma, va);
    moments(group_b, i, mb, vb);
    if (va == 0.0 && vb == 0.0 && ma == mb) continue;
    const double se = std::sqrt(std::max(va, kVarianceFloor) / static_cast<double>(out.n1) +
                                std::max(vb, kVarianceFloor) / static_cast<double>(out.n2));
    out.t.data[i] = static_cast<float>((ma - mb) / se);
    out.valid[i] = 1;
  }
  return out;
}

double pearson(const TMap& a, const TMap& b) {
  if (a.t.dims != b.t.dims) throw std::invalid_argument("pearson: maps differ in dims");
  double sa = 0.0, sb = 0.0;
  Index n = 0;
  for (std::size_t i = 0; i < a.valid.size(); ++i) {
    if (!(a.valid[i] && b.valid[i])) continue;
    sa += a.t.data[i];
    sb += b.t.data[i];
    ++n;
  }
  if (n < 2) throw std::invalid_argument("pearson: fewer than 2 jointly valid voxels");
  const double ma = sa / static_cast<double>(n), mb = sb / static_cast<double>(n);
  double cab = 0.0, caa = 0.0, cbb = 0.0;
  for (std::size_t i = 0; i < a.valid.size(); ++i) {
    if (!(a.valid[i] && b.valid[i])) continue;
    const double da = a.t.data[i] - ma, db = b.t.data[i] - mb;
    cab += da * db;
    caa += da * da;
    cbb += db * db;
  }
  if (caa == 0.0 || cbb == 0.0) return 0.0;
  return cab / std::sqrt(caa * cbb);
}

}  // namespace vqvol
