#include "vqvol/quantizer.hpp"

#include "vqvol/ops.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace vqvol {

template <typename Scalar>
Codebook<Scalar>::Codebook(Index codes, Index dim, std::uint64_t seed, CodebookOptions options)
    : options_(options) {
  if (codes < 1 || dim < 1) throw std::invalid_argument("codebook: K and D must be positive");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double scale = 1.0 / std::sqrt(static_cast<double>(dim));
  Matrix init(codes, dim);
  for (Index i = 0; i < init.size(); ++i) init.data()[i] = static_cast<Scalar>(normal(rng) * scale);
  codes_ = Tensor<Scalar>(Shape{codes, dim}, Eigen::Map<const VectorX<Scalar>>(init.data(), init.size()),
                          !options.ema);
  ema_counts_ = VectorX<Scalar>::Ones(codes);
  ema_sums_ = init;
}

template <typename Scalar>
Codebook<Scalar> Codebook<Scalar>::from_codes(const Matrix& codes, CodebookOptions options) {
  Codebook cb;
  cb.options_ = options;
  cb.codes_ = Tensor<Scalar>(Shape{codes.rows(), codes.cols()},
                             Eigen::Map<const VectorX<Scalar>>(codes.data(), codes.size()),
                             !options.ema);
  cb.ema_counts_ = VectorX<Scalar>::Ones(codes.rows());
  cb.ema_sums_ = codes;
  return cb;
}

template <typename Scalar>
Eigen::Map<const typename Codebook<Scalar>::Matrix> Codebook<Scalar>::code_matrix() const {
  return Eigen::Map<const Matrix>(codes_.values().data(), size(), dim());
}

template <typename Scalar>
void Codebook<Scalar>::set_ema_state(VectorX<Scalar> counts, Matrix sums) {
  if (counts.size() != size() || sums.rows() != size() || sums.cols() != dim()) {
    throw std::invalid_argument("codebook: EMA state shape mismatch");
  }
  if ((counts.array() < Scalar(0)).any()) throw std::invalid_argument("codebook: negative EMA count");
  ema_counts_ = std::move(counts);
  ema_sums_ = std::move(sums);
}

template <typename Scalar>
void Codebook<Scalar>::set_codes(const Matrix& codes) {
  if (codes.rows() != size() || codes.cols() != dim()) {
    throw std::invalid_argument("codebook: code matrix shape mismatch");
  }
  codes_.mutable_values() = Eigen::Map<const VectorX<Scalar>>(codes.data(), codes.size());
}

namespace {

void check_features(const Shape& fs, Index dim) {
  require_activation(fs, "quantize");
  if (fs[1] != dim) {
    throw std::invalid_argument("quantize: feature depth " + std::to_string(fs[1]) +
                                " does not match codebook dimension " + std::to_string(dim));
  }
}

}  // namespace

template <typename Scalar>
Tensor<Scalar> gather_codes(const Tensor<Scalar>& codes, const std::vector<CodeGrid>& grids) {
  if (grids.empty()) throw std::invalid_argument("gather_codes: no grids");
  const Index K = codes.dim(0);
  const Index D = codes.dim(1);
  const auto dims = grids.front().dims;
  const Index vox = grids.front().voxels();
  const Index batch = static_cast<Index>(grids.size());
  for (const auto& g : grids) {
    if (g.dims != dims || static_cast<Index>(g.indices.size()) != vox) {
      throw std::invalid_argument("gather_codes: inconsistent grid dims");
    }
    for (auto idx : g.indices) {
      if (static_cast<Index>(idx) >= K) {
        throw std::out_of_range("gather_codes: code index " + std::to_string(idx) + " >= K = " +
                                std::to_string(K));
      }
    }
  }
  const auto& table = codes.values();
  VectorX<Scalar> out(batch * D * vox);
  for (Index n = 0; n < batch; ++n) {
    const auto& idx = grids[static_cast<std::size_t>(n)].indices;
    for (Index d = 0; d < D; ++d) {
      Scalar* dst = out.data() + (n * D + d) * vox;
      for (Index v = 0; v < vox; ++v) dst[v] = table(static_cast<Index>(idx[static_cast<std::size_t>(v)]) * D + d);
    }
  }
  auto cn = codes.node();
  return detail::make_result<Scalar>(
      Shape{batch, D, dims[0], dims[1], dims[2]}, std::move(out), {cn},
      [cn, grids, D, vox](detail::Node<Scalar>& self) {
        VectorX<Scalar> g = VectorX<Scalar>::Zero(cn->value.size());
        for (std::size_t n = 0; n < grids.size(); ++n) {
          const auto& idx = grids[n].indices;
          for (Index d = 0; d < D; ++d) {
            const Scalar* src = self.grad.data() + (static_cast<Index>(n) * D + d) * vox;
            for (Index v = 0; v < vox; ++v) g(static_cast<Index>(idx[static_cast<std::size_t>(v)]) * D + d) += src[v];
          }
        }
        cn->accumulate(g);
      },
      "gather_codes");
}

template <typename Scalar>
QuantizeResult<Scalar> quantize(const Tensor<Scalar>& features, const Codebook<Scalar>& codebook,
                                const FrozenQuantization<Scalar>* frozen) {
  const Shape& fs = features.shape();
  check_features(fs, codebook.dim());
  const Index batch = fs[0];
  const Index D = fs[1];
  const Index vox = fs[2] * fs[3] * fs[4];
  const Index K = codebook.size();
  const auto codes = codebook.code_matrix();
  const auto& f = features.values();

  QuantizeResult<Scalar> result;
  if (frozen) {
    result.grids = frozen->grids;
  } else {
    result.grids.resize(static_cast<std::size_t>(batch));
    double total = 0.0;
    double worst = 0.0;
    std::vector<double> vec(static_cast<std::size_t>(D));
    for (Index n = 0; n < batch; ++n) {
      CodeGrid& grid = result.grids[static_cast<std::size_t>(n)];
      grid.dims = {fs[2], fs[3], fs[4]};
      grid.indices.resize(static_cast<std::size_t>(vox));
      for (Index v = 0; v < vox; ++v) {
        for (Index d = 0; d < D; ++d) vec[static_cast<std::size_t>(d)] = static_cast<double>(f((n * D + d) * vox + v));
        Index best = 0;
        double best_dist = std::numeric_limits<double>::infinity();
        for (Index k = 0; k < K; ++k) {
          double dist = 0.0;
          for (Index d = 0; d < D; ++d) {
            const double diff = vec[static_cast<std::size_t>(d)] - static_cast<double>(codes(k, d));
            dist += diff * diff;
          }
          if (dist < best_dist) {
            best_dist = dist;
            best = k;
          }
        }
        grid.indices[static_cast<std::size_t>(v)] = static_cast<std::uint32_t>(best);
        total += best_dist;
        worst = std::max(worst, best_dist);
      }
    }
    result.mean_squared_distance = batch * vox > 0 ? total / static_cast<double>(batch * vox) : 0.0;
    result.max_squared_distance = worst;
  }

  result.codes_used = gather_codes(codebook.codes(), result.grids);
  if (frozen) {
    if (frozen->offset.size() != features.size()) {
      throw std::invalid_argument("quantize: frozen offset does not match features");
    }
    result.quantized = features + Tensor<Scalar>(fs, frozen->offset);
  } else {
    result.quantized = straight_through(features, result.codes_used);
  }
  return result;
}

template <typename Scalar>
FrozenQuantization<Scalar> freeze(const QuantizeResult<Scalar>& result,
                                  const Tensor<Scalar>& features) {
  return {result.grids, result.codes_used.values() - features.values()};
}

template <typename Scalar>
Tensor<Scalar> codebook_loss(const Tensor<Scalar>& features, const Tensor<Scalar>& codes_used,
                             double beta, bool ema) {
  detail::check_same_shape(features.shape(), codes_used.shape(), "codebook_loss");
  const Shape& fs = features.shape();
  const Index latent_voxels = fs[0] * fs[2] * fs[3] * fs[4];
  const Scalar inv = Scalar(1) / static_cast<Scalar>(latent_voxels);
  Tensor<Scalar> commitment = sum(square(features - stop_gradient(codes_used))) *
                              static_cast<Scalar>(beta * static_cast<double>(inv));
  if (ema) return commitment;
  Tensor<Scalar> codebook_term = sum(square(stop_gradient(features) - codes_used)) * inv;
  return codebook_term + commitment;
}

template <typename Scalar>
void ema_update(Codebook<Scalar>& codebook, const Tensor<Scalar>& features,
                const std::vector<CodeGrid>& grids) {
  const Shape& fs = features.shape();
  check_features(fs, codebook.dim());
  const Index K = codebook.size();
  const Index D = codebook.dim();
  const Index vox = fs[2] * fs[3] * fs[4];
  if (static_cast<Index>(grids.size()) != fs[0]) {
    throw std::invalid_argument("ema_update: grid count does not match batch");
  }
  Eigen::VectorXd assigned = Eigen::VectorXd::Zero(K);
  Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(K, D);
  const auto& f = features.values();
  for (std::size_t n = 0; n < grids.size(); ++n) {
    const auto& idx = grids[n].indices;
    if (static_cast<Index>(idx.size()) != vox) throw std::invalid_argument("ema_update: grid size mismatch");
    for (Index v = 0; v < vox; ++v) {
      const Index k = idx[static_cast<std::size_t>(v)];
      if (k >= K) throw std::out_of_range("ema_update: code index out of range");
      assigned(k) += 1.0;
      for (Index d = 0; d < D; ++d) sums(k, d) += static_cast<double>(f((static_cast<Index>(n) * D + d) * vox + v));
    }
  }

  const double gamma = codebook.options().gamma;
  const double eps = codebook.options().epsilon;
  Eigen::VectorXd counts = codebook.ema_counts().template cast<double>();
  Eigen::MatrixXd m = codebook.ema_sums().template cast<double>();
  counts = counts * gamma + assigned * (1.0 - gamma);
  m = m * gamma + sums * (1.0 - gamma);

  // Laplace smoothing keeps the total mass while lifting empty clusters off zero.
  const double total = counts.sum();
  const Eigen::VectorXd smoothed =
      (counts.array() + eps) / (total + static_cast<double>(K) * eps) * total;

  typename Codebook<Scalar>::Matrix codes = codebook.code_matrix();
  for (Index k = 0; k < K; ++k) {
    if (smoothed(k) > 0.0) codes.row(k) = (m.row(k) / smoothed(k)).template cast<Scalar>();
  }
  codebook.set_codes(codes);
  codebook.set_ema_state(counts.cast<Scalar>(), m.cast<Scalar>());
}

CodebookStats codebook_stats(const std::vector<CodeGrid>& grids, Index codes) {
  CodebookStats stats;
  stats.counts.assign(static_cast<std::size_t>(codes), 0);
  Index total = 0;
  for (const auto& g : grids) {
    for (auto idx : g.indices) {
      if (static_cast<Index>(idx) >= codes) throw std::out_of_range("codebook_stats: index >= K");
      ++stats.counts[idx];
      ++total;
    }
  }
  double entropy = 0.0;
  for (Index c : stats.counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / static_cast<double>(total);
    entropy -= p * std::log(p);
  }
  stats.perplexity = total > 0 ? std::exp(entropy) : 0.0;
  return stats;
}

template class Codebook<float>;
template class Codebook<double>;

#define VQVOL_INSTANTIATE_QUANTIZER(S)                                                        \
  template Tensor<S> gather_codes(const Tensor<S>&, const std::vector<CodeGrid>&);           \
  template QuantizeResult<S> quantize(const Tensor<S>&, const Codebook<S>&,                  \
                                      const FrozenQuantization<S>*);                         \
  template FrozenQuantization<S> freeze(const QuantizeResult<S>&, const Tensor<S>&);         \
  template Tensor<S> codebook_loss(const Tensor<S>&, const Tensor<S>&, double, bool);        \
  template void ema_update(Codebook<S>&, const Tensor<S>&, const std::vector<CodeGrid>&);

VQVOL_INSTANTIATE_QUANTIZER(float)
VQVOL_INSTANTIATE_QUANTIZER(double)

}  // namespace vqvol
