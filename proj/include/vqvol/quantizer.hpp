#pragma once

#include "vqvol/tensor.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace vqvol {

struct CodebookOptions {
  /// EMA decay.
  double gamma = 0.99;
  /// Commitment weight.
  double beta = 0.25;
  /// Laplace smoothing constant for the EMA counts.
  double epsilon = 1e-5;
  /// When false the codebook is learned through the codebook-loss gradient.
  bool ema = true;
  friend bool operator==(const CodebookOptions&, const CodebookOptions&) = default;
};

/// K x D embedding space plus the EMA accumulators (counts N_i, sums m_i).
template <typename Scalar>
class Codebook {
 public:
  using Matrix = RowMatrixX<Scalar>;

  Codebook() = default;
  /// Codes drawn from N(0, 1) / sqrt(D); counts start at 1 and sums at the codes,
  /// so untouched entries keep their value under EMA updates.
  Codebook(Index codes, Index dim, std::uint64_t seed, CodebookOptions options = {});
  static Codebook from_codes(const Matrix& codes, CodebookOptions options = {});

  Index size() const { return codes_.dim(0); }
  Index dim() const { return codes_.dim(1); }
  const CodebookOptions& options() const { return options_; }

  /// [K, D] tensor; requires grad only in non-EMA mode.
  const Tensor<Scalar>& codes() const { return codes_; }
  Tensor<Scalar>& codes() { return codes_; }
  Eigen::Map<const Matrix> code_matrix() const;

  const VectorX<Scalar>& ema_counts() const { return ema_counts_; }
  const Matrix& ema_sums() const { return ema_sums_; }
  void set_ema_state(VectorX<Scalar> counts, Matrix sums);
  void set_codes(const Matrix& codes);

 private:
  Tensor<Scalar> codes_;
  VectorX<Scalar> ema_counts_;
  Matrix ema_sums_;
  CodebookOptions options_;
};

/// Code indices of one latent volume, z-major.
struct CodeGrid {
  std::array<Index, 3> dims{0, 0, 0};
  std::vector<std::uint32_t> indices;

  Index voxels() const { return dims[0] * dims[1] * dims[2]; }
  friend bool operator==(const CodeGrid&, const CodeGrid&) = default;
};

template <typename Scalar>
struct QuantizeResult {
  /// Forward value: the assigned codes. Backward: identity onto the features.
  Tensor<Scalar> quantized;
  /// Assigned codes gathered from the codebook tensor (carries codebook gradient).
  Tensor<Scalar> codes_used;
  /// One grid per batch item.
  std::vector<CodeGrid> grids;
  double mean_squared_distance = 0.0;
  double max_squared_distance = 0.0;
};

/// Assignments and code offsets held fixed so that the straight-through path
/// becomes an ordinary differentiable function (finite-difference checks).
template <typename Scalar>
struct FrozenQuantization {
  std::vector<CodeGrid> grids;
  /// codes_used - features at the reference point.
  VectorX<Scalar> offset;
};

/// Nearest-code assignment under Euclidean distance, ties to the lowest index.
/// features: [B, D, d, h, w].
template <typename Scalar>
QuantizeResult<Scalar> quantize(const Tensor<Scalar>& features, const Codebook<Scalar>& codebook,
                                const FrozenQuantization<Scalar>* frozen = nullptr);

template <typename Scalar>
FrozenQuantization<Scalar> freeze(const QuantizeResult<Scalar>& result,
                                  const Tensor<Scalar>& features);

/// Gathers codes for the given grids into a [B, D, d, h, w] tensor.
template <typename Scalar>
Tensor<Scalar> gather_codes(const Tensor<Scalar>& codes, const std::vector<CodeGrid>& grids);

/// ||sg(f) - e||^2 + beta ||f - sg(e)||^2, squared norms summed over D and
/// averaged over latent voxels. With `ema` set only the commitment term remains.
template <typename Scalar>
Tensor<Scalar> codebook_loss(const Tensor<Scalar>& features, const Tensor<Scalar>& codes_used,
                             double beta, bool ema);

/// One exponential-moving-average step over a batch of assigned features.
template <typename Scalar>
void ema_update(Codebook<Scalar>& codebook, const Tensor<Scalar>& features,
                const std::vector<CodeGrid>& grids);

struct CodebookStats {
  std::vector<Index> counts;
  double perplexity = 0.0;
};

CodebookStats codebook_stats(const std::vector<CodeGrid>& grids, Index codes);

extern template class Codebook<float>;
extern template class Codebook<double>;

}  // namespace vqvol
