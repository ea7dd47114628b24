#include "vqvol/conv.hpp"

#include "vqvol/ops.hpp"
#include "vqvol/parallel.hpp"

#include <array>
#include <stdexcept>

namespace vqvol {

using detail::make_result;
using detail::Node;

Index conv_output_extent(Index input, Index kernel, ConvGeometry g) {
  const Index span = input + 2 * g.padding - kernel;
  if (span < 0 || g.stride < 1) return 0;
  return span / g.stride + 1;
}

Index conv_transpose_output_extent(Index input, Index kernel, ConvGeometry g) {
  return (input - 1) * g.stride - 2 * g.padding + kernel;
}

namespace {

using Dims = std::array<Index, 3>;

// Patch matrix [C*k^3, grid voxels] of a single-item image [C, image dims].
template <typename Scalar>
void im2col(const Scalar* image, Index channels, Dims image_dims, Dims grid, Index k,
            ConvGeometry g, RowMatrixX<Scalar>& cols) {
  const Index grid_vox = grid[0] * grid[1] * grid[2];
  cols.resize(channels * k * k * k, grid_vox);
  const Index d = image_dims[0], h = image_dims[1], w = image_dims[2];
  for (Index c = 0; c < channels; ++c)
    for (Index kz = 0; kz < k; ++kz)
      for (Index ky = 0; ky < k; ++ky)
        for (Index kx = 0; kx < k; ++kx) {
          Scalar* row = cols.row(((c * k + kz) * k + ky) * k + kx).data();
          Index col = 0;
          for (Index oz = 0; oz < grid[0]; ++oz) {
            const Index z = oz * g.stride - g.padding + kz;
            const bool zin = z >= 0 && z < d;
            for (Index oy = 0; oy < grid[1]; ++oy) {
              const Index y = oy * g.stride - g.padding + ky;
              const bool yin = zin && y >= 0 && y < h;
              const Scalar* line = yin ? image + ((c * d + z) * h + y) * w : nullptr;
              for (Index ox = 0; ox < grid[2]; ++ox, ++col) {
                const Index x = ox * g.stride - g.padding + kx;
                row[col] = (yin && x >= 0 && x < w) ? line[x] : Scalar(0);
              }
            }
          }
        }
}

// Adjoint of im2col: scatter-add patch columns back into an image.
template <typename Scalar>
void col2im(const RowMatrixX<Scalar>& cols, Index channels, Dims image_dims, Dims grid, Index k,
            ConvGeometry g, Scalar* image) {
  const Index d = image_dims[0], h = image_dims[1], w = image_dims[2];
  for (Index c = 0; c < channels; ++c)
    for (Index kz = 0; kz < k; ++kz)
      for (Index ky = 0; ky < k; ++ky)
        for (Index kx = 0; kx < k; ++kx) {
          const Scalar* row = cols.row(((c * k + kz) * k + ky) * k + kx).data();
          Index col = 0;
          for (Index oz = 0; oz < grid[0]; ++oz) {
            const Index z = oz * g.stride - g.padding + kz;
            const bool zin = z >= 0 && z < d;
            for (Index oy = 0; oy < grid[1]; ++oy) {
              const Index y = oy * g.stride - g.padding + ky;
              const bool yin = zin && y >= 0 && y < h;
              Scalar* line = yin ? image + ((c * d + z) * h + y) * w : nullptr;
              for (Index ox = 0; ox < grid[2]; ++ox, ++col) {
                const Index x = ox * g.stride - g.padding + kx;
                if (yin && x >= 0 && x < w) line[x] += row[col];
              }
            }
          }
        }
}

template <typename Scalar>
using ConstRowMap = Eigen::Map<const RowMatrixX<Scalar>>;
template <typename Scalar>
using RowMap = Eigen::Map<RowMatrixX<Scalar>>;

struct ConvShapes {
  Index batch, cin, cout, k;
  Dims in, out;
};

void check_weight(const Shape& w, const char* op) {
  if (w.size() != 5 || w[2] != w[3] || w[3] != w[4] || w[2] < 1) {
    throw std::invalid_argument(std::string(op) + ": weight must be [C, C, k, k, k], got " +
                                to_string(w));
  }
}

template <typename Scalar>
void check_bias(const Tensor<Scalar>& bias, Index channels, const char* op) {
  if (bias.defined() && (bias.shape() != Shape{channels})) {
    throw std::invalid_argument(std::string(op) + ": bias shape " + to_string(bias.shape()) +
                                " does not match " + std::to_string(channels) + " channels");
  }
}

}  // namespace

template <typename Scalar>
Tensor<Scalar> conv3d(const Tensor<Scalar>& input, const Tensor<Scalar>& weight,
                      const Tensor<Scalar>& bias, ConvGeometry geometry) {
  require_activation(input.shape(), "conv3d");
  check_weight(weight.shape(), "conv3d");
  const Shape& is = input.shape();
  const Shape& ws = weight.shape();
  if (ws[1] != is[1]) {
    throw std::invalid_argument("conv3d: channel mismatch, input " + to_string(is) + " weight " +
                                to_string(ws));
  }
  check_bias(bias, ws[0], "conv3d");
  ConvShapes sh{is[0], is[1], ws[0], ws[2], {is[2], is[3], is[4]}, {}};
  for (int a = 0; a < 3; ++a) {
    sh.out[static_cast<std::size_t>(a)] = conv_output_extent(sh.in[static_cast<std::size_t>(a)], sh.k, geometry);
    if (sh.out[static_cast<std::size_t>(a)] <= 0) {
      throw std::invalid_argument("conv3d: non-positive output size for input " + to_string(is) +
                                  " kernel " + std::to_string(sh.k));
    }
  }
  const Index in_vox = sh.in[0] * sh.in[1] * sh.in[2];
  const Index out_vox = sh.out[0] * sh.out[1] * sh.out[2];
  const Index patch = sh.cin * sh.k * sh.k * sh.k;

  VectorX<Scalar> out(sh.batch * sh.cout * out_vox);
  {
    ConstRowMap<Scalar> wmat(weight.values().data(), sh.cout, patch);
    parallel_for(sh.batch, [&](Index n) {
      RowMatrixX<Scalar> cols;
      im2col(input.values().data() + n * sh.cin * in_vox, sh.cin, sh.in, sh.out, sh.k, geometry,
             cols);
      RowMap<Scalar> o(out.data() + n * sh.cout * out_vox, sh.cout, out_vox);
      o.noalias() = wmat * cols;
      if (bias.defined()) o.colwise() += bias.values();
    });
  }

  auto in_n = input.node();
  auto w_n = weight.node();
  auto b_n = bias.defined() ? bias.node() : nullptr;
  std::vector<std::shared_ptr<Node<Scalar>>> inputs{in_n, w_n};
  if (b_n) inputs.push_back(b_n);
  return make_result<Scalar>(
      Shape{sh.batch, sh.cout, sh.out[0], sh.out[1], sh.out[2]}, std::move(out), std::move(inputs),
      [in_n, w_n, b_n, sh, geometry, in_vox, out_vox, patch](Node<Scalar>& self) {
        ConstRowMap<Scalar> wmat(w_n->value.data(), sh.cout, patch);
        std::vector<RowMatrixX<Scalar>> dw(static_cast<std::size_t>(sh.batch));
        VectorX<Scalar> dx;
        if (in_n->requires_grad) dx = VectorX<Scalar>::Zero(in_n->value.size());
        parallel_for(sh.batch, [&](Index n) {
          ConstRowMap<Scalar> g(self.grad.data() + n * sh.cout * out_vox, sh.cout, out_vox);
          if (w_n->requires_grad) {
            RowMatrixX<Scalar> cols;
            im2col(in_n->value.data() + n * sh.cin * in_vox, sh.cin, sh.in, sh.out, sh.k,
                   geometry, cols);
            dw[static_cast<std::size_t>(n)].noalias() = g * cols.transpose();
          }
          if (in_n->requires_grad) {
            RowMatrixX<Scalar> dcols = wmat.transpose() * g;
            col2im(dcols, sh.cin, sh.in, sh.out, sh.k, geometry, dx.data() + n * sh.cin * in_vox);
          }
        });
        if (w_n->requires_grad) {
          RowMatrixX<Scalar> total = dw[0];
          for (std::size_t n = 1; n < dw.size(); ++n) total += dw[n];
          w_n->accumulate(Eigen::Map<const VectorX<Scalar>>(total.data(), total.size()));
        }
        if (in_n->requires_grad) in_n->accumulate(dx);
        if (b_n && b_n->requires_grad) {
          VectorX<Scalar> db = VectorX<Scalar>::Zero(sh.cout);
          for (Index n = 0; n < sh.batch; ++n) {
            db += ConstRowMap<Scalar>(self.grad.data() + n * sh.cout * out_vox, sh.cout, out_vox)
                      .rowwise()
                      .sum();
          }
          b_n->accumulate(db);
        }
      },
      "conv3d");
}

template <typename Scalar>
Tensor<Scalar> conv_transpose3d(const Tensor<Scalar>& input, const Tensor<Scalar>& weight,
                                const Tensor<Scalar>& bias, ConvGeometry geometry) {
  require_activation(input.shape(), "conv_transpose3d");
  check_weight(weight.shape(), "conv_transpose3d");
  const Shape& is = input.shape();
  const Shape& ws = weight.shape();
  if (ws[0] != is[1]) {
    throw std::invalid_argument("conv_transpose3d: channel mismatch, input " + to_string(is) +
                                " weight " + to_string(ws));
  }
  check_bias(bias, ws[1], "conv_transpose3d");
  ConvShapes sh{is[0], is[1], ws[1], ws[2], {is[2], is[3], is[4]}, {}};
  for (int a = 0; a < 3; ++a) {
    const auto ai = static_cast<std::size_t>(a);
    sh.out[ai] = conv_transpose_output_extent(sh.in[ai], sh.k, geometry);
    if (sh.out[ai] <= 0 || conv_output_extent(sh.out[ai], sh.k, geometry) != sh.in[ai]) {
      throw std::invalid_argument("conv_transpose3d: invalid geometry for input " + to_string(is) +
                                  " kernel " + std::to_string(sh.k));
    }
  }
  const Index in_vox = sh.in[0] * sh.in[1] * sh.in[2];
  const Index out_vox = sh.out[0] * sh.out[1] * sh.out[2];
  const Index patch = sh.cout * sh.k * sh.k * sh.k;

  VectorX<Scalar> out = VectorX<Scalar>::Zero(sh.batch * sh.cout * out_vox);
  {
    ConstRowMap<Scalar> wmat(weight.values().data(), sh.cin, patch);
    parallel_for(sh.batch, [&](Index n) {
      ConstRowMap<Scalar> x(input.values().data() + n * sh.cin * in_vox, sh.cin, in_vox);
      RowMatrixX<Scalar> cols = wmat.transpose() * x;
      Scalar* o = out.data() + n * sh.cout * out_vox;
      col2im(cols, sh.cout, sh.out, sh.in, sh.k, geometry, o);
      if (bias.defined()) RowMap<Scalar>(o, sh.cout, out_vox).colwise() += bias.values();
    });
  }

  auto in_n = input.node();
  auto w_n = weight.node();
  auto b_n = bias.defined() ? bias.node() : nullptr;
  std::vector<std::shared_ptr<Node<Scalar>>> inputs{in_n, w_n};
  if (b_n) inputs.push_back(b_n);
  return make_result<Scalar>(
      Shape{sh.batch, sh.cout, sh.out[0], sh.out[1], sh.out[2]}, std::move(out), std::move(inputs),
      [in_n, w_n, b_n, sh, geometry, in_vox, out_vox, patch](Node<Scalar>& self) {
        ConstRowMap<Scalar> wmat(w_n->value.data(), sh.cin, patch);
        std::vector<RowMatrixX<Scalar>> dw(static_cast<std::size_t>(sh.batch));
        VectorX<Scalar> dx;
        if (in_n->requires_grad) dx = VectorX<Scalar>::Zero(in_n->value.size());
        parallel_for(sh.batch, [&](Index n) {
          RowMatrixX<Scalar> gcols;
          im2col(self.grad.data() + n * sh.cout * out_vox, sh.cout, sh.out, sh.in, sh.k, geometry,
                 gcols);
          if (in_n->requires_grad) {
            RowMap<Scalar>(dx.data() + n * sh.cin * in_vox, sh.cin, in_vox).noalias() =
                wmat * gcols;
          }
          if (w_n->requires_grad) {
            ConstRowMap<Scalar> x(in_n->value.data() + n * sh.cin * in_vox, sh.cin, in_vox);
            dw[static_cast<std::size_t>(n)].noalias() = x * gcols.transpose();
          }
        });
        if (w_n->requires_grad) {
          RowMatrixX<Scalar> total = dw[0];
          for (std::size_t n = 1; n < dw.size(); ++n) total += dw[n];
          w_n->accumulate(Eigen::Map<const VectorX<Scalar>>(total.data(), total.size()));
        }
        if (in_n->requires_grad) in_n->accumulate(dx);
        if (b_n && b_n->requires_grad) {
          VectorX<Scalar> db = VectorX<Scalar>::Zero(sh.cout);
          for (Index n = 0; n < sh.batch; ++n) {
            db += ConstRowMap<Scalar>(self.grad.data() + n * sh.cout * out_vox, sh.cout, out_vox)
                      .rowwise()
                      .sum();
          }
          b_n->accumulate(db);
        }
      },
      "conv_transpose3d");
}

template Tensor<float> conv3d(const Tensor<float>&, const Tensor<float>&, const Tensor<float>&,
                              ConvGeometry);
template Tensor<double> conv3d(const Tensor<double>&, const Tensor<double>&,
                               const Tensor<double>&, ConvGeometry);
template Tensor<float> conv_transpose3d(const Tensor<float>&, const Tensor<float>&,
                                        const Tensor<float>&, ConvGeometry);
template Tensor<double> conv_transpose3d(const Tensor<double>&, const Tensor<double>&,
                                         const Tensor<double>&, ConvGeometry);

}  // namespace vqvol
