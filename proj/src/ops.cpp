#include "vqvol/ops.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace vqvol {

using detail::make_result;
using detail::Node;

std::array<Index, 3> spatial_dims(const Shape& shape) {
  require_activation(shape, "spatial_dims");
  return {shape[2], shape[3], shape[4]};
}

void require_activation(const Shape& shape, const char* op) {
  if (shape.size() != 5) {
    throw std::invalid_argument(std::string(op) + ": expected [B,C,D,H,W] activation, got " +
                                to_string(shape));
  }
}

namespace {

template <typename Scalar>
Tensor<Scalar> binary_same(BinaryOp op, const Tensor<Scalar>& a, const Tensor<Scalar>& b) {
  using V = VectorX<Scalar>;
  const auto& av = a.values();
  const auto& bv = b.values();
  V out;
  switch (op) {
    case BinaryOp::add: out = av + bv; break;
    case BinaryOp::sub: out = av - bv; break;
    case BinaryOp::mul: out = av.cwiseProduct(bv); break;
    case BinaryOp::div: out = av.cwiseQuotient(bv); break;
  }
  auto an = a.node();
  auto bn = b.node();
  return make_result<Scalar>(
      a.shape(), std::move(out), {an, bn},
      [op, an, bn](Node<Scalar>& self) {
        const V& g = self.grad;
        switch (op) {
          case BinaryOp::add:
            an->accumulate(g);
            bn->accumulate(g);
            break;
          case BinaryOp::sub:
            an->accumulate(g);
            bn->accumulate(-g);
            break;
          case BinaryOp::mul:
            an->accumulate(g.cwiseProduct(bn->value));
            bn->accumulate(g.cwiseProduct(an->value));
            break;
          case BinaryOp::div:
            an->accumulate(g.cwiseQuotient(bn->value));
            bn->accumulate(-(g.array() * an->value.array() / bn->value.array().square()).matrix());
            break;
        }
      },
      "binary");
}

// `big` op `one` where `one` has a single element; `swapped` means one op big.
template <typename Scalar>
Tensor<Scalar> binary_broadcast(BinaryOp op, const Tensor<Scalar>& big, const Tensor<Scalar>& one,
                                bool swapped) {
  using V = VectorX<Scalar>;
  const auto& x = big.values();
  const Scalar s = one.values()(0);
  V out;
  switch (op) {
    case BinaryOp::add: out = (x.array() + s).matrix(); break;
    case BinaryOp::sub:
      if (swapped) out = (s - x.array()).matrix();
      else out = (x.array() - s).matrix();
      break;
    case BinaryOp::mul: out = x * s; break;
    case BinaryOp::div:
      if (swapped) out = (s / x.array()).matrix();
      else out = x / s;
      break;
  }
  auto xn = big.node();
  auto sn = one.node();
  return make_result<Scalar>(
      big.shape(), std::move(out), {xn, sn},
      [op, xn, sn, swapped](Node<Scalar>& self) {
        const V& g = self.grad;
        const Scalar sv = sn->value(0);
        V gs(1);
        switch (op) {
          case BinaryOp::add:
            xn->accumulate(g);
            gs(0) = g.sum();
            break;
          case BinaryOp::sub:
            xn->accumulate(swapped ? V(-g) : g);
            gs(0) = swapped ? g.sum() : -g.sum();
            break;
          case BinaryOp::mul:
            xn->accumulate(g * sv);
            gs(0) = g.dot(xn->value);
            break;
          case BinaryOp::div:
            if (swapped) {
              // s / x
              xn->accumulate((-g.array() * sv / xn->value.array().square()).matrix());
              gs(0) = (g.array() / xn->value.array()).sum();
            } else {
              xn->accumulate(g / sv);
              gs(0) = -g.dot(xn->value) / (sv * sv);
            }
            break;
        }
        sn->accumulate(gs);
      },
      "binary_broadcast");
}

}  // namespace

template <typename Scalar>
Tensor<Scalar> elementwise(BinaryOp op, const Tensor<Scalar>& a, const Tensor<Scalar>& b) {
  if (a.shape() == b.shape()) return binary_same(op, a, b);
  if (b.size() == 1) return binary_broadcast(op, a, b, false);
  if (a.size() == 1) return binary_broadcast(op, b, a, true);
  detail::check_same_shape(a.shape(), b.shape(), "elementwise");
  return {};
}

template <typename Scalar>
Tensor<Scalar> elementwise(BinaryOp op, const Tensor<Scalar>& a, Scalar b) {
  return elementwise(op, a, Tensor<Scalar>::scalar(b));
}

template <typename Scalar>
Tensor<Scalar> unary(UnaryOp op, const Tensor<Scalar>& a) {
  using V = VectorX<Scalar>;
  const auto x = a.values().array();
  V out;
  switch (op) {
    case UnaryOp::neg: out = -a.values(); break;
    case UnaryOp::abs: out = x.abs().matrix(); break;
    case UnaryOp::relu: out = x.max(Scalar(0)).matrix(); break;
    case UnaryOp::exp: out = x.exp().matrix(); break;
    case UnaryOp::log: out = x.log().matrix(); break;
    case UnaryOp::sigmoid: out = (Scalar(1) / (Scalar(1) + (-x).exp())).matrix(); break;
    case UnaryOp::softplus:
      out = (x.max(Scalar(0)) + (-x.abs()).exp().log1p()).matrix();
      break;
    case UnaryOp::square: out = x.square().matrix(); break;
    case UnaryOp::sqrt: out = x.sqrt().matrix(); break;
    case UnaryOp::clamp01: out = x.max(Scalar(0)).min(Scalar(1)).matrix(); break;
  }
  auto an = a.node();
  return make_result<Scalar>(
      a.shape(), std::move(out), {an},
      [op, an](Node<Scalar>& self) {
        const auto g = self.grad.array();
        const auto x = an->value.array();
        const auto y = self.value.array();
        switch (op) {
          case UnaryOp::neg: an->accumulate(-self.grad); break;
          case UnaryOp::abs: an->accumulate((g * x.sign()).matrix()); break;
          case UnaryOp::relu:
            an->accumulate((x > Scalar(0)).select(g, Scalar(0)).matrix());
            break;
          case UnaryOp::exp: an->accumulate((g * y).matrix()); break;
          case UnaryOp::log: an->accumulate((g / x).matrix()); break;
          case UnaryOp::sigmoid: an->accumulate((g * y * (Scalar(1) - y)).matrix()); break;
          case UnaryOp::softplus:
            an->accumulate((g / (Scalar(1) + (-x).exp())).matrix());
            break;
          case UnaryOp::square: an->accumulate((Scalar(2) * g * x).matrix()); break;
          case UnaryOp::sqrt: an->accumulate((g * Scalar(0.5) / y).matrix()); break;
          case UnaryOp::clamp01:
            an->accumulate((x > Scalar(0) && x < Scalar(1)).select(g, Scalar(0)).matrix());
            break;
        }
      },
      "unary");
}

template <typename Scalar>
Tensor<Scalar> pow(const Tensor<Scalar>& a, Scalar exponent) {
  auto an = a.node();
  VectorX<Scalar> out = a.values().array().pow(exponent).matrix();
  return make_result<Scalar>(
      a.shape(), std::move(out), {an},
      [an, exponent](Node<Scalar>& self) {
        an->accumulate(
            (self.grad.array() * exponent * an->value.array().pow(exponent - Scalar(1))).matrix());
      },
      "pow");
}

template <typename Scalar>
Tensor<Scalar> leaky_relu(const Tensor<Scalar>& a, Scalar slope) {
  auto an = a.node();
  const auto x = a.values().array();
  VectorX<Scalar> out = (x > Scalar(0)).select(x, x * slope).matrix();
  return make_result<Scalar>(
      a.shape(), std::move(out), {an},
      [an, slope](Node<Scalar>& self) {
        const auto g = self.grad.array();
        an->accumulate((an->value.array() > Scalar(0)).select(g, g * slope).matrix());
      },
      "leaky_relu");
}

template <typename Scalar>
Tensor<Scalar> reduce(ReduceOp op, const Tensor<Scalar>& a, const std::vector<Index>& axes_in) {
  const Shape& in_shape = a.shape();
  const Index rank = static_cast<Index>(in_shape.size());
  std::vector<bool> reduced(static_cast<std::size_t>(rank), axes_in.empty());
  for (Index ax : axes_in) {
    Index axis = ax < 0 ? ax + rank : ax;
    if (axis < 0 || axis >= rank) {
      throw std::invalid_argument("reduce: axis " + std::to_string(ax) + " invalid for shape " +
                                  to_string(in_shape));
    }
    reduced[static_cast<std::size_t>(axis)] = true;
  }
  Shape out_shape;
  Index reduced_count = 1;
  for (Index i = 0; i < rank; ++i) {
    if (reduced[static_cast<std::size_t>(i)]) {
      reduced_count *= in_shape[static_cast<std::size_t>(i)];
    } else {
      out_shape.push_back(in_shape[static_cast<std::size_t>(i)]);
    }
  }

  // Map every input element to its output slot.
  const Index n = a.size();
  std::vector<Index> target(static_cast<std::size_t>(n));
  {
    std::vector<Index> counter(static_cast<std::size_t>(rank), 0);
    for (Index i = 0; i < n; ++i) {
      Index t = 0;
      for (Index d = 0; d < rank; ++d) {
        if (!reduced[static_cast<std::size_t>(d)]) {
          t = t * in_shape[static_cast<std::size_t>(d)] + counter[static_cast<std::size_t>(d)];
        }
      }
      target[static_cast<std::size_t>(i)] = t;
      for (Index d = rank - 1; d >= 0; --d) {
        if (++counter[static_cast<std::size_t>(d)] < in_shape[static_cast<std::size_t>(d)]) break;
        counter[static_cast<std::size_t>(d)] = 0;
      }
    }
  }

  const Scalar scale = op == ReduceOp::mean && reduced_count > 0
                           ? Scalar(1) / static_cast<Scalar>(reduced_count)
                           : Scalar(1);
  VectorX<Scalar> out = VectorX<Scalar>::Zero(element_count(out_shape));
  const auto& x = a.values();
  for (Index i = 0; i < n; ++i) out(target[static_cast<std::size_t>(i)]) += x(i);
  out *= scale;

  auto an = a.node();
  return make_result<Scalar>(
      std::move(out_shape), std::move(out), {an},
      [an, target = std::move(target), scale](Node<Scalar>& self) {
        VectorX<Scalar> g(an->value.size());
        for (Index i = 0; i < g.size(); ++i) g(i) = self.grad(target[static_cast<std::size_t>(i)]) * scale;
        an->accumulate(g);
      },
      op == ReduceOp::sum ? "sum" : "mean");
}

template <typename Scalar>
Tensor<Scalar> reshape(const Tensor<Scalar>& a, Shape shape) {
  if (element_count(shape) != a.size()) {
    throw std::invalid_argument("reshape: cannot view " + to_string(a.shape()) + " as " +
                                to_string(shape));
  }
  auto an = a.node();
  return make_result<Scalar>(
      std::move(shape), a.values(), {an},
      [an](Node<Scalar>& self) { an->accumulate(self.grad); }, "reshape");
}

template <typename Scalar>
Tensor<Scalar> stop_gradient(const Tensor<Scalar>& a) {
  return make_result<Scalar>(a.shape(), a.values(), {}, nullptr, "stop_gradient");
}

template <typename Scalar>
Tensor<Scalar> straight_through(const Tensor<Scalar>& source, const Tensor<Scalar>& replacement) {
  detail::check_same_shape(source.shape(), replacement.shape(), "straight_through");
  auto sn = source.node();
  return make_result<Scalar>(
      source.shape(), replacement.values(), {sn},
      [sn](Node<Scalar>& self) { sn->accumulate(self.grad); }, "straight_through");
}

namespace {

// Shared implementation for ops that are pure index gathers: out[i] = in[src[i]].
template <typename Scalar>
Tensor<Scalar> gather_op(const Tensor<Scalar>& a, Shape out_shape, std::vector<Index> src,
                         const char* name) {
  const auto& x = a.values();
  VectorX<Scalar> out(static_cast<Index>(src.size()));
  for (std::size_t i = 0; i < src.size(); ++i) out(static_cast<Index>(i)) = x(src[i]);
  auto an = a.node();
  return make_result<Scalar>(
      std::move(out_shape), std::move(out), {an},
      [an, src = std::move(src)](Node<Scalar>& self) {
        VectorX<Scalar> g = VectorX<Scalar>::Zero(an->value.size());
        for (std::size_t i = 0; i < src.size(); ++i) g(src[i]) += self.grad(static_cast<Index>(i));
        an->accumulate(g);
      },
      name);
}

}  // namespace

template <typename Scalar>
Tensor<Scalar> concat_channels(const Tensor<Scalar>& a, const Tensor<Scalar>& b) {
  require_activation(a.shape(), "concat_channels");
  require_activation(b.shape(), "concat_channels");
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  if (sa[0] != sb[0] || sa[2] != sb[2] || sa[3] != sb[3] || sa[4] != sb[4]) {
    throw std::invalid_argument("concat_channels: shape mismatch " + to_string(sa) + " vs " +
                                to_string(sb));
  }
  const Index batch = sa[0];
  const Index vox = sa[2] * sa[3] * sa[4];
  const Index ca = sa[1];
  const Index cb = sb[1];
  VectorX<Scalar> out(batch * (ca + cb) * vox);
  for (Index n = 0; n < batch; ++n) {
    out.segment(n * (ca + cb) * vox, ca * vox) = a.values().segment(n * ca * vox, ca * vox);
    out.segment((n * (ca + cb) + ca) * vox, cb * vox) = b.values().segment(n * cb * vox, cb * vox);
  }
  auto an = a.node();
  auto bn = b.node();
  return make_result<Scalar>(
      Shape{batch, ca + cb, sa[2], sa[3], sa[4]}, std::move(out), {an, bn},
      [an, bn, batch, ca, cb, vox](Node<Scalar>& self) {
        VectorX<Scalar> ga(batch * ca * vox);
        VectorX<Scalar> gb(batch * cb * vox);
        for (Index n = 0; n < batch; ++n) {
          ga.segment(n * ca * vox, ca * vox) = self.grad.segment(n * (ca + cb) * vox, ca * vox);
          gb.segment(n * cb * vox, cb * vox) =
              self.grad.segment((n * (ca + cb) + ca) * vox, cb * vox);
        }
        an->accumulate(ga);
        bn->accumulate(gb);
      },
      "concat_channels");
}

template <typename Scalar>
Tensor<Scalar> upsample_nearest(const Tensor<Scalar>& a, std::array<Index, 3> f) {
  require_activation(a.shape(), "upsample_nearest");
  const Shape& s = a.shape();
  for (Index v : f) {
    if (v < 1) throw std::invalid_argument("upsample_nearest: factors must be >= 1");
  }
  const Index bc = s[0] * s[1];
  const Index d = s[2], h = s[3], w = s[4];
  const Index od = d * f[0], oh = h * f[1], ow = w * f[2];
  std::vector<Index> src(static_cast<std::size_t>(bc * od * oh * ow));
  std::size_t i = 0;
  for (Index c = 0; c < bc; ++c)
    for (Index z = 0; z < od; ++z)
      for (Index y = 0; y < oh; ++y)
        for (Index x = 0; x < ow; ++x)
          src[i++] = ((c * d + z / f[0]) * h + y / f[1]) * w + x / f[2];
  return gather_op(a, Shape{s[0], s[1], od, oh, ow}, std::move(src), "upsample_nearest");
}

template <typename Scalar>
Tensor<Scalar> pad_edge(const Tensor<Scalar>& a, std::array<Index, 3> before,
                        std::array<Index, 3> after) {
  require_activation(a.shape(), "pad_edge");
  const Shape& s = a.shape();
  const Index bc = s[0] * s[1];
  const Index d = s[2], h = s[3], w = s[4];
  const Index od = d + before[0] + after[0];
  const Index oh = h + before[1] + after[1];
  const Index ow = w + before[2] + after[2];
  std::vector<Index> src(static_cast<std::size_t>(bc * od * oh * ow));
  std::size_t i = 0;
  for (Index c = 0; c < bc; ++c)
    for (Index z = 0; z < od; ++z) {
      const Index sz = std::clamp<Index>(z - before[0], 0, d - 1);
      for (Index y = 0; y < oh; ++y) {
        const Index sy = std::clamp<Index>(y - before[1], 0, h - 1);
        for (Index x = 0; x < ow; ++x) {
          const Index sx = std::clamp<Index>(x - before[2], 0, w - 1);
          src[i++] = ((c * d + sz) * h + sy) * w + sx;
        }
      }
    }
  return gather_op(a, Shape{s[0], s[1], od, oh, ow}, std::move(src), "pad_edge");
}

template <typename Scalar>
Tensor<Scalar> forward_difference(const Tensor<Scalar>& a, int axis) {
  require_activation(a.shape(), "forward_difference");
  if (axis < 0 || axis > 2) throw std::invalid_argument("forward_difference: axis must be 0..2");
  const Shape& s = a.shape();
  const Index bc = s[0] * s[1];
  const Index d = s[2], h = s[3], w = s[4];
  const Index extent = s[static_cast<std::size_t>(2 + axis)];
  const Index stride = axis == 0 ? h * w : (axis == 1 ? w : 1);
  const auto& x = a.values();
  VectorX<Scalar> out = VectorX<Scalar>::Zero(x.size());
  auto coord = [&](Index z, Index y, Index xx) { return axis == 0 ? z : (axis == 1 ? y : xx); };
  for (Index c = 0; c < bc; ++c)
    for (Index z = 0; z < d; ++z)
      for (Index y = 0; y < h; ++y)
        for (Index xx = 0; xx < w; ++xx) {
          const Index i = ((c * d + z) * h + y) * w + xx;
          if (coord(z, y, xx) + 1 < extent) out(i) = x(i + stride) - x(i);
        }
  auto an = a.node();
  return make_result<Scalar>(
      s, std::move(out), {an},
      [an, bc, d, h, w, extent, stride, axis](Node<Scalar>& self) {
        VectorX<Scalar> g = VectorX<Scalar>::Zero(an->value.size());
        for (Index c = 0; c < bc; ++c)
          for (Index z = 0; z < d; ++z)
            for (Index y = 0; y < h; ++y)
              for (Index xx = 0; xx < w; ++xx) {
                const Index i = ((c * d + z) * h + y) * w + xx;
                const Index k = axis == 0 ? z : (axis == 1 ? y : xx);
                if (k + 1 < extent) {
                  g(i) -= self.grad(i);
                  g(i + stride) += self.grad(i);
                }
              }
        an->accumulate(g);
      },
      "forward_difference");
}

namespace {

// Index map for voxel shuffle: for each output element, its source in the input.
std::vector<Index> shuffle_sources(Index batch, Index c_out, Index d, Index h, Index w, Index r) {
  const Index r3 = r * r * r;
  const Index od = d * r, oh = h * r, ow = w * r;
  std::vector<Index> src(static_cast<std::size_t>(batch * c_out * od * oh * ow));
  std::size_t i = 0;
  for (Index n = 0; n < batch; ++n)
    for (Index c = 0; c < c_out; ++c)
      for (Index z = 0; z < od; ++z)
        for (Index y = 0; y < oh; ++y)
          for (Index x = 0; x < ow; ++x) {
            const Index phase = ((z % r) * r + (y % r)) * r + (x % r);
            const Index ic = c * r3 + phase;
            src[i++] = (((n * c_out * r3 + ic) * d + z / r) * h + y / r) * w + x / r;
          }
  return src;
}

}  // namespace

template <typename Scalar>
Tensor<Scalar> voxel_shuffle(const Tensor<Scalar>& a, Index r) {
  require_activation(a.shape(), "voxel_shuffle");
  const Shape& s = a.shape();
  if (r < 1) throw std::invalid_argument("voxel_shuffle: factor must be >= 1");
  const Index r3 = r * r * r;
  if (s[1] % r3 != 0) {
    throw std::invalid_argument("voxel_shuffle: channels " + std::to_string(s[1]) +
                                " not divisible by r^3 = " + std::to_string(r3));
  }
  const Index c_out = s[1] / r3;
  auto src = shuffle_sources(s[0], c_out, s[2], s[3], s[4], r);
  return gather_op(a, Shape{s[0], c_out, s[2] * r, s[3] * r, s[4] * r}, std::move(src),
                   "voxel_shuffle");
}

template <typename Scalar>
Tensor<Scalar> voxel_unshuffle(const Tensor<Scalar>& a, Index r) {
  require_activation(a.shape(), "voxel_unshuffle");
  const Shape& s = a.shape();
  if (r < 1) throw std::invalid_argument("voxel_unshuffle: factor must be >= 1");
  for (int k = 2; k < 5; ++k) {
    if (s[static_cast<std::size_t>(k)] % r != 0) {
      throw std::invalid_argument("voxel_unshuffle: spatial dims " + to_string(s) +
                                  " not divisible by " + std::to_string(r));
    }
  }
  const Index d = s[2] / r, h = s[3] / r, w = s[4] / r;
  // Invert the shuffle permutation.
  auto fwd = shuffle_sources(s[0], s[1], d, h, w, r);
  std::vector<Index> src(fwd.size());
  for (std::size_t i = 0; i < fwd.size(); ++i) src[static_cast<std::size_t>(fwd[i])] = static_cast<Index>(i);
  return gather_op(a, Shape{s[0], s[1] * r * r * r, d, h, w}, std::move(src), "voxel_unshuffle");
}

template <typename Scalar>
Tensor<Scalar> avg_pool3d(const Tensor<Scalar>& a, Index kernel, Index stride) {
  require_activation(a.shape(), "avg_pool3d");
  if (kernel < 1 || stride < 1) throw std::invalid_argument("avg_pool3d: kernel and stride must be >= 1");
  const Shape& s = a.shape();
  const Index bc = s[0] * s[1];
  const Index d = s[2], h = s[3], w = s[4];
  auto out_extent = [&](Index n) { return n >= kernel ? (n - kernel) / stride + 1 : 0; };
  const Index od = out_extent(d), oh = out_extent(h), ow = out_extent(w);
  if (od <= 0 || oh <= 0 || ow <= 0) {
    throw std::invalid_argument("avg_pool3d: non-positive output size for input " + to_string(s) +
                                " with kernel " + std::to_string(kernel));
  }
  const Scalar inv = Scalar(1) / static_cast<Scalar>(kernel * kernel * kernel);
  const auto& x = a.values();
  VectorX<Scalar> out(bc * od * oh * ow);
  Index o = 0;
  for (Index c = 0; c < bc; ++c)
    for (Index z = 0; z < od; ++z)
      for (Index y = 0; y < oh; ++y)
        for (Index xx = 0; xx < ow; ++xx) {
          Scalar acc = 0;
          for (Index kz = 0; kz < kernel; ++kz)
            for (Index ky = 0; ky < kernel; ++ky)
              for (Index kx = 0; kx < kernel; ++kx)
                acc += x(((c * d + z * stride + kz) * h + y * stride + ky) * w + xx * stride + kx);
          out(o++) = acc * inv;
        }
  auto an = a.node();
  return make_result<Scalar>(
      Shape{s[0], s[1], od, oh, ow}, std::move(out), {an},
      [an, bc, d, h, w, od, oh, ow, kernel, stride, inv](Node<Scalar>& self) {
        VectorX<Scalar> g = VectorX<Scalar>::Zero(an->value.size());
        Index o = 0;
        for (Index c = 0; c < bc; ++c)
          for (Index z = 0; z < od; ++z)
            for (Index y = 0; y < oh; ++y)
              for (Index xx = 0; xx < ow; ++xx) {
                const Scalar gv = self.grad(o++) * inv;
                for (Index kz = 0; kz < kernel; ++kz)
                  for (Index ky = 0; ky < kernel; ++ky)
                    for (Index kx = 0; kx < kernel; ++kx)
                      g(((c * d + z * stride + kz) * h + y * stride + ky) * w + xx * stride + kx) += gv;
              }
        an->accumulate(g);
      },
      "avg_pool3d");
}

#define VQVOL_INSTANTIATE_OPS(S)                                                               \
  template Tensor<S> elementwise(BinaryOp, const Tensor<S>&, const Tensor<S>&);               \
  template Tensor<S> elementwise(BinaryOp, const Tensor<S>&, S);                              \
  template Tensor<S> unary(UnaryOp, const Tensor<S>&);                                        \
  template Tensor<S> pow(const Tensor<S>&, S);                                                \
  template Tensor<S> leaky_relu(const Tensor<S>&, S);                                         \
  template Tensor<S> reduce(ReduceOp, const Tensor<S>&, const std::vector<Index>&);           \
  template Tensor<S> reshape(const Tensor<S>&, Shape);                                        \
  template Tensor<S> stop_gradient(const Tensor<S>&);                                         \
  template Tensor<S> straight_through(const Tensor<S>&, const Tensor<S>&);                    \
  template Tensor<S> concat_channels(const Tensor<S>&, const Tensor<S>&);                     \
  template Tensor<S> upsample_nearest(const Tensor<S>&, std::array<Index, 3>);                \
  template Tensor<S> pad_edge(const Tensor<S>&, std::array<Index, 3>, std::array<Index, 3>);  \
  template Tensor<S> forward_difference(const Tensor<S>&, int);                               \
  template Tensor<S> voxel_shuffle(const Tensor<S>&, Index);                                  \
  template Tensor<S> voxel_unshuffle(const Tensor<S>&, Index);                                \
  template Tensor<S> avg_pool3d(const Tensor<S>&, Index, Index);

VQVOL_INSTANTIATE_OPS(float)
VQVOL_INSTANTIATE_OPS(double)

}  // namespace vqvol
