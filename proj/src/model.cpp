#include "vqvol/model.hpp"

#include "vqvol/codec.hpp"
#include "vqvol/conv.hpp"
#include "vqvol/ops.hpp"

#include <algorithm>
#include <bit>
#include <random>
#include <stdexcept>

namespace vqvol {

namespace {

template <typename Scalar>
Tensor<Scalar> lrelu(const Tensor<Scalar>& x) {
  return leaky_relu(x, static_cast<Scalar>(kLeakySlope));
}

template <typename Scalar>
Tensor<Scalar> run_blocks(const std::vector<FixupBlock<Scalar>>& blocks, Tensor<Scalar> h) {
  for (const auto& b : blocks) h = b.forward(h);
  return h;
}

std::string at_depth(const char* prefix, int s) { return std::string(prefix) + std::to_string(s); }

}  // namespace

template <typename Scalar>
std::vector<std::vector<CodeGrid>> LatentStack<Scalar>::grids() const {
  std::vector<std::vector<CodeGrid>> out;
  for (const auto& l : levels) out.push_back(l.grids);
  return out;
}

template <typename Scalar>
Model<Scalar>::Model(ModelConfig config, std::uint64_t seed) : config_(std::move(config)) {
  config_.validate();
  if (config_.level_factor(config_.levels.size() - 1) < 2) {
    throw std::invalid_argument("model: the finest level must be downsampled at least 2x");
  }
  const int depth = config_.depth();
  const Index B = config_.blocks_per_resolution;
  const Index total_blocks = (2 * depth + 1) * B;
  std::mt19937_64 rng(seed);

  stem_ = ConvLayer<Scalar>(1, width(0), 3, ConvGeometry{1, 1}, rng);
  enc_blocks_.resize(static_cast<std::size_t>(depth + 1));
  for (int s = 0; s <= depth; ++s) {
    for (Index b = 0; b < B; ++b) enc_blocks_[static_cast<std::size_t>(s)].emplace_back(width(s), total_blocks, rng);
    if (s < depth) enc_down_.emplace_back(width(s), width(s + 1), rng);
  }
  for (std::size_t l = 0; l < config_.levels.size(); ++l) {
    const auto& lv = config_.levels[l];
    const Index extra = l > 0 ? config_.levels[l - 1].code_dim : 0;
    pre_vq_.emplace_back(width(level_depth(l)) + extra, lv.code_dim, 1, ConvGeometry{1, 0}, rng);
    codebooks_.emplace_back(lv.codes, lv.code_dim, rng(), config_.codebook);
  }

  dec_in_ = ConvLayer<Scalar>(config_.levels[0].code_dim, width(depth), 3, ConvGeometry{1, 1}, rng);
  dec_merge_.resize(config_.levels.size());
  for (std::size_t l = 1; l < config_.levels.size(); ++l) {
    const Index w = width(level_depth(l));
    dec_merge_[l] = ConvLayer<Scalar>(w + config_.levels[l].code_dim, w, 3, ConvGeometry{1, 1}, rng);
  }
  dec_blocks_.resize(static_cast<std::size_t>(depth + 1));
  dec_up_.resize(static_cast<std::size_t>(depth + 1));
  for (int s = depth; s >= 1; --s) {
    for (Index b = 0; b < B; ++b) dec_blocks_[static_cast<std::size_t>(s)].emplace_back(width(s), total_blocks, rng);
    if (s >= 2) dec_up_[static_cast<std::size_t>(s)] = IcnrUp<Scalar>(width(s), width(s - 1), rng);
  }
  output_ = SubpixelUp<Scalar>(width(1), 1, 2, rng);

  if (config_.loss == LossKind::adaptive) adaptive_ = AdaptiveLossParams<Scalar>(config_.input_dims, config_.adaptive);
}

template <typename Scalar>
Index Model<Scalar>::width(int s) const {
  return std::min(config_.base_width << s, config_.max_width);
}

template <typename Scalar>
int Model<Scalar>::level_depth(std::size_t l) const {
  return std::countr_zero(static_cast<std::uint64_t>(config_.level_factor(l)));
}

template <typename Scalar>
void Model<Scalar>::check_input(const Tensor<Scalar>& x) const {
  const Shape& s = x.shape();
  const auto& d = config_.input_dims;
  if (s.size() != 5 || s[1] != 1 || s[2] != d[0] || s[3] != d[1] || s[4] != d[2]) {
    throw std::invalid_argument("model: input " + to_string(s) + " does not match configured dims [B, 1, " +
                                std::to_string(d[0]) + ", " + std::to_string(d[1]) + ", " + std::to_string(d[2]) + "]");
  }
}

template <typename Scalar>
LatentStack<Scalar> Model<Scalar>::encode(const Tensor<Scalar>& x, const Frozen* frozen) const {
  check_input(x);
  if (frozen && frozen->size() != config_.levels.size()) throw std::invalid_argument("model: frozen level count mismatch");
  const int depth = config_.depth();
  std::vector<Tensor<Scalar>> feats(static_cast<std::size_t>(depth + 1));
  Tensor<Scalar> h = lrelu(stem_.forward(x));
  for (int s = 0; s <= depth; ++s) {
    h = run_blocks(enc_blocks_[static_cast<std::size_t>(s)], h);
    feats[static_cast<std::size_t>(s)] = h;
    if (s < depth) h = enc_down_[static_cast<std::size_t>(s)].forward(h);
  }
  LatentStack<Scalar> stack;
  for (std::size_t l = 0; l < config_.levels.size(); ++l) {
    const int s = level_depth(l);
    Tensor<Scalar> in = feats[static_cast<std::size_t>(s)];
    if (l > 0) {
      const Index f = Index{1} << (level_depth(l - 1) - s);
      in = concat_channels(in, upsample_nearest(stack.levels[l - 1].quantized, {f, f, f}));
    }
    Tensor<Scalar> features = pre_vq_[l].forward(in);
    QuantizeResult<Scalar> q = quantize(features, codebooks_[l], frozen ? &(*frozen)[l] : nullptr);
    LatentLevel<Scalar> level;
    level.grids = std::move(q.grids);
    level.quantized = q.quantized;
    level.features = features;
    level.codes_used = q.codes_used;
    level.mean_squared_distance = q.mean_squared_distance;
    stack.levels.push_back(std::move(level));
  }
  return stack;
}

template <typename Scalar>
Tensor<Scalar> Model<Scalar>::decode(const LatentStack<Scalar>& latents) const {
  if (latents.levels.size() != config_.levels.size()) throw std::invalid_argument("model: latent level count mismatch");
  for (std::size_t l = 0; l < config_.levels.size(); ++l) {
    const Shape& s = latents.levels[l].quantized.shape();
    const auto& lv = config_.levels[l];
    if (s.size() != 5 || s[1] != lv.code_dim || s[2] != lv.dims[0] || s[3] != lv.dims[1] || s[4] != lv.dims[2]) {
      throw std::invalid_argument("model: level " + std::to_string(l) + " latents " + to_string(s) +
                                  " do not match the configuration");
    }
  }
  const int depth = config_.depth();
  Tensor<Scalar> h = lrelu(dec_in_.forward(latents.levels[0].quantized));
  Tensor<Scalar> out;
  for (int s = depth; s >= 1; --s) {
    for (std::size_t l = 1; l < config_.levels.size(); ++l) {
      if (level_depth(l) == s) h = lrelu(dec_merge_[l].forward(concat_channels(h, latents.levels[l].quantized)));
    }
    h = run_blocks(dec_blocks_[static_cast<std::size_t>(s)], h);
    if (s >= 2) {
      h = dec_up_[static_cast<std::size_t>(s)].forward(h);
    } else {
      out = output_.forward(h);
    }
  }
  // Stretched past [0, 1] and clamped, so flat background is reachable without saturating.
  const Scalar m = static_cast<Scalar>(kOutputMargin);
  return clamp01(sigmoid(out) * (Scalar(1) + Scalar(2) * m) - m);
}

template <typename Scalar>
LatentStack<Scalar> Model<Scalar>::latents_from_grids(const std::vector<std::vector<CodeGrid>>& grids) const {
  if (grids.size() != config_.levels.size()) throw std::invalid_argument("model: grid level count mismatch");
  LatentStack<Scalar> stack;
  for (std::size_t l = 0; l < grids.size(); ++l) {
    for (const auto& g : grids[l]) {
      if (g.dims != config_.levels[l].dims) {
        throw std::invalid_argument("model: level " + std::to_string(l) + " grid dims do not match the configuration");
      }
    }
    LatentLevel<Scalar> level;
    level.grids = grids[l];
    level.quantized = gather_codes(codebooks_[l].codes(), grids[l]);
    level.codes_used = level.quantized;
    stack.levels.push_back(std::move(level));
  }
  return stack;
}

template <typename Scalar>
Tensor<Scalar> Model<Scalar>::reconstruct(const Tensor<Scalar>& x) const {
  return decode(encode(x));
}

template <typename Scalar>
LossParts<Scalar> Model<Scalar>::forward_loss(const Tensor<Scalar>& x, const Frozen* frozen) const {
  LossParts<Scalar> parts;
  parts.latents = encode(x, frozen);
  parts.reconstruction = decode(parts.latents);
  parts.reconstruction_loss = config_.loss == LossKind::baur ? baur_loss(x, parts.reconstruction)
                                                              : adaptive_loss(x, parts.reconstruction, adaptive_);
  parts.total = parts.reconstruction_loss;
  for (const auto& level : parts.latents.levels) {
    Tensor<Scalar> cb = codebook_loss(level.features, level.codes_used, config_.codebook.beta, config_.codebook.ema);
    parts.codebook_losses.push_back(cb);
    parts.total = parts.total + cb;
  }
  return parts;
}

template <typename Scalar>
void Model<Scalar>::update_codebooks(const LatentStack<Scalar>& latents) {
  if (!config_.codebook.ema) return;
  for (std::size_t l = 0; l < codebooks_.size(); ++l) {
    ema_update(codebooks_[l], latents.levels.at(l).features.detach(), latents.levels[l].grids);
  }
}

template <typename Scalar>
ParameterList<Scalar> Model<Scalar>::parameters() {
  ParameterList<Scalar> p;
  stem_.collect(p, "enc.stem");
  for (std::size_t s = 0; s < enc_blocks_.size(); ++s) {
    for (std::size_t b = 0; b < enc_blocks_[s].size(); ++b) {
      enc_blocks_[s][b].collect(p, at_depth("enc.d", static_cast<int>(s)) + ".block" + std::to_string(b));
    }
    if (s < enc_down_.size()) enc_down_[s].collect(p, at_depth("enc.d", static_cast<int>(s)) + ".down");
  }
  for (std::size_t l = 0; l < pre_vq_.size(); ++l) {
    pre_vq_[l].collect(p, "vq" + std::to_string(l) + ".proj");
    if (!config_.codebook.ema) p.emplace_back("vq" + std::to_string(l) + ".codes", &codebooks_[l].codes());
  }
  dec_in_.collect(p, "dec.in");
  for (std::size_t l = 1; l < dec_merge_.size(); ++l) dec_merge_[l].collect(p, "dec.merge" + std::to_string(l));
  for (std::size_t s = dec_blocks_.size(); s-- > 1;) {
    for (std::size_t b = 0; b < dec_blocks_[s].size(); ++b) {
      dec_blocks_[s][b].collect(p, at_depth("dec.d", static_cast<int>(s)) + ".block" + std::to_string(b));
    }
    if (s >= 2) dec_up_[s].collect(p, at_depth("dec.d", static_cast<int>(s)) + ".up");
  }
  output_.collect(p, "dec.out");
  if (config_.loss == LossKind::adaptive) adaptive_.collect(p, "loss.adaptive");
  return p;
}

std::vector<ShapeTraceEntry> trace_shapes(const ModelConfig& config) {
  config.validate();
  const int depth = config.depth();
  auto width = [&](int s) { return std::min(config.base_width << s, config.max_width); };
  std::vector<ShapeTraceEntry> out;
  std::array<Index, 3> dims = config.input_dims;
  auto shape = [&](Index c) { return Shape{1, c, dims[0], dims[1], dims[2]}; };
  out.push_back({"input", shape(1)});
  for (auto& d : dims) d = conv_output_extent(d, 3, ConvGeometry{1, 1});
  out.push_back({"enc.stem", shape(width(0))});
  std::vector<std::array<Index, 3>> at_depth_dims{dims};
  for (int s = 1; s <= depth; ++s) {
    for (auto& d : dims) d = conv_output_extent(d, 3, ConvGeometry{2, 1});
    at_depth_dims.push_back(dims);
    out.push_back({"enc.d" + std::to_string(s), shape(width(s))});
  }
  for (std::size_t l = 0; l < config.levels.size(); ++l) {
    const int s = std::countr_zero(static_cast<std::uint64_t>(config.level_factor(l)));
    dims = at_depth_dims[static_cast<std::size_t>(s)];
    out.push_back({"latent" + std::to_string(l), shape(config.levels[l].code_dim)});
  }
  dims = at_depth_dims.back();
  for (int s = depth; s >= 2; --s) {
    for (auto& d : dims) d = conv_transpose_output_extent(d, 4, ConvGeometry{2, 1});
    out.push_back({"dec.d" + std::to_string(s - 1), shape(width(s - 1))});
  }
  for (auto& d : dims) d *= 2;
  out.push_back({"output", shape(1)});
  return out;
}

CompressionReport compression_report(const ModelConfig& config) {
  config.validate();
  CompressionReport r;
  const auto& in = config.input_dims;
  r.input_voxels = in[0] * in[1] * in[2];
  for (const auto& l : config.levels) {
    const Index vox = l.dims[0] * l.dims[1] * l.dims[2];
    r.latent_variables += vox * l.code_dim;
    r.payload_bytes += vox;
  }
  r.variable_ratio = static_cast<double>(r.latent_variables) / static_cast<double>(r.input_voxels);
  r.bitwise_ratio = static_cast<double>(r.latent_variables * 8) / static_cast<double>(r.input_voxels * 32);
  r.header_bytes = vqc1_header_bytes(static_cast<Index>(config.levels.size()));
  r.bytes = r.header_bytes + r.payload_bytes;
  r.input_bytes = r.input_voxels * 4;
  return r;
}

template struct LatentStack<float>;
template struct LatentStack<double>;
template class Model<float>;
template class Model<double>;

}  // namespace vqvol
