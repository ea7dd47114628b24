#include "vqvol/codec.hpp"

#include "vqvol/bytes.hpp"

#include <stdexcept>

namespace vqvol {

namespace {

constexpr char kMagic[4] = {'V', 'Q', 'C', '1'};
constexpr std::uint8_t kVersion = 1;

std::vector<Volume> run_single(const Volume& x, const Model<float>& model) {
  NoGradGuard guard;
  return from_batch(model.reconstruct(to_batch<float>(std::vector<const Volume*>{&x})));
}

}  // namespace

Index vqc1_header_bytes(Index levels) { return 16 + 12 * levels; }

std::vector<std::uint8_t> encode_stream(const ModelConfig& config, const std::vector<CodeGrid>& grids) {
  if (grids.size() != config.levels.size()) throw std::invalid_argument("VQC1: one grid per level required");
  if (grids.size() > 255) throw std::invalid_argument("VQC1: too many levels");
  ByteWriter w;
  w.raw(kMagic, 4);
  w.u8(kVersion);
  w.u8(static_cast<std::uint8_t>(grids.size()));
  w.u16(0);
  w.u64(config_hash(config));
  for (std::size_t l = 0; l < grids.size(); ++l) {
    if (grids[l].dims != config.levels[l].dims) throw std::invalid_argument("VQC1: grid dims differ from the configuration");
    for (Index d : grids[l].dims) w.u32(static_cast<std::uint32_t>(d));
  }
  for (std::size_t l = 0; l < grids.size(); ++l) {
    const Index K = config.levels[l].codes;
    if (K > 256) throw std::invalid_argument("VQC1: 8-bit indices need K <= 256");
    for (auto idx : grids[l].indices) {
      if (static_cast<Index>(idx) >= K) throw std::out_of_range("VQC1: code index " + std::to_string(idx) + " >= K");
      w.u8(static_cast<std::uint8_t>(idx));
    }
  }
  return w.take();
}

std::vector<CodeGrid> decode_stream(const std::vector<std::uint8_t>& bytes, const ModelConfig& config) {
  ByteReader r(bytes, "VQC1");
  if (bytes.size() < 4) throw FormatError(FormatError::Code::bad_magic, "VQC1: bad magic (stream too short)");
  char magic[4];
  r.raw(magic, 4);
  if (!std::equal(magic, magic + 4, kMagic)) throw FormatError(FormatError::Code::bad_magic, "VQC1: bad magic");
  const std::uint8_t version = r.u8();
  if (version != kVersion) throw FormatError(FormatError::Code::bad_version, "VQC1: unsupported version " + std::to_string(version));
  const std::uint8_t levels = r.u8();
  r.u16();
  const std::uint64_t hash = r.u64();
  if (hash != config_hash(config)) {
    throw FormatError(FormatError::Code::config_mismatch, "VQC1: config hash mismatch (stream was produced by a different model configuration)");
  }
  if (levels != config.levels.size()) throw FormatError(FormatError::Code::config_mismatch, "VQC1: level count mismatch");
  std::vector<CodeGrid> grids(levels);
  for (std::size_t l = 0; l < levels; ++l) {
    for (auto& d : grids[l].dims) d = r.u32();
    if (grids[l].dims != config.levels[l].dims) throw FormatError(FormatError::Code::config_mismatch, "VQC1: level dims mismatch");
  }
  for (std::size_t l = 0; l < levels; ++l) {
    const Index vox = grids[l].voxels();
    r.need(static_cast<std::uint64_t>(vox));
    grids[l].indices.resize(static_cast<std::size_t>(vox));
    for (auto& idx : grids[l].indices) {
      idx = r.u8();
      if (static_cast<Index>(idx) >= config.levels[l].codes) {
        throw FormatError(FormatError::Code::bad_index, "VQC1: code index " + std::to_string(idx) + " >= K at level " + std::to_string(l));
      }
    }
  }
  r.expect_end();
  return grids;
}

std::vector<std::uint8_t> compress(const Volume& x, const Model<float>& model) {
  NoGradGuard guard;
  const LatentStack<float> stack = model.encode(to_batch<float>(std::vector<const Volume*>{&x}));
  std::vector<CodeGrid> grids;
  for (const auto& level : stack.levels) grids.push_back(level.grids.front());
  return encode_stream(model.config(), grids);
}

Volume decompress(const std::vector<std::uint8_t>& bytes, const Model<float>& model) {
  NoGradGuard guard;
  std::vector<std::vector<CodeGrid>> grids;
  for (auto& g : decode_stream(bytes, model.config())) grids.push_back({std::move(g)});
  return from_batch(model.decode(model.latents_from_grids(grids))).front();
}

Volume reconstruct_volume(const Volume& x, const Model<float>& model) { return run_single(x, model).front(); }

}  // namespace vqvol
