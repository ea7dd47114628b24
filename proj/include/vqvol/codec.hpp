#pragma once

#include "vqvol/config.hpp"
#include "vqvol/model.hpp"
#include "vqvol/quantizer.hpp"
#include "vqvol/volume.hpp"

#include <cstdint>
#include <vector>

namespace vqvol {

// VQC1 stream, little-endian:
//   "VQC1" | u8 version = 1 | u8 level count | u16 reserved = 0 | u64 config hash
//   | per level: d, h, w as u32 | per level: d*h*w u8 code indices, coarsest level first.

/// 16 fixed bytes plus 12 per level.
Index vqc1_header_bytes(Index levels);

/// Serializes one grid per level; indices must be below the level's K (<= 256).
std::vector<std::uint8_t> encode_stream(const ModelConfig& config, const std::vector<CodeGrid>& grids);
/// Parses and validates a stream against `config`; throws FormatError.
std::vector<CodeGrid> decode_stream(const std::vector<std::uint8_t>& bytes, const ModelConfig& config);

std::vector<std::uint8_t> compress(const Volume& x, const Model<float>& model);
Volume decompress(const std::vector<std::uint8_t>& bytes, const Model<float>& model);
/// decode(encode(x)) for a single volume, without gradient recording.
Volume reconstruct_volume(const Volume& x, const Model<float>& model);

}  // namespace vqvol
