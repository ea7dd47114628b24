#include "vqvol/volume.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>

namespace vqvol {

namespace {

constexpr char kMagic[4] = {'V', 'O', 'L', '1'};
constexpr std::uint8_t kVersion = 1;
constexpr std::uint8_t kDtypeF32 = 1;
constexpr std::uint8_t kDtypeU8 = 2;
constexpr std::uint64_t kMaxVoxels = std::uint64_t{1} << 31;

void write_header(ByteWriter& w, std::uint8_t dtype, const Dims3& dims, const std::array<float, 3>& spacing) {
  w.raw(kMagic, 4);
  w.u8(kVersion);
  w.u8(dtype);
  w.u16(0);
  for (Index d : dims) {
    if (d < 1 || static_cast<std::uint64_t>(d) > std::numeric_limits<std::uint32_t>::max()) {
      throw FormatError(FormatError::Code::dim_overflow, "VOL1: dims do not fit u32");
    }
    w.u32(static_cast<std::uint32_t>(d));
  }
  for (float s : spacing) w.f32(s);
}

struct Header {
  Dims3 dims{};
  std::array<float, 3> spacing{};
  std::uint64_t voxels = 0;
};

Header read_header(ByteReader& r, std::uint8_t expected_dtype) {
  if (r.remaining() < 4) throw FormatError(FormatError::Code::bad_magic, "VOL1: bad magic (file too short)");
  char magic[4];
  r.raw(magic, 4);
  if (!std::equal(magic, magic + 4, kMagic)) throw FormatError(FormatError::Code::bad_magic, "VOL1: bad magic");
  const std::uint8_t version = r.u8();
  if (version != kVersion) {
    throw FormatError(FormatError::Code::bad_version, "VOL1: unsupported version " + std::to_string(version));
  }
  const std::uint8_t dtype = r.u8();
  if (dtype != expected_dtype) {
    throw FormatError(FormatError::Code::bad_dtype, "VOL1: dtype " + std::to_string(dtype) + ", expected " +
                                                        std::to_string(expected_dtype));
  }
  r.u16();
  Header h;
  h.voxels = 1;
  for (auto& d : h.dims) {
    const std::uint32_t v = r.u32();
    if (v == 0) throw FormatError(FormatError::Code::dim_overflow, "VOL1: zero dimension");
    d = v;
    h.voxels *= v;
    if (h.voxels > kMaxVoxels) throw FormatError(FormatError::Code::dim_overflow, "VOL1: dim overflow");
  }
  for (auto& s : h.spacing) s = r.f32();
  return h;
}

void check_payload(const ByteReader& r, std::uint64_t bytes) {
  if (r.remaining() < bytes) {
    throw FormatError(FormatError::Code::truncated_payload,
                      "VOL1: truncated payload (" + std::to_string(r.remaining()) + " of " +
                          std::to_string(bytes) + " bytes)");
  }
  if (r.remaining() > bytes) {
    throw FormatError(FormatError::Code::trailing_bytes, "VOL1: payload longer than header dims");
  }
}

}  // namespace

Volume::Volume(Dims3 d, float fill) : dims(d), data(static_cast<std::size_t>(d[0] * d[1] * d[2]), fill) {}

SegmentationMask::SegmentationMask(Dims3 d, Tissue fill)
    : dims(d), labels(static_cast<std::size_t>(d[0] * d[1] * d[2]), static_cast<std::uint8_t>(fill)) {}

Index SegmentationMask::count(Tissue t) const {
  return std::count(labels.begin(), labels.end(), static_cast<std::uint8_t>(t));
}

std::vector<std::uint8_t> encode_vol(const Volume& v) {
  if (static_cast<Index>(v.data.size()) != v.voxels()) throw std::invalid_argument("VOL1: data size does not match dims");
  ByteWriter w;
  write_header(w, kDtypeF32, v.dims, v.spacing);
  w.f32_array(v.data.data(), v.data.size());
  return w.take();
}

std::vector<std::uint8_t> encode_mask(const SegmentationMask& m) {
  if (static_cast<Index>(m.labels.size()) != m.voxels()) throw std::invalid_argument("VOL1: mask size does not match dims");
  ByteWriter w;
  write_header(w, kDtypeU8, m.dims, m.spacing);
  w.raw(m.labels.data(), m.labels.size());
  return w.take();
}

Volume decode_vol(const std::vector<std::uint8_t>& bytes) {
  ByteReader r(bytes, "VOL1");
  const Header h = read_header(r, kDtypeF32);
  check_payload(r, h.voxels * 4);
  Volume v;
  v.dims = h.dims;
  v.spacing = h.spacing;
  v.data.resize(h.voxels);
  r.f32_array(v.data.data(), v.data.size());
  return v;
}

SegmentationMask decode_mask(const std::vector<std::uint8_t>& bytes) {
  ByteReader r(bytes, "VOL1");
  const Header h = read_header(r, kDtypeU8);
  check_payload(r, h.voxels);
  SegmentationMask m;
  m.dims = h.dims;
  m.spacing = h.spacing;
  m.labels.resize(h.voxels);
  r.raw(m.labels.data(), m.labels.size());
  return m;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(FormatError::Code::io, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return bytes;
}

void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError(FormatError::Code::io, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError(FormatError::Code::io, "write failed for " + path.string());
}

void write_vol(const std::filesystem::path& path, const Volume& v) { write_file(path, encode_vol(v)); }
Volume read_vol(const std::filesystem::path& path) { return decode_vol(read_file(path)); }
void write_mask(const std::filesystem::path& path, const SegmentationMask& m) { write_file(path, encode_mask(m)); }
SegmentationMask read_mask(const std::filesystem::path& path) { return decode_mask(read_file(path)); }

double percentile(std::vector<float> values, double pct) {
  if (values.empty()) throw std::invalid_argument("percentile: empty input");
  if (!(pct >= 0.0 && pct <= 100.0)) throw std::invalid_argument("percentile: pct outside [0, 100]");
  const double pos = pct / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(lo), values.end());
  const double a = values[lo];
  double b = a;
  if (hi != lo) b = *std::min_element(values.begin() + static_cast<std::ptrdiff_t>(lo) + 1, values.end());
  return a + (pos - static_cast<double>(lo)) * (b - a);
}

Volume robust_minmax(const Volume& v, double lo_pct, double hi_pct) {
  if (!(lo_pct < hi_pct)) throw std::invalid_argument("robust_minmax: need lo_pct < hi_pct");
  const double lo = percentile(v.data, lo_pct);
  const double hi = percentile(v.data, hi_pct);
  if (!(hi > lo)) throw std::invalid_argument("robust_minmax: constant volume (P_lo == P_hi)");
  Volume out = v;
  for (float& x : out.data) {
    x = static_cast<float>(std::clamp((static_cast<double>(x) - lo) / (hi - lo), 0.0, 1.0));
  }
  return out;
}

Split split_dataset(Index count, double test_fraction, std::uint64_t seed) {
  if (count < 1) throw std::invalid_argument("split_dataset: empty input");
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw std::invalid_argument("split_dataset: test_fraction must lie in (0, 1)");
  }
  std::vector<Index> order(static_cast<std::size_t>(count));
  std::iota(order.begin(), order.end(), Index{0});
  std::mt19937_64 rng(seed);
  for (std::size_t i = order.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(order[i - 1], order[j]);
  }
  Index n_test = std::llround(static_cast<double>(count) * test_fraction);
  n_test = std::max<Index>(n_test, 1);
  if (count > 1) n_test = std::min(n_test, count - 1);
  Split s;
  s.test.assign(order.begin(), order.begin() + n_test);
  s.train.assign(order.begin() + n_test, order.end());
  std::sort(s.test.begin(), s.test.end());
  std::sort(s.train.begin(), s.train.end());
  return s;
}

template <typename Scalar>
Tensor<Scalar> to_batch(const std::vector<const Volume*>& volumes) {
  if (volumes.empty()) throw std::invalid_argument("to_batch: no volumes");
  const Dims3 d = volumes.front()->dims;
  const Index n = volumes.front()->voxels();
  VectorX<Scalar> v(n * static_cast<Index>(volumes.size()));
  for (std::size_t b = 0; b < volumes.size(); ++b) {
    if (volumes[b]->dims != d) throw std::invalid_argument("to_batch: volumes differ in dims");
    for (Index i = 0; i < n; ++i) v(static_cast<Index>(b) * n + i) = static_cast<Scalar>(volumes[b]->data[static_cast<std::size_t>(i)]);
  }
  return Tensor<Scalar>(Shape{static_cast<Index>(volumes.size()), 1, d[0], d[1], d[2]}, std::move(v));
}

template <typename Scalar>
Tensor<Scalar> to_batch(const std::vector<Volume>& volumes) {
  std::vector<const Volume*> ptrs;
  for (const auto& v : volumes) ptrs.push_back(&v);
  return to_batch<Scalar>(ptrs);
}

template <typename Scalar>
std::vector<Volume> from_batch(const Tensor<Scalar>& batch) {
  const Shape& s = batch.shape();
  if (s.size() != 5 || s[1] != 1) throw std::invalid_argument("from_batch: expected [B, 1, d, h, w], got " + to_string(s));
  std::vector<Volume> out;
  const Index n = s[2] * s[3] * s[4];
  for (Index b = 0; b < s[0]; ++b) {
    Volume v(Dims3{s[2], s[3], s[4]});
    for (Index i = 0; i < n; ++i) v.data[static_cast<std::size_t>(i)] = static_cast<float>(batch.values()(b * n + i));
    out.push_back(std::move(v));
  }
  return out;
}

template Tensor<float> to_batch(const std::vector<const Volume*>&);
template Tensor<double> to_batch(const std::vector<const Volume*>&);
template Tensor<float> to_batch(const std::vector<Volume>&);
template Tensor<double> to_batch(const std::vector<Volume>&);
template std::vector<Volume> from_batch(const Tensor<float>&);
template std::vector<Volume> from_batch(const Tensor<double>&);

}  // namespace vqvol
