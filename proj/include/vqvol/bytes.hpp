#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <string>
#include <vector>

namespace vqvol {

class FormatError : public std::runtime_error {
 public:
  enum class Code {
    io,
    bad_magic,
    bad_version,
    bad_dtype,
    dim_overflow,
    truncated_payload,
    trailing_bytes,
    config_mismatch,
    bad_index,
  };
  FormatError(Code code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Code code() const { return code_; }

 private:
  Code code_;
};

/// Little-endian serializer.
class ByteWriter {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) { put(v, 2); }
  void u32(std::uint32_t v) { put(v, 4); }
  void u64(std::uint64_t v) { put(v, 8); }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void raw(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    out_.insert(out_.end(), p, p + n);
  }
  void str(const std::string& s) {
    u64(s.size());
    raw(s.data(), s.size());
  }
  void f32_array(const float* v, std::size_t n) {
    if constexpr (std::endian::native == std::endian::little) {
      raw(v, n * sizeof(float));
    } else {
      for (std::size_t i = 0; i < n; ++i) f32(v[i]);
    }
  }
  std::vector<std::uint8_t>& bytes() { return out_; }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  void put(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  std::vector<std::uint8_t> out_;
};

/// Little-endian deserializer; running past the end raises truncated_payload.
class ByteReader {
 public:
  ByteReader(const std::uint8_t* data, std::size_t size, std::string context)
      : data_(data), size_(size), context_(std::move(context)) {}
  explicit ByteReader(const std::vector<std::uint8_t>& bytes, std::string context)
      : ByteReader(bytes.data(), bytes.size(), std::move(context)) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(get(1)); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(get(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  std::uint64_t u64() { return get(8); }
  float f32() { return std::bit_cast<float>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }
  void raw(void* out, std::size_t n) {
    need(n);
    std::memcpy(out, data_ + pos_, n);
    pos_ += n;
  }
  std::string str() {
    const std::uint64_t n = u64();
    need(n);
    std::string s(reinterpret_cast<const char*>(data_ + pos_), n);
    pos_ += n;
    return s;
  }
  void f32_array(float* out, std::size_t n) {
    if (n > remaining() / sizeof(float)) need(n * sizeof(float));
    if constexpr (std::endian::native == std::endian::little) {
      raw(out, n * sizeof(float));
    } else {
      for (std::size_t i = 0; i < n; ++i) out[i] = f32();
    }
  }
  std::size_t remaining() const { return size_ - pos_; }
  std::size_t position() const { return pos_; }
  void need(std::uint64_t n) const {
    if (n > remaining()) {
      throw FormatError(FormatError::Code::truncated_payload,
                        context_ + ": truncated payload (need " + std::to_string(n) + " bytes, " +
                            std::to_string(remaining()) + " left)");
    }
  }
  void expect_end() const {
    if (remaining() != 0) {
      throw FormatError(FormatError::Code::trailing_bytes,
                        context_ + ": " + std::to_string(remaining()) + " unexpected trailing bytes");
    }
  }

 private:
  std::uint64_t get(int n) {
    need(static_cast<std::uint64_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(data_[pos_ + i]) << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }
  const std::uint8_t* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
  std::string context_;
};

}  // namespace vqvol
