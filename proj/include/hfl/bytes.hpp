#pragma once

#include <bit>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

// Little-endian scalar packing shared by the wire codec and the policy file.
namespace hfl::bytes {

template <typename UInt>
void put_le(std::vector<std::uint8_t>& out, UInt value) {
  for (std::size_t i = 0; i < sizeof(UInt); ++i) {
    out.push_back(static_cast<std::uint8_t>(value >> (8 * i)));
  }
}

inline void put_u8(std::vector<std::uint8_t>& out, std::uint8_t v) { out.push_back(v); }
inline void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) { put_le(out, v); }
inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) { put_le(out, v); }
inline void put_f32(std::vector<std::uint8_t>& out, float v) {
  put_le(out, std::bit_cast<std::uint32_t>(v));
}
inline void put_f64(std::vector<std::uint8_t>& out, double v) {
  put_le(out, std::bit_cast<std::uint64_t>(v));
}

template <typename UInt>
UInt get_le(std::span<const std::uint8_t> in, std::size_t offset) {
  UInt value = 0;
  for (std::size_t i = 0; i < sizeof(UInt); ++i) {
    value |= static_cast<UInt>(static_cast<UInt>(in[offset + i]) << (8 * i));
  }
  return value;
}

/// Sequential reader; throws std::out_of_range past the end.
class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> data) : data_(data) {}

  std::size_t remaining() const { return data_.size() - pos_; }
  std::size_t position() const { return pos_; }

  std::uint8_t u8() { return take<std::uint8_t>(); }
  std::uint16_t u16() { return take<std::uint16_t>(); }
  std::uint32_t u32() { return take<std::uint32_t>(); }
  float f32() { return std::bit_cast<float>(take<std::uint32_t>()); }
  double f64() { return std::bit_cast<double>(take<std::uint64_t>()); }

 private:
  template <typename UInt>
  UInt take() {
    if (remaining() < sizeof(UInt)) throw std::out_of_range("read past end of buffer");
    const UInt v = get_le<UInt>(data_, pos_);
    pos_ += sizeof(UInt);
    return v;
  }

  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

}  // namespace hfl::bytes
