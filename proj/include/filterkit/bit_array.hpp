#pragma once

#include <cstdint>
#include <vector>

#include "filterkit/serial.hpp"

namespace filterkit {

/**
 * Fixed-length bit vector. Bit i lives at word i/64, position i%64.
 *
 * Bits past size_bits() in the last word are always zero, so whole-word
 * operations (popcount, equality) need no masking.
 */
class BitArray {
public:
  BitArray() = default;
  explicit BitArray(std::uint64_t size_bits)
      : size_bits_(size_bits), words_((size_bits + 63) / 64, 0) {}

  std::uint64_t size_bits() const noexcept { return size_bits_; }

  bool get(std::uint64_t i) const noexcept {
    return (words_[i >> 6] >> (i & 63)) & 1ULL;
  }

  void set(std::uint64_t i) noexcept { words_[i >> 6] |= 1ULL << (i & 63); }

  std::uint64_t popcount() const noexcept;

  // Reads width consecutive bits starting at bit_offset as an integer,
  // lowest-indexed bit in the lowest position. width must be in [1, 64] and
  // the span must lie inside the array.
  std::uint64_t get_field(std::uint64_t bit_offset, std::uint32_t width) const noexcept;

  // Writes the low width bits of value over the span; the rest of the array
  // is untouched. Same bounds contract as get_field.
  void set_field(std::uint64_t bit_offset, std::uint32_t width, std::uint64_t value) noexcept;

  bool operator==(const BitArray&) const = default;

  // Byte-padded little-endian image: bit i goes to byte i/8, bit i%8.
  void serialize(ByteWriter& w) const;
  static BitArray deserialize(ByteReader& r, std::uint64_t size_bits);

private:
  std::uint64_t size_bits_ = 0;
  std::vector<std::uint64_t> words_;
};

}  // namespace filterkit
