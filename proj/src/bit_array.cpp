#include "filterkit/bit_array.hpp"

#include <bit>

namespace filterkit {

std::uint64_t BitArray::popcount() const noexcept {
  std::uint64_t total = 0;
  for (std::uint64_t w : words_) total += static_cast<std::uint64_t>(std::popcount(w));
  return total;
}

std::uint64_t BitArray::get_field(std::uint64_t bit_offset, std::uint32_t width) const noexcept {
  const std::uint64_t word = bit_offset >> 6;
  const std::uint32_t shift = static_cast<std::uint32_t>(bit_offset & 63);
  const std::uint64_t mask = width == 64 ? ~0ULL : (1ULL << width) - 1;
  std::uint64_t v = words_[word] >> shift;
  if (shift + width > 64) v |= words_[word + 1] << (64 - shift);
  return v & mask;
}

void BitArray::set_field(std::uint64_t bit_offset, std::uint32_t width, std::uint64_t value) noexcept {
  const std::uint64_t word = bit_offset >> 6;
  const std::uint32_t shift = static_cast<std::uint32_t>(bit_offset & 63);
  const std::uint64_t mask = width == 64 ? ~0ULL : (1ULL << width) - 1;
  value &= mask;
  words_[word] = (words_[word] & ~(mask << shift)) | (value << shift);
  if (shift + width > 64) {
    const std::uint32_t spill = shift + width - 64;
    const std::uint64_t hi_mask = (1ULL << spill) - 1;
    words_[word + 1] = (words_[word + 1] & ~hi_mask) | (value >> (64 - shift));
  }
}

void BitArray::serialize(ByteWriter& w) const {
  const std::uint64_t num_bytes = (size_bits_ + 7) / 8;
  for (std::uint64_t b = 0; b < num_bytes; ++b) {
    const std::uint64_t word = b >> 3;
    w.u8(static_cast<std::uint8_t>(words_[word] >> ((b & 7) * 8)));
  }
}

BitArray BitArray::deserialize(ByteReader& r, std::uint64_t size_bits) {
  BitArray out(size_bits);
  const std::uint64_t num_bytes = (size_bits + 7) / 8;
  for (std::uint64_t b = 0; b < num_bytes; ++b) {
    const std::uint64_t byte = r.u8();
    out.words_[b >> 3] |= byte << ((b & 7) * 8);
  }
  // Clear padding bits of a short final byte so equality stays word-exact.
  if (size_bits % 64 != 0) {
    const std::uint64_t mask = (1ULL << (size_bits % 64)) - 1;
    out.words_.back() &= mask;
  }
  return out;
}

}  // namespace filterkit
