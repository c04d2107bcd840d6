#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "filterkit/bit_array.hpp"
#include "filterkit/hashing.hpp"

namespace filterkit {

struct BloomParams {
  std::uint64_t m_bits = 0;  // must be >= 1
  std::uint32_t k = 0;       // must be >= 1
  HashSeed seed;
  bool operator==(const BloomParams&) const = default;
};

/**
 * Standard Bloom filter: m bits, k double-hashed probes per key.
 *
 * Inserted keys always query positive. The false positive probability for a
 * non-member is fill_fraction()^k given the realized bit array.
 */
class BloomFilter {
public:
  // Throws std::invalid_argument if params violate m_bits >= 1 or k >= 1.
  static BloomFilter build(const BloomParams& params, std::span<const Key> keys);

  void insert(const Key& key);
  bool contains(const Key& key) const;

  double fill_fraction() const { return static_cast<double>(bits_.popcount()) / static_cast<double>(params_.m_bits); }

  const BloomParams& params() const noexcept { return params_; }
  std::uint64_t n_inserted() const noexcept { return n_inserted_; }
  std::uint64_t size_bits() const noexcept { return params_.m_bits; }
  const BitArray& bits() const noexcept { return bits_; }

  bool operator==(const BloomFilter&) const = default;

  std::vector<std::uint8_t> serialize() const;
  static BloomFilter deserialize(std::span<const std::uint8_t> bytes);

private:
  BloomFilter(BloomParams params);

  BloomParams params_;
  BitArray bits_;
  std::uint64_t n_inserted_ = 0;
};

// Number of hash functions minimizing the analytic false positive
// probability (1 - e^{-k/bits_per_key})^k, chosen between the floor and
// ceiling of bits_per_key * ln 2. Always >= 1.
// Throws std::invalid_argument if bits_per_key <= 0.
std::uint32_t optimal_hash_count(double bits_per_key);

}  // namespace filterkit
