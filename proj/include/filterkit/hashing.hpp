#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace filterkit {

/**
 * Opaque byte-sequence key.
 *
 * Integer keys are encoded as 8 bytes, fixed-width little-endian, so the
 * same integer hashes identically on every platform.
 */
class Key {
public:
  Key() = default;

  static Key from_bytes(std::string_view bytes) { return Key(std::string(bytes)); }

  static Key from_u64(std::uint64_t value) {
    std::string b(8, '\0');
    for (int i = 0; i < 8; ++i) b[static_cast<std::size_t>(i)] = static_cast<char>(value >> (8 * i));
    return Key(std::move(b));
  }

  std::string_view bytes() const noexcept { return bytes_; }

  // Decodes an 8-byte little-endian integer key. Only meaningful for keys
  // produced by from_u64.
  std::uint64_t as_u64() const noexcept {
    std::uint64_t v = 0;
    for (std::size_t i = bytes_.size(); i-- > 0;)
      v = (v << 8) | static_cast<std::uint8_t>(bytes_[i]);
    return v;
  }

  bool is_u64() const noexcept { return bytes_.size() == 8; }

  bool operator==(const Key&) const = default;
  auto operator<=>(const Key&) const = default;

private:
  explicit Key(std::string b) : bytes_(std::move(b)) {}
  std::string bytes_;
};

struct HashSeed {
  std::uint64_t value = 0;
  bool operator==(const HashSeed&) const = default;
};

struct HashPair {
  std::uint64_t h1 = 0;
  std::uint64_t h2 = 0;  // always odd
};

// 128-bit digest of (key, seed). h2 is forced odd so it can serve directly as
// a double-hashing stride with full cycle length on power-of-two tables.
HashPair hash_pair(const Key& key, HashSeed seed) noexcept;

// Double-hashing index sequence (h1 + i*h2) mod m for i = 0..k-1.
// Throws std::invalid_argument if m == 0 or k == 0.
std::vector<std::uint64_t> index_sequence(std::uint64_t h1, std::uint64_t h2, std::uint32_t k,
                                          std::uint64_t m);

// Seed for an independent substream. Fixed lane offsets give reproducible,
// independent-looking streams from one master seed.
HashSeed derive_seed(HashSeed master, std::uint64_t lane) noexcept;

/**
 * splitmix64 generator. All randomized construction and simulation in this
 * project draws from it (directly or via derive_seed) so that results are
 * identical across platforms and standard libraries.
 */
class SplitMix64 {
public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}
  explicit SplitMix64(HashSeed seed) noexcept : state_(seed.value) {}

  std::uint64_t operator()() noexcept {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  static constexpr std::uint64_t min() { return 0; }
  static constexpr std::uint64_t max() { return ~0ULL; }

  // Uniform double in [0, 1).
  double uniform01() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  // Unbiased uniform integer in [0, bound); bound must be nonzero.
  std::uint64_t below(std::uint64_t bound) noexcept {
    // Lemire's multiply-then-reject method.
    std::uint64_t x = (*this)();
    unsigned __int128 m = static_cast<unsigned __int128>(x) * bound;
    auto lo = static_cast<std::uint64_t>(m);
    if (lo < bound) {
      std::uint64_t threshold = (0 - bound) % bound;
      while (lo < threshold) {
        x = (*this)();
        m = static_cast<unsigned __int128>(x) * bound;
        lo = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

private:
  std::uint64_t state_;
};

// Hash functor for unordered containers over Key.
struct KeyHash {
  std::size_t operator()(const Key& key) const noexcept {
    return static_cast<std::size_t>(hash_pair(key, HashSeed{0x517cc1b727220a95ULL}).h1);
  }
};

}  // namespace filterkit
