#include "filterkit/hashing.hpp"

#include <stdexcept>

namespace filterkit {

namespace {

inline std::uint64_t rotl64(std::uint64_t x, int r) noexcept { return (x << r) | (x >> (64 - r)); }

inline std::uint64_t fmix64(std::uint64_t k) noexcept {
  k ^= k >> 33;
  k *= 0xFF51AFD7ED558CCDULL;
  k ^= k >> 33;
  k *= 0xC4CEB9FE1A85EC53ULL;
  k ^= k >> 33;
  return k;
}

// Reads 8 bytes little-endian, independent of host byte order.
inline std::uint64_t load_le64(const unsigned char* p) noexcept {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

}  // namespace

// MurmurHash3 x64 128-bit variant, with both lanes seeded from the 64-bit
// seed. Not cryptographic; adversarial key choice is out of scope.
HashPair hash_pair(const Key& key, HashSeed seed) noexcept {
  const auto* data = reinterpret_cast<const unsigned char*>(key.bytes().data());
  const std::size_t len = key.bytes().size();
  const std::size_t nblocks = len / 16;

  std::uint64_t h1 = seed.value;
  std::uint64_t h2 = seed.value;

  const std::uint64_t c1 = 0x87C37B91114253D5ULL;
  const std::uint64_t c2 = 0x4CF5AD432745937FULL;

  for (std::size_t i = 0; i < nblocks; ++i) {
    std::uint64_t k1 = load_le64(data + i * 16);
    std::uint64_t k2 = load_le64(data + i * 16 + 8);

    k1 *= c1;
    k1 = rotl64(k1, 31);
    k1 *= c2;
    h1 ^= k1;
    h1 = rotl64(h1, 27);
    h1 += h2;
    h1 = h1 * 5 + 0x52DCE729;

    k2 *= c2;
    k2 = rotl64(k2, 33);
    k2 *= c1;
    h2 ^= k2;
    h2 = rotl64(h2, 31);
    h2 += h1;
    h2 = h2 * 5 + 0x38495AB5;
  }

  const unsigned char* tail = data + nblocks * 16;
  std::uint64_t k1 = 0;
  std::uint64_t k2 = 0;
  switch (len & 15) {
    case 15: k2 ^= std::uint64_t(tail[14]) << 48; [[fallthrough]];
    case 14: k2 ^= std::uint64_t(tail[13]) << 40; [[fallthrough]];
    case 13: k2 ^= std::uint64_t(tail[12]) << 32; [[fallthrough]];
    case 12: k2 ^= std::uint64_t(tail[11]) << 24; [[fallthrough]];
    case 11: k2 ^= std::uint64_t(tail[10]) << 16; [[fallthrough]];
    case 10: k2 ^= std::uint64_t(tail[9]) << 8; [[fallthrough]];
    case 9:
      k2 ^= std::uint64_t(tail[8]);
      k2 *= c2;
      k2 = rotl64(k2, 33);
      k2 *= c1;
      h2 ^= k2;
      [[fallthrough]];
    case 8: k1 ^= std::uint64_t(tail[7]) << 56; [[fallthrough]];
    case 7: k1 ^= std::uint64_t(tail[6]) << 48; [[fallthrough]];
    case 6: k1 ^= std::uint64_t(tail[5]) << 40; [[fallthrough]];
    case 5: k1 ^= std::uint64_t(tail[4]) << 32; [[fallthrough]];
    case 4: k1 ^= std::uint64_t(tail[3]) << 24; [[fallthrough]];
    case 3: k1 ^= std::uint64_t(tail[2]) << 16; [[fallthrough]];
    case 2: k1 ^= std::uint64_t(tail[1]) << 8; [[fallthrough]];
    case 1:
      k1 ^= std::uint64_t(tail[0]);
      k1 *= c1;
      k1 = rotl64(k1, 31);
      k1 *= c2;
      h1 ^= k1;
      break;
    case 0: break;
  }

  h1 ^= len;
  h2 ^= len;
  h1 += h2;
  h2 += h1;
  h1 = fmix64(h1);
  h2 = fmix64(h2);
  h1 += h2;
  h2 += h1;

  return HashPair{h1, h2 | 1ULL};
}

std::vector<std::uint64_t> index_sequence(std::uint64_t h1, std::uint64_t h2, std::uint32_t k,
                                          std::uint64_t m) {
  if (m == 0) throw std::invalid_argument("index_sequence: table size must be >= 1");
  if (k == 0) throw std::invalid_argument("index_sequence: hash count must be >= 1");
  std::vector<std::uint64_t> out;
  out.reserve(k);
  std::uint64_t h = h1;
  for (std::uint32_t i = 0; i < k; ++i) {
    out.push_back(h % m);
    h += h2;  // wraps mod 2^64
  }
  return out;
}

HashSeed derive_seed(HashSeed master, std::uint64_t lane) noexcept {
  SplitMix64 rng(master.value ^ (0x9E3779B97F4A7C15ULL * (lane + 1)));
  return HashSeed{rng()};
}

}  // namespace filterkit
