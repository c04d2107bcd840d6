#include "filterkit/bloom.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace filterkit {

namespace {

constexpr std::uint32_t kMagic = 0x46424B46;  // "FKBF"
constexpr std::uint16_t kVersion = 1;

void validate(const BloomParams& params) {
  if (params.m_bits == 0) throw std::invalid_argument("bloom: m_bits must be >= 1");
  if (params.k == 0) throw std::invalid_argument("bloom: k must be >= 1");
}

}  // namespace

BloomFilter::BloomFilter(BloomParams params) : params_(params), bits_(params.m_bits) {}

BloomFilter BloomFilter::build(const BloomParams& params, std::span<const Key> keys) {
  validate(params);
  BloomFilter filter(params);
  for (const Key& key : keys) filter.insert(key);
  return filter;
}

void BloomFilter::insert(const Key& key) {
  const HashPair hp = hash_pair(key, params_.seed);
  for (std::uint64_t idx : index_sequence(hp.h1, hp.h2, params_.k, params_.m_bits)) bits_.set(idx);
  ++n_inserted_;
}

bool BloomFilter::contains(const Key& key) const {
  const HashPair hp = hash_pair(key, params_.seed);
  std::uint64_t h = hp.h1;
  for (std::uint32_t i = 0; i < params_.k; ++i) {
    if (!bits_.get(h % params_.m_bits)) return false;
    h += hp.h2;
  }
  return true;
}

std::vector<std::uint8_t> BloomFilter::serialize() const {
  ByteWriter w;
  w.u32(kMagic);
  w.u16(kVersion);
  w.u64(params_.m_bits);
  w.u32(params_.k);
  w.u64(params_.seed.value);
  w.u64(n_inserted_);
  bits_.serialize(w);
  return w.take();
}

BloomFilter BloomFilter::deserialize(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  if (r.u32() != kMagic) throw std::runtime_error("bloom: bad magic");
  if (r.u16() != kVersion) throw std::runtime_error("bloom: unsupported version");
  BloomParams params;
  params.m_bits = r.u64();
  params.k = r.u32();
  params.seed.value = r.u64();
  validate(params);
  const std::uint64_t n = r.u64();
  BloomFilter filter(params);
  filter.bits_ = BitArray::deserialize(r, params.m_bits);
  filter.n_inserted_ = n;
  r.expect_end();
  return filter;
}

std::uint32_t optimal_hash_count(double bits_per_key) {
  if (!(bits_per_key > 0)) throw std::invalid_argument("optimal_hash_count: bits_per_key must be > 0");
  const double k_real = bits_per_key * std::numbers::ln2;
  const auto fpp = [bits_per_key](double k) {
    return std::pow(1.0 - std::exp(-k / bits_per_key), k);
  };
  const double lo = std::max(1.0, std::floor(k_real));
  const double hi = std::max(1.0, std::ceil(k_real));
  const double best = fpp(lo) <= fpp(hi) ? lo : hi;
  return static_cast<std::uint32_t>(best);
}

}  // namespace filterkit
