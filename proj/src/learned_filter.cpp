#include "filterkit/learned_filter.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "filterkit/serial.hpp"

namespace filterkit {

namespace {

constexpr std::uint32_t kLearnedMagic = 0x464C4B46;   // "FKLF"
constexpr std::uint32_t kSandwichMagic = 0x57534B46;  // "FKSW"
constexpr std::uint16_t kVersion = 1;

// Seed lanes: 1 for the initial filter, 2 for the backup filter. Shared
// between both structures so a sandwich with no initial filter rebuilds the
// exact same backup as LearnedBloomFilter from the same master seed.
constexpr std::uint64_t kInitialLane = 1;
constexpr std::uint64_t kBackupLane = 2;

std::vector<Key> sub_threshold_keys(const ScoreOracle& oracle, double tau, std::span<const Key> keys) {
  std::vector<Key> below;
  for (const Key& key : keys)
    if (oracle.score(key) < tau) below.push_back(key);
  return below;
}

BloomFilter build_backup(std::span<const Key> false_negatives, std::uint64_t backup_bits,
                         HashSeed master) {
  BloomParams params;
  params.m_bits = backup_bits;
  params.k = optimal_hash_count(static_cast<double>(backup_bits) /
                                static_cast<double>(false_negatives.size()));
  params.seed = derive_seed(master, kBackupLane);
  return BloomFilter::build(params, false_negatives);
}

void check_tau(double tau) {
  if (std::isnan(tau)) throw std::invalid_argument("learned filter: tau must not be NaN");
}

void write_blob(ByteWriter& w, const std::vector<std::uint8_t>& blob) {
  w.u32(static_cast<std::uint32_t>(blob.size()));
  w.bytes(blob);
}

std::span<const std::uint8_t> read_blob(ByteReader& r) { return r.raw(r.u32()); }

void write_optional_filter(ByteWriter& w, const std::optional<BloomFilter>& filter) {
  w.u8(filter ? 1 : 0);
  if (filter) write_blob(w, filter->serialize());
}

std::optional<BloomFilter> read_optional_filter(ByteReader& r) {
  if (r.u8() == 0) return std::nullopt;
  return BloomFilter::deserialize(read_blob(r));
}

}  // namespace

LearnedBloomFilter LearnedBloomFilter::build(std::shared_ptr<const ScoreOracle> oracle, double tau,
                                             std::span<const Key> keys, std::uint64_t backup_bits,
                                             HashSeed seed) {
  check_tau(tau);
  if (!oracle) throw std::invalid_argument("learned filter: oracle must not be null");
  const std::vector<Key> below = sub_threshold_keys(*oracle, tau, keys);
  if (!below.empty() && backup_bits == 0)
    throw std::invalid_argument("learned filter: backup budget is zero but keys score below tau");

  LearnedBloomFilter filter;
  filter.oracle_ = std::move(oracle);
  filter.tau_ = tau;
  filter.master_seed_ = seed;
  filter.backup_budget_bits_ = backup_bits;
  if (!below.empty()) filter.backup_ = build_backup(below, backup_bits, seed);
  return filter;
}

bool LearnedBloomFilter::query(const Key& key) const {
  if (oracle_->score(key) >= tau_) return true;
  return backup_ && backup_->contains(key);
}

void LearnedBloomFilter::insert(const Key& key) {
  if (query(key)) return;
  if (!backup_) {
    if (backup_budget_bits_ == 0)
      throw std::logic_error("learned filter: cannot insert, no backup budget");
    BloomParams params;
    params.m_bits = backup_budget_bits_;
    // First resident key: the whole budget is its bits-per-key; cap the
    // hash count so a huge budget stays usable.
    params.k = std::min<std::uint32_t>(
        optimal_hash_count(static_cast<double>(backup_budget_bits_)), 64);
    params.seed = derive_seed(master_seed_, kBackupLane);
    backup_ = BloomFilter::build(params, {});
  }
  backup_->insert(key);
}

std::uint64_t LearnedBloomFilter::total_bits() const {
  return oracle_->size_bits() + (backup_ ? backup_->size_bits() : 0);
}

std::vector<std::uint8_t> LearnedBloomFilter::serialize() const {
  ByteWriter w;
  w.u32(kLearnedMagic);
  w.u16(kVersion);
  w.f64(tau_);
  w.u64(master_seed_.value);
  w.u64(backup_budget_bits_);
  write_blob(w, oracle_->serialize());
  write_optional_filter(w, backup_);
  return w.take();
}

LearnedBloomFilter LearnedBloomFilter::deserialize(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  if (r.u32() != kLearnedMagic) throw std::runtime_error("learned filter: bad magic");
  if (r.u16() != kVersion) throw std::runtime_error("learned filter: unsupported version");
  LearnedBloomFilter filter;
  filter.tau_ = r.f64();
  filter.master_seed_.value = r.u64();
  filter.backup_budget_bits_ = r.u64();
  filter.oracle_ = deserialize_score_oracle(read_blob(r));
  filter.backup_ = read_optional_filter(r);
  r.expect_end();
  return filter;
}

SandwichedLearnedBloomFilter SandwichedLearnedBloomFilter::build(
    std::shared_ptr<const ScoreOracle> oracle, double tau, std::span<const Key> keys,
    double b1_bits_per_key, double b2_bits_per_key, HashSeed seed) {
  check_tau(tau);
  if (!oracle) throw std::invalid_argument("sandwich filter: oracle must not be null");
  if (!(b1_bits_per_key >= 0) || !std::isfinite(b1_bits_per_key))
    throw std::invalid_argument("sandwich filter: b1 must be finite and >= 0");
  if (!(b2_bits_per_key >= 0) || !std::isfinite(b2_bits_per_key))
    throw std::invalid_argument("sandwich filter: b2 must be finite and >= 0");

  const double n = static_cast<double>(keys.size());
  const auto initial_bits = static_cast<std::uint64_t>(std::floor(b1_bits_per_key * n));
  const auto backup_bits = static_cast<std::uint64_t>(std::floor(b2_bits_per_key * n));

  const std::vector<Key> below = sub_threshold_keys(*oracle, tau, keys);
  if (!below.empty() && backup_bits == 0)
    throw std::invalid_argument("sandwich filter: backup budget is zero but keys score below tau");

  SandwichedLearnedBloomFilter filter;
  filter.oracle_ = std::move(oracle);
  filter.tau_ = tau;
  filter.master_seed_ = seed;
  if (initial_bits >= 1) {
    BloomParams params;
    params.m_bits = initial_bits;
    params.k = optimal_hash_count(static_cast<double>(initial_bits) / n);
    params.seed = derive_seed(seed, kInitialLane);
    filter.initial_ = BloomFilter::build(params, keys);
  }
  if (!below.empty()) filter.backup_ = build_backup(below, backup_bits, seed);
  return filter;
}

bool SandwichedLearnedBloomFilter::query(const Key& key) const {
  if (initial_ && !initial_->contains(key)) return false;
  if (oracle_->score(key) >= tau_) return true;
  return backup_ && backup_->contains(key);
}

std::uint64_t SandwichedLearnedBloomFilter::total_bits() const {
  return oracle_->size_bits() + (initial_ ? initial_->size_bits() : 0) +
         (backup_ ? backup_->size_bits() : 0);
}

std::vector<std::uint8_t> SandwichedLearnedBloomFilter::serialize() const {
  ByteWriter w;
  w.u32(kSandwichMagic);
  w.u16(kVersion);
  w.f64(tau_);
  w.u64(master_seed_.value);
  write_blob(w, oracle_->serialize());
  write_optional_filter(w, initial_);
  write_optional_filter(w, backup_);
  return w.take();
}

SandwichedLearnedBloomFilter SandwichedLearnedBloomFilter::deserialize(
    std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  if (r.u32() != kSandwichMagic) throw std::runtime_error("sandwich filter: bad magic");
  if (r.u16() != kVersion) throw std::runtime_error("sandwich filter: unsupported version");
  SandwichedLearnedBloomFilter filter;
  filter.tau_ = r.f64();
  filter.master_seed_.value = r.u64();
  filter.oracle_ = deserialize_score_oracle(read_blob(r));
  filter.initial_ = read_optional_filter(r);
  filter.backup_ = read_optional_filter(r);
  r.expect_end();
  return filter;
}

}  // namespace filterkit
