#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "filterkit/bloom.hpp"
#include "filterkit/oracle.hpp"

namespace filterkit {

/**
 * Learned filter: a score oracle with threshold tau, backed by a Bloom
 * filter holding exactly the keys the oracle would miss (score < tau at
 * build time). A query answers yes when the score reaches tau, otherwise it
 * defers to the backup filter, so no key of the build set is ever denied.
 *
 * When no key scores below tau the backup is omitted entirely: it costs
 * zero bits and rejects everything. The requested budget is kept so a later
 * insert can still materialize a backup.
 */
class LearnedBloomFilter {
public:
  // backup_bits is the total bit budget for the backup filter; its hash
  // count comes from optimal_hash_count over the realized bits-per-key.
  // Seeds for the backup derive from seed at a fixed lane, so equal inputs
  // rebuild identical filters.
  // Throws std::invalid_argument if tau is NaN, or backup_bits == 0 while
  // some key scores below tau.
  static LearnedBloomFilter build(std::shared_ptr<const ScoreOracle> oracle, double tau,
                                  std::span<const Key> keys, std::uint64_t backup_bits,
                                  HashSeed seed);

  bool query(const Key& key) const;

  // No-op if the key already queries positive; otherwise adds it to the
  // backup filter. Throws std::logic_error when the backup was omitted and
  // the build-time budget was zero, since there is nowhere to put the key.
  void insert(const Key& key);

  const ScoreOracle& oracle() const noexcept { return *oracle_; }
  double tau() const noexcept { return tau_; }
  HashSeed master_seed() const noexcept { return master_seed_; }
  const BloomFilter* backup() const noexcept { return backup_ ? &*backup_ : nullptr; }
  std::uint64_t backup_budget_bits() const noexcept { return backup_budget_bits_; }

  // Oracle bits plus realized backup bits.
  std::uint64_t total_bits() const;

  std::vector<std::uint8_t> serialize() const;
  static LearnedBloomFilter deserialize(std::span<const std::uint8_t> bytes);

private:
  LearnedBloomFilter() = default;

  std::shared_ptr<const ScoreOracle> oracle_;
  double tau_ = 0;
  HashSeed master_seed_;
  std::uint64_t backup_budget_bits_ = 0;
  std::optional<BloomFilter> backup_;
};

/**
 * Sandwiched learned filter: an initial Bloom filter over the whole key set
 * sits in front of the oracle, so most non-members are rejected before the
 * oracle is consulted; a backup filter behind the oracle restores the
 * no-false-negative guarantee exactly as in LearnedBloomFilter.
 *
 * Budgets are bits per key; realized filter sizes are floored to whole
 * bits. A zero (or sub-one-bit) initial budget omits the initial filter,
 * making the structure behave exactly like LearnedBloomFilter.
 */
class SandwichedLearnedBloomFilter {
public:
  // Throws std::invalid_argument on negative or non-finite budgets, NaN
  // tau, or a zero backup budget while some key scores below tau.
  static SandwichedLearnedBloomFilter build(std::shared_ptr<const ScoreOracle> oracle, double tau,
                                            std::span<const Key> keys, double b1_bits_per_key,
                                            double b2_bits_per_key, HashSeed seed);

  bool query(const Key& key) const;

  const ScoreOracle& oracle() const noexcept { return *oracle_; }
  double tau() const noexcept { return tau_; }
  HashSeed master_seed() const noexcept { return master_seed_; }
  const BloomFilter* initial() const noexcept { return initial_ ? &*initial_ : nullptr; }
  const BloomFilter* backup() const noexcept { return backup_ ? &*backup_ : nullptr; }

  // Oracle bits plus realized initial and backup bits.
  std::uint64_t total_bits() const;

  std::vector<std::uint8_t> serialize() const;
  static SandwichedLearnedBloomFilter deserialize(std::span<const std::uint8_t> bytes);

private:
  SandwichedLearnedBloomFilter() = default;

  std::shared_ptr<const ScoreOracle> oracle_;
  double tau_ = 0;
  HashSeed master_seed_;
  std::optional<BloomFilter> initial_;
  std::optional<BloomFilter> backup_;
};

}  // namespace filterkit
