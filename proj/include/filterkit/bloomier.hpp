#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "filterkit/analysis.hpp"
#include "filterkit/bit_array.hpp"
#include "filterkit/bloom.hpp"
#include "filterkit/oracle.hpp"

namespace filterkit {

struct BloomierParams {
  double c = 1.23;             // cells per key, must be > 1
  std::uint32_t u = 16;        // value width in bits, >= 1
  std::uint32_t r = 8;         // validity-check width in bits; u + r <= 64
  std::uint32_t num_hashes = 3;  // cells probed per key, >= 2
  HashSeed seed;
  bool operator==(const BloomierParams&) const = default;
};

/**
 * Static key -> value map with one-sided error: every stored key returns
 * its exact u-bit value; a non-key returns null except with probability
 * 2^-r, when it returns an arbitrary value.
 *
 * Layout is an array of ceil(c * z) cells of u + r bits. A lookup XORs the
 * num_hashes cells its key probes; the result is valid when the top r bits
 * are zero. Construction orders the keys by hypergraph peeling and assigns
 * one owned cell per key in reverse; cells owned by no key hold seeded
 * uniform random words, which is what gives non-keys the 2^-r rate.
 */
class BloomierFilter {
public:
  // Tries derived seeds until the probe hypergraph peels completely, up to
  // 100 attempts, then throws std::runtime_error (raise c or change the
  // seed). c is quantized to a 32-bit fixed-point fraction at build time so
  // a filter serializes losslessly.
  // Throws std::invalid_argument on parameter violations, an empty or
  // duplicate-key pair list, or a value not fitting in u bits.
  static BloomierFilter build(std::span<const std::pair<Key, std::uint64_t>> pairs,
                              const BloomierParams& params);

  std::optional<std::uint64_t> lookup(const Key& key) const;

  const BloomierParams& params() const noexcept { return params_; }
  std::uint64_t z() const noexcept { return z_; }
  std::uint64_t num_cells() const noexcept { return num_cells_; }
  std::uint64_t size_bits() const noexcept { return num_cells_ * (params_.u + params_.r); }

  // Seeds tried during construction; 1 means the first graph peeled.
  std::uint32_t attempts() const noexcept { return attempts_; }

  bool operator==(const BloomierFilter&) const = default;

  std::vector<std::uint8_t> serialize() const;
  static BloomierFilter deserialize(std::span<const std::uint8_t> bytes);

private:
  BloomierFilter() = default;

  BloomierParams params_;
  HashSeed effective_seed_;  // derived seed whose graph peeled
  std::uint32_t attempts_ = 0;
  std::uint64_t z_ = 0;
  std::uint64_t num_cells_ = 0;
  BitArray cells_;
};

/**
 * Value map with a learned shortcut: a value oracle predicts most keys'
 * values; keys the oracle gets wrong are recorded in a Bloom filter and
 * stored exactly in a backup BloomierFilter. A lookup consults the Bloom
 * filter first: a hit goes to the backup, a miss trusts the oracle.
 *
 * Keys the oracle predicts correctly can still hit the Bloom filter by
 * accident; they are stored in the backup too, so every built key returns
 * its exact value.
 */
class LearnedBloomierFilter {
public:
  // fn_filter_bits_per_key sizes the Bloom filter at that many bits per
  // mispredicted key. A perfect oracle yields no Bloom filter and no
  // backup. Throws std::invalid_argument on an empty or duplicate-key pair
  // list, a value not fitting in backup_params.u, a negative budget, or a
  // budget that floors to zero bits while mispredictions exist; propagates
  // BloomierFilter build errors.
  static LearnedBloomierFilter build(std::shared_ptr<const ValueOracle> oracle,
                                     std::span<const std::pair<Key, std::uint64_t>> pairs,
                                     double fn_filter_bits_per_key,
                                     const BloomierParams& backup_params);

  std::optional<std::uint64_t> lookup(const Key& key) const;

  const ValueOracle& oracle() const noexcept { return *oracle_; }
  const BloomFilter* fn_filter() const noexcept { return fn_filter_ ? &*fn_filter_ : nullptr; }
  const BloomierFilter* backup() const noexcept { return backup_ ? &*backup_ : nullptr; }

  // Keys whose oracle prediction was wrong or null at build time.
  std::uint64_t false_negative_count() const noexcept { return fn_count_; }
  // Keys stored in the backup: mispredicted keys plus accidental hits.
  std::uint64_t backup_key_count() const noexcept { return backup_ ? backup_->z() : 0; }

  // Oracle bits plus Bloom filter bits plus backup cell bits.
  std::uint64_t total_bits() const;

private:
  LearnedBloomierFilter() = default;

  std::shared_ptr<const ValueOracle> oracle_;
  std::optional<BloomFilter> fn_filter_;
  std::optional<BloomierFilter> backup_;
  std::uint64_t fn_count_ = 0;
};

// Model total size in bits of the learned pipeline over m keys:
// zeta + b*m*fn + c*m*(fn + (1 - fn)*alpha^b)*(u + r_prime). The middle
// term is the Bloom filter over the fn*m mispredicted keys; the last is the
// backup cell array over mispredictions plus leaked correct keys.
// Throws std::invalid_argument on out-of-range arguments.
double learned_bloomier_space_model(double zeta_bits, double m_keys, double fn, double b, double c,
                                    double u, double r_prime, FilterModel model);

// Model false positive (non-null) rate for non-keys:
// fp*(1 - alpha^b) + alpha^b * 2^-r_prime. The first term is oracle false
// positives that miss the Bloom filter; the second is non-keys that hit it
// and then slip past the backup's validity check. r_prime may be +infinity
// (a backup that never validates a non-key).
// Throws std::invalid_argument on out-of-range arguments.
double learned_bloomier_fpr_model(double fp, double b, double r_prime, FilterModel model);

}  // namespace filterkit
