#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "filterkit/hashing.hpp"

namespace filterkit {

/**
 * Learned set-membership function: maps a key to a score in [0, 1], where
 * higher means more likely to belong to the key set. Implementations are
 * immutable after construction; scoring is deterministic.
 *
 * The probe counter records how many times score() was called, so callers
 * can verify that a structure consults the oracle only when it should.
 */
class ScoreOracle {
public:
  ScoreOracle() = default;
  ScoreOracle(const ScoreOracle& other) noexcept
      : probes_(other.probes_.load(std::memory_order_relaxed)) {}
  ScoreOracle& operator=(const ScoreOracle& other) noexcept {
    probes_.store(other.probes_.load(std::memory_order_relaxed), std::memory_order_relaxed);
    return *this;
  }
  virtual ~ScoreOracle() = default;

  double score(const Key& key) const {
    probes_.fetch_add(1, std::memory_order_relaxed);
    return score_impl(key);
  }

  // Cost of the oracle in bits: exactly 8x the serialized byte length.
  std::uint64_t size_bits() const { return 8 * serialize().size(); }

  virtual std::vector<std::uint8_t> serialize() const = 0;

  std::uint64_t probe_count() const { return probes_.load(std::memory_order_relaxed); }
  void reset_probe_count() const { probes_.store(0, std::memory_order_relaxed); }

protected:
  virtual double score_impl(const Key& key) const = 0;

private:
  mutable std::atomic<std::uint64_t> probes_{0};
};

struct Interval {
  std::uint64_t lo = 0;  // inclusive
  std::uint64_t hi = 0;  // inclusive
  bool operator==(const Interval&) const = default;
};

/**
 * Two-level step oracle over integer-coded keys: in_score inside any of the
 * intervals, out_score elsewhere.
 */
class IntervalOracle final : public ScoreOracle {
public:
  // Throws std::invalid_argument unless intervals are sorted and disjoint
  // with lo <= hi, both scores lie in [0, 1], and in_score > out_score.
  IntervalOracle(std::vector<Interval> intervals, double in_score, double out_score);

  const std::vector<Interval>& intervals() const noexcept { return intervals_; }
  double in_score() const noexcept { return in_score_; }
  double out_score() const noexcept { return out_score_; }

  std::vector<std::uint8_t> serialize() const override;

protected:
  double score_impl(const Key& key) const override;

private:
  std::vector<Interval> intervals_;
  double in_score_;
  double out_score_;
};

/**
 * Trainable oracle: hashes a key into one of num_buckets buckets and returns
 * that bucket's stored score (the smoothed fraction of training keys in the
 * bucket that were positive).
 */
class BucketHistogramOracle final : public ScoreOracle {
public:
  // Throws std::invalid_argument if num_buckets == 0, the score vector size
  // differs from num_buckets, or any score falls outside [0, 1].
  BucketHistogramOracle(std::uint64_t num_buckets, HashSeed seed, std::vector<double> bucket_scores);

  std::uint64_t num_buckets() const noexcept { return num_buckets_; }
  HashSeed seed() const noexcept { return seed_; }
  const std::vector<double>& bucket_scores() const noexcept { return bucket_scores_; }

  std::vector<std::uint8_t> serialize() const override;

protected:
  double score_impl(const Key& key) const override;

private:
  std::uint64_t num_buckets_;
  HashSeed seed_;
  std::vector<double> bucket_scores_;
};

/**
 * Synthetic oracle with dial-in error rates, for experiments that need a
 * known operating point. Members score 0.75 except a pseudorandom fn_rate
 * fraction that scores 0.25; non-members score 0.25 except an fp_rate
 * fraction that scores 0.75. Pair with threshold 0.5.
 *
 * The per-key coin is a pure hash of (key, seed), so scores are stable
 * across calls and across processes.
 */
class PlantedScoreOracle final : public ScoreOracle {
public:
  // Throws std::invalid_argument unless both rates lie in [0, 1].
  PlantedScoreOracle(std::vector<Key> members, double fp_rate, double fn_rate, HashSeed seed);

  double fp_rate() const noexcept { return fp_rate_; }
  double fn_rate() const noexcept { return fn_rate_; }

  std::vector<std::uint8_t> serialize() const override;

protected:
  double score_impl(const Key& key) const override;

private:
  std::vector<Key> members_;  // sorted
  double fp_rate_;
  double fn_rate_;
  HashSeed seed_;
};

// Factory over the serialized forms of the three oracle types above.
// Throws std::runtime_error on malformed input.
std::shared_ptr<ScoreOracle> deserialize_score_oracle(std::span<const std::uint8_t> bytes);

/**
 * Measured operating point of (oracle, tau) on concrete data.
 *
 * fn is exact over the full key set; fp is an estimate against whatever
 * negative sample the caller considers representative, because the false
 * positive rate of a learned filter depends on the query distribution.
 */
struct OracleProfile {
  double tau = 0;
  double fp = 0;         // fraction of the negative sample scoring >= tau
  double fn = 0;         // exact fraction of positives scoring < tau
  std::uint64_t zeta_bits = 0;
};

// Throws std::invalid_argument if positives is empty, negative_sample is
// empty, the two overlap, or tau is NaN. tau may exceed 1 (then nothing
// passes: fn = 1, fp = 0).
OracleProfile profile(const ScoreOracle& oracle, double tau, std::span<const Key> positives,
                      std::span<const Key> negative_sample);

// One profile per threshold, in the given order. Throws as profile does,
// plus std::invalid_argument on an empty threshold list.
std::vector<OracleProfile> sweep_thresholds(const ScoreOracle& oracle, std::span<const Key> positives,
                                            std::span<const Key> negative_sample,
                                            std::span<const double> taus);

// Builds a BucketHistogramOracle from labeled keys. Bucket i's score is
// (1 + #positives in i) / (2 + #training keys in i); the add-one smoothing
// keeps scores strictly inside (0, 1) so threshold sweeps stay meaningful.
// Throws std::invalid_argument if positives is empty or num_buckets == 0.
BucketHistogramOracle train_bucket_oracle(std::span<const Key> positives,
                                          std::span<const Key> negatives, std::uint64_t num_buckets,
                                          HashSeed seed);

/**
 * Learned key -> value function for the value-map pipeline: returns a
 * value_bits()-wide value, or null for keys it knows nothing about.
 */
class ValueOracle {
public:
  ValueOracle() = default;
  ValueOracle(const ValueOracle& other) noexcept
      : probes_(other.probes_.load(std::memory_order_relaxed)) {}
  ValueOracle& operator=(const ValueOracle& other) noexcept {
    probes_.store(other.probes_.load(std::memory_order_relaxed), std::memory_order_relaxed);
    return *this;
  }
  virtual ~ValueOracle() = default;

  std::optional<std::uint64_t> predict(const Key& key) const {
    probes_.fetch_add(1, std::memory_order_relaxed);
    return predict_impl(key);
  }

  virtual std::uint32_t value_bits() const = 0;
  std::uint64_t size_bits() const { return 8 * serialize().size(); }
  virtual std::vector<std::uint8_t> serialize() const = 0;

  std::uint64_t probe_count() const { return probes_.load(std::memory_order_relaxed); }
  void reset_probe_count() const { probes_.store(0, std::memory_order_relaxed); }

protected:
  virtual std::optional<std::uint64_t> predict_impl(const Key& key) const = 0;

private:
  mutable std::atomic<std::uint64_t> probes_{0};
};

/**
 * Bucket table value oracle: a key's prediction is its hash bucket's stored
 * value, which training sets to the majority value among the bucket's
 * training pairs (ties broken toward the lowest value). Empty buckets
 * predict null. Deliberately lossy: colliding keys share one value.
 */
class BucketValueOracle final : public ValueOracle {
public:
  // Throws std::invalid_argument if num_buckets == 0, u_bits is outside
  // [1, 64], the table size differs from num_buckets, or a stored value
  // does not fit in u_bits.
  BucketValueOracle(std::uint32_t u_bits, std::uint64_t num_buckets, HashSeed seed,
                    std::vector<std::optional<std::uint64_t>> bucket_values);

  std::uint32_t value_bits() const override { return u_bits_; }
  std::uint64_t num_buckets() const noexcept { return num_buckets_; }
  HashSeed seed() const noexcept { return seed_; }

  std::vector<std::uint8_t> serialize() const override;

protected:
  std::optional<std::uint64_t> predict_impl(const Key& key) const override;

private:
  std::uint32_t u_bits_;
  std::uint64_t num_buckets_;
  HashSeed seed_;
  std::vector<std::optional<std::uint64_t>> bucket_values_;
};

// Trains a BucketValueOracle on (key, value) pairs. An empty pair list
// yields the all-null oracle. Throws std::invalid_argument on parameter
// violations or a value not fitting in u_bits.
BucketValueOracle train_bucket_value_oracle(std::span<const std::pair<Key, std::uint64_t>> pairs,
                                            std::uint32_t u_bits, std::uint64_t num_buckets,
                                            HashSeed seed);

// Factory over serialized ValueOracle forms.
std::shared_ptr<ValueOracle> deserialize_value_oracle(std::span<const std::uint8_t> bytes);

}  // namespace filterkit
