#include "filterkit/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <unordered_set>

#include "filterkit/serial.hpp"

namespace filterkit {

namespace {

constexpr std::uint32_t kScoreMagic = 0x4F534B46;  // "FKSO"
constexpr std::uint32_t kValueMagic = 0x4F564B46;  // "FKVO"
constexpr std::uint16_t kVersion = 1;
constexpr std::uint8_t kTagInterval = 1;
constexpr std::uint8_t kTagBucketHistogram = 2;
constexpr std::uint8_t kTagPlanted = 3;
constexpr std::uint8_t kTagBucketValue = 1;

// Deterministic per-key coin in [0, 1).
double key_uniform(const Key& key, HashSeed seed) {
  return static_cast<double>(hash_pair(key, seed).h1 >> 11) * 0x1.0p-53;
}

std::uint64_t bucket_of(const Key& key, HashSeed seed, std::uint64_t num_buckets) {
  return hash_pair(key, seed).h1 % num_buckets;
}

void write_header(ByteWriter& w, std::uint32_t magic, std::uint8_t tag) {
  w.u32(magic);
  w.u16(kVersion);
  w.u8(tag);
}

std::uint8_t read_header(ByteReader& r, std::uint32_t magic, const char* what) {
  if (r.u32() != magic) throw std::runtime_error(std::string(what) + ": bad magic");
  if (r.u16() != kVersion) throw std::runtime_error(std::string(what) + ": unsupported version");
  return r.u8();
}

}  // namespace

IntervalOracle::IntervalOracle(std::vector<Interval> intervals, double in_score, double out_score)
    : intervals_(std::move(intervals)), in_score_(in_score), out_score_(out_score) {
  if (!(in_score >= 0 && in_score <= 1) || !(out_score >= 0 && out_score <= 1))
    throw std::invalid_argument("interval oracle: scores must lie in [0, 1]");
  if (!(in_score > out_score))
    throw std::invalid_argument("interval oracle: in_score must exceed out_score");
  for (std::size_t i = 0; i < intervals_.size(); ++i) {
    if (intervals_[i].lo > intervals_[i].hi)
      throw std::invalid_argument("interval oracle: interval with lo > hi");
    if (i > 0 && intervals_[i - 1].hi >= intervals_[i].lo)
      throw std::invalid_argument("interval oracle: intervals must be sorted and disjoint");
  }
}

double IntervalOracle::score_impl(const Key& key) const {
  const std::uint64_t v = key.as_u64();
  auto it = std::lower_bound(intervals_.begin(), intervals_.end(), v,
                             [](const Interval& iv, std::uint64_t x) { return iv.hi < x; });
  if (it != intervals_.end() && it->lo <= v) return in_score_;
  return out_score_;
}

std::vector<std::uint8_t> IntervalOracle::serialize() const {
  ByteWriter w;
  write_header(w, kScoreMagic, kTagInterval);
  w.u32(static_cast<std::uint32_t>(intervals_.size()));
  for (const Interval& iv : intervals_) {
    w.u64(iv.lo);
    w.u64(iv.hi);
  }
  w.f64(in_score_);
  w.f64(out_score_);
  return w.take();
}

BucketHistogramOracle::BucketHistogramOracle(std::uint64_t num_buckets, HashSeed seed,
                                             std::vector<double> bucket_scores)
    : num_buckets_(num_buckets), seed_(seed), bucket_scores_(std::move(bucket_scores)) {
  if (num_buckets == 0) throw std::invalid_argument("bucket oracle: num_buckets must be >= 1");
  if (bucket_scores_.size() != num_buckets)
    throw std::invalid_argument("bucket oracle: score table size must equal num_buckets");
  for (double s : bucket_scores_)
    if (!(s >= 0 && s <= 1)) throw std::invalid_argument("bucket oracle: scores must lie in [0, 1]");
}

double BucketHistogramOracle::score_impl(const Key& key) const {
  return bucket_scores_[bucket_of(key, seed_, num_buckets_)];
}

std::vector<std::uint8_t> BucketHistogramOracle::serialize() const {
  ByteWriter w;
  write_header(w, kScoreMagic, kTagBucketHistogram);
  w.u64(num_buckets_);
  w.u64(seed_.value);
  for (double s : bucket_scores_) w.f64(s);
  return w.take();
}

PlantedScoreOracle::PlantedScoreOracle(std::vector<Key> members, double fp_rate, double fn_rate,
                                       HashSeed seed)
    : members_(std::move(members)), fp_rate_(fp_rate), fn_rate_(fn_rate), seed_(seed) {
  if (!(fp_rate >= 0 && fp_rate <= 1) || !(fn_rate >= 0 && fn_rate <= 1))
    throw std::invalid_argument("planted oracle: rates must lie in [0, 1]");
  std::sort(members_.begin(), members_.end());
  members_.erase(std::unique(members_.begin(), members_.end()), members_.end());
}

double PlantedScoreOracle::score_impl(const Key& key) const {
  const bool member = std::binary_search(members_.begin(), members_.end(), key);
  const double u = key_uniform(key, seed_);
  if (member) return u < fn_rate_ ? 0.25 : 0.75;
  return u < fp_rate_ ? 0.75 : 0.25;
}

std::vector<std::uint8_t> PlantedScoreOracle::serialize() const {
  ByteWriter w;
  write_header(w, kScoreMagic, kTagPlanted);
  w.f64(fp_rate_);
  w.f64(fn_rate_);
  w.u64(seed_.value);
  w.u64(members_.size());
  for (const Key& key : members_) {
    w.u32(static_cast<std::uint32_t>(key.bytes().size()));
    w.bytes(key.bytes());
  }
  return w.take();
}

std::shared_ptr<ScoreOracle> deserialize_score_oracle(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  const std::uint8_t tag = read_header(r, kScoreMagic, "score oracle");
  std::shared_ptr<ScoreOracle> out;
  switch (tag) {
    case kTagInterval: {
      const std::uint32_t n = r.u32();
      std::vector<Interval> intervals(n);
      for (Interval& iv : intervals) {
        iv.lo = r.u64();
        iv.hi = r.u64();
      }
      const double in_score = r.f64();
      const double out_score = r.f64();
      out = std::make_shared<IntervalOracle>(std::move(intervals), in_score, out_score);
      break;
    }
    case kTagBucketHistogram: {
      const std::uint64_t n = r.u64();
      const HashSeed seed{r.u64()};
      if (n > r.remaining() / 8) throw std::runtime_error("score oracle: bucket count exceeds payload");
      std::vector<double> scores(n);
      for (double& s : scores) s = r.f64();
      out = std::make_shared<BucketHistogramOracle>(n, seed, std::move(scores));
      break;
    }
    case kTagPlanted: {
      const double fp_rate = r.f64();
      const double fn_rate = r.f64();
      const HashSeed seed{r.u64()};
      const std::uint64_t n = r.u64();
      std::vector<Key> members;
      members.reserve(n);
      for (std::uint64_t i = 0; i < n; ++i) {
        const std::uint32_t len = r.u32();
        auto raw = r.raw(len);
        members.push_back(Key::from_bytes(
            std::string_view(reinterpret_cast<const char*>(raw.data()), raw.size())));
      }
      out = std::make_shared<PlantedScoreOracle>(std::move(members), fp_rate, fn_rate, seed);
      break;
    }
    default:
      throw std::runtime_error("score oracle: unknown type tag");
  }
  r.expect_end();
  return out;
}

OracleProfile profile(const ScoreOracle& oracle, double tau, std::span<const Key> positives,
                      std::span<const Key> negative_sample) {
  if (std::isnan(tau)) throw std::invalid_argument("profile: tau must not be NaN");
  if (positives.empty()) throw std::invalid_argument("profile: positives must be nonempty");
  if (negative_sample.empty()) throw std::invalid_argument("profile: negative sample must be nonempty");
  std::unordered_set<Key, KeyHash> positive_set(positives.begin(), positives.end());
  for (const Key& key : negative_sample)
    if (positive_set.contains(key))
      throw std::invalid_argument("profile: negative sample overlaps the positive set");

  std::uint64_t below = 0;
  for (const Key& key : positives)
    if (oracle.score(key) < tau) ++below;
  std::uint64_t passing = 0;
  for (const Key& key : negative_sample)
    if (oracle.score(key) >= tau) ++passing;

  OracleProfile p;
  p.tau = tau;
  p.fn = static_cast<double>(below) / static_cast<double>(positives.size());
  p.fp = static_cast<double>(passing) / static_cast<double>(negative_sample.size());
  p.zeta_bits = oracle.size_bits();
  return p;
}

std::vector<OracleProfile> sweep_thresholds(const ScoreOracle& oracle, std::span<const Key> positives,
                                            std::span<const Key> negative_sample,
                                            std::span<const double> taus) {
  if (taus.empty()) throw std::invalid_argument("sweep_thresholds: threshold list must be nonempty");
  std::vector<OracleProfile> out;
  out.reserve(taus.size());
  for (double tau : taus) out.push_back(profile(oracle, tau, positives, negative_sample));
  return out;
}

BucketHistogramOracle train_bucket_oracle(std::span<const Key> positives,
                                          std::span<const Key> negatives, std::uint64_t num_buckets,
                                          HashSeed seed) {
  if (positives.empty()) throw std::invalid_argument("train_bucket_oracle: positives must be nonempty");
  if (num_buckets == 0) throw std::invalid_argument("train_bucket_oracle: num_buckets must be >= 1");
  std::vector<std::uint64_t> pos_count(num_buckets, 0);
  std::vector<std::uint64_t> total_count(num_buckets, 0);
  for (const Key& key : positives) {
    const std::uint64_t b = bucket_of(key, seed, num_buckets);
    ++pos_count[b];
    ++total_count[b];
  }
  for (const Key& key : negatives) ++total_count[bucket_of(key, seed, num_buckets)];

  std::vector<double> scores(num_buckets);
  for (std::uint64_t b = 0; b < num_buckets; ++b)
    scores[b] = static_cast<double>(1 + pos_count[b]) / static_cast<double>(2 + total_count[b]);
  return BucketHistogramOracle(num_buckets, seed, std::move(scores));
}

BucketValueOracle::BucketValueOracle(std::uint32_t u_bits, std::uint64_t num_buckets, HashSeed seed,
                                     std::vector<std::optional<std::uint64_t>> bucket_values)
    : u_bits_(u_bits), num_buckets_(num_buckets), seed_(seed), bucket_values_(std::move(bucket_values)) {
  if (u_bits == 0 || u_bits > 64)
    throw std::invalid_argument("bucket value oracle: u_bits must lie in [1, 64]");
  if (num_buckets == 0) throw std::invalid_argument("bucket value oracle: num_buckets must be >= 1");
  if (bucket_values_.size() != num_buckets)
    throw std::invalid_argument("bucket value oracle: table size must equal num_buckets");
  for (const auto& v : bucket_values_)
    if (v && u_bits < 64 && (*v >> u_bits) != 0)
      throw std::invalid_argument("bucket value oracle: stored value exceeds u_bits");
}

std::optional<std::uint64_t> BucketValueOracle::predict_impl(const Key& key) const {
  return bucket_values_[bucket_of(key, seed_, num_buckets_)];
}

std::vector<std::uint8_t> BucketValueOracle::serialize() const {
  ByteWriter w;
  write_header(w, kValueMagic, kTagBucketValue);
  w.u32(u_bits_);
  w.u64(num_buckets_);
  w.u64(seed_.value);
  for (const auto& v : bucket_values_) {
    w.u8(v ? 1 : 0);
    if (v) w.u64(*v);
  }
  return w.take();
}

BucketValueOracle train_bucket_value_oracle(std::span<const std::pair<Key, std::uint64_t>> pairs,
                                            std::uint32_t u_bits, std::uint64_t num_buckets,
                                            HashSeed seed) {
  if (u_bits == 0 || u_bits > 64)
    throw std::invalid_argument("train_bucket_value_oracle: u_bits must lie in [1, 64]");
  if (num_buckets == 0)
    throw std::invalid_argument("train_bucket_value_oracle: num_buckets must be >= 1");
  // Ordered maps so the majority scan visits values ascending; on tied
  // counts the first (lowest) value encountered wins.
  std::vector<std::map<std::uint64_t, std::uint64_t>> counts(num_buckets);
  for (const auto& [key, value] : pairs) {
    if (u_bits < 64 && (value >> u_bits) != 0)
      throw std::invalid_argument("train_bucket_value_oracle: value exceeds u_bits");
    ++counts[bucket_of(key, seed, num_buckets)][value];
  }
  std::vector<std::optional<std::uint64_t>> table(num_buckets);
  for (std::uint64_t b = 0; b < num_buckets; ++b) {
    std::uint64_t best_count = 0;
    for (const auto& [value, count] : counts[b]) {
      if (count > best_count) {
        best_count = count;
        table[b] = value;
      }
    }
  }
  return BucketValueOracle(u_bits, num_buckets, seed, std::move(table));
}

std::shared_ptr<ValueOracle> deserialize_value_oracle(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  const std::uint8_t tag = read_header(r, kValueMagic, "value oracle");
  if (tag != kTagBucketValue) throw std::runtime_error("value oracle: unknown type tag");
  const std::uint32_t u_bits = r.u32();
  const std::uint64_t n = r.u64();
  const HashSeed seed{r.u64()};
  if (n > r.remaining()) throw std::runtime_error("value oracle: bucket count exceeds payload");
  std::vector<std::optional<std::uint64_t>> table(n);
  for (std::uint64_t b = 0; b < n; ++b)
    if (r.u8() != 0) table[b] = r.u64();
  auto out = std::make_shared<BucketValueOracle>(u_bits, n, seed, std::move(table));
  r.expect_end();
  return out;
}

}  // namespace filterkit
