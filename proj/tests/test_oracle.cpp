#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <vector>

#include "filterkit/oracle.hpp"
#include "test_util.hpp"

using namespace filterkit;

namespace {

// 500 keys filling [1000, 1499], 500 keys at [0, 499], so exactly 501
// integers of [1000, 2000] are non-keys. The negative sample is every other
// integer in [0, 10^6), which makes the oracle's false positive rate an
// exact count: 501 / 999000.
struct RangeScenario {
  std::vector<Key> positives;
  std::vector<Key> negatives;

  RangeScenario() {
    for (std::uint64_t v = 1000; v < 1500; ++v) positives.push_back(Key::from_u64(v));
    for (std::uint64_t v = 0; v < 500; ++v) positives.push_back(Key::from_u64(v));
    negatives.reserve(999000);
    for (std::uint64_t v = 500; v < 1000; ++v) negatives.push_back(Key::from_u64(v));
    for (std::uint64_t v = 1500; v < 1000000; ++v) negatives.push_back(Key::from_u64(v));
  }
};

}  // namespace

TEST_CASE("interval oracle scores by range membership") {
  const IntervalOracle oracle({{10, 20}, {50, 60}}, 0.9, 0.1);
  CHECK(oracle.score(Key::from_u64(10)) == 0.9);
  CHECK(oracle.score(Key::from_u64(20)) == 0.9);
  CHECK(oracle.score(Key::from_u64(55)) == 0.9);
  CHECK(oracle.score(Key::from_u64(21)) == 0.1);
  CHECK(oracle.score(Key::from_u64(9)) == 0.1);
  CHECK(oracle.score(Key::from_u64(1000)) == 0.1);
}

TEST_CASE("interval oracle validates its construction") {
  CHECK_THROWS_AS(IntervalOracle({{20, 10}}, 0.9, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(IntervalOracle({{10, 20}, {15, 30}}, 0.9, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(IntervalOracle({{50, 60}, {10, 20}}, 0.9, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(IntervalOracle({{10, 20}}, 1.1, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(IntervalOracle({{10, 20}}, 0.5, -0.1), std::invalid_argument);
  CHECK_THROWS_AS(IntervalOracle({{10, 20}}, 0.2, 0.8), std::invalid_argument);
}

TEST_CASE("planted oracle is deterministic with the planted rates") {
  const auto members = testutil::uniform_keys(10000, 51);
  const PlantedScoreOracle oracle(members, 0.01, 0.5, HashSeed{52});

  std::uint64_t low = 0;
  for (const Key& k : members) {
    const double s = oracle.score(k);
    CHECK((s == 0.25 || s == 0.75));
    CHECK(oracle.score(k) == s);
    low += s < 0.5 ? 1 : 0;
  }
  const double fn = static_cast<double>(low) / 10000.0;
  CHECK(std::abs(fn - 0.5) <= 3 * testutil::binomial_se(0.5, 10000));

  const auto outsiders = testutil::fresh_negatives(10000, testutil::key_values(members), 53);
  std::uint64_t high = 0;
  for (const Key& k : outsiders) high += oracle.score(k) >= 0.5 ? 1 : 0;
  const double fp = static_cast<double>(high) / 10000.0;
  CHECK(std::abs(fp - 0.01) <= 3 * testutil::binomial_se(0.01, 10000));
}

TEST_CASE("profile at extreme thresholds") {
  const auto members = testutil::uniform_keys(100, 61);
  const PlantedScoreOracle oracle(members, 0.1, 0.3, HashSeed{62});
  const auto sample = testutil::fresh_negatives(200, testutil::key_values(members), 63);

  const OracleProfile at_zero = profile(oracle, 0.0, members, sample);
  CHECK(at_zero.fn == 0.0);
  CHECK(at_zero.fp == 1.0);

  const OracleProfile above_one = profile(oracle, 1.01, members, sample);
  CHECK(above_one.fn == 1.0);
  CHECK(above_one.fp == 0.0);
}

TEST_CASE("profile on the range scenario counts exactly") {
  const RangeScenario sc;
  const IntervalOracle oracle({{1000, 2000}}, 0.5, 0.0);
  const OracleProfile p = profile(oracle, 0.4, sc.positives, sc.negatives);
  CHECK(p.fn == 0.5);
  CHECK(p.fp == doctest::Approx(501.0 / 999000.0).epsilon(1e-12));
  CHECK(p.zeta_bits == 8 * oracle.serialize().size());
}

TEST_CASE("profile validates its inputs") {
  const auto members = testutil::uniform_keys(10, 71);
  const PlantedScoreOracle oracle(members, 0.1, 0.1, HashSeed{72});
  const auto sample = testutil::fresh_negatives(10, testutil::key_values(members), 73);

  CHECK_THROWS_AS(profile(oracle, 0.5, {}, sample), std::invalid_argument);
  CHECK_THROWS_AS(profile(oracle, 0.5, members, {}), std::invalid_argument);
  CHECK_THROWS_AS(profile(oracle, 0.5, members, members), std::invalid_argument);
  CHECK_THROWS_AS(profile(oracle, std::nan(""), members, sample), std::invalid_argument);
}

TEST_CASE("profile consults the oracle once per key") {
  const auto members = testutil::uniform_keys(10, 81);
  const PlantedScoreOracle oracle(members, 0.1, 0.1, HashSeed{82});
  const auto sample = testutil::fresh_negatives(20, testutil::key_values(members), 83);
  oracle.reset_probe_count();
  profile(oracle, 0.5, members, sample);
  CHECK(oracle.probe_count() == 30);
}

TEST_CASE("threshold sweep endpoints and consistency") {
  const auto members = testutil::uniform_keys(200, 91);
  const PlantedScoreOracle oracle(members, 0.05, 0.4, HashSeed{92});
  const auto sample = testutil::fresh_negatives(400, testutil::key_values(members), 93);

  const std::vector<double> taus = {0.0, 0.5, 1.01};
  const auto profiles = sweep_thresholds(oracle, members, sample, taus);
  REQUIRE(profiles.size() == 3);
  CHECK(profiles.front().fn == 0.0);
  CHECK(profiles.back().fn == 1.0);

  const OracleProfile direct = profile(oracle, 0.5, members, sample);
  CHECK(profiles[1].fp == direct.fp);
  CHECK(profiles[1].fn == direct.fn);

  CHECK_THROWS_AS(sweep_thresholds(oracle, members, sample, {}), std::invalid_argument);
}

// A step oracle admits exactly two operating points over thresholds strictly
// inside (0, 1]: one on each side of the in-range score.
TEST_CASE("sweep over a step oracle has two regimes") {
  const RangeScenario sc;
  const IntervalOracle oracle({{1000, 2000}}, 0.5, 0.0);
  std::vector<double> taus;
  for (int i = 0; i <= 10; ++i) taus.push_back(0.05 + 0.09 * i);

  const auto profiles = sweep_thresholds(oracle, sc.positives, sc.negatives, taus);
  for (const auto& p : profiles) {
    if (p.tau <= 0.5) {
      CHECK(p.fn == 0.5);
      CHECK(p.fp == doctest::Approx(501.0 / 999000.0).epsilon(1e-12));
    } else {
      CHECK(p.fn == 1.0);
      CHECK(p.fp == 0.0);
    }
  }
}

TEST_CASE("bucket oracle separates disjoint training sets") {
  const HashSeed seed{77};
  constexpr std::uint64_t kBuckets = 4096;
  std::vector<Key> pos_keys, neg_keys;
  for (std::uint64_t v = 0; v < 5; ++v) pos_keys.push_back(Key::from_u64(v));
  for (std::uint64_t v = 100; v < 105; ++v) neg_keys.push_back(Key::from_u64(v));

  // The scenario only makes sense when the ten keys land in ten buckets.
  std::unordered_set<std::uint64_t> buckets;
  for (const Key& k : pos_keys) buckets.insert(hash_pair(k, seed).h1 % kBuckets);
  for (const Key& k : neg_keys) buckets.insert(hash_pair(k, seed).h1 % kBuckets);
  REQUIRE(buckets.size() == 10);

  std::vector<Key> positives, negatives;
  for (int rep = 0; rep < 100; ++rep) {
    positives.insert(positives.end(), pos_keys.begin(), pos_keys.end());
    negatives.insert(negatives.end(), neg_keys.begin(), neg_keys.end());
  }
  const BucketHistogramOracle oracle = train_bucket_oracle(positives, negatives, kBuckets, seed);
  for (const Key& k : pos_keys) CHECK(oracle.score(k) > 0.9);
  for (const Key& k : neg_keys) CHECK(oracle.score(k) < 0.1);
}

TEST_CASE("single-bucket oracle applies the smoothing formula") {
  std::vector<Key> positives, negatives;
  for (std::uint64_t v = 0; v < 3; ++v) positives.push_back(Key::from_u64(v));
  for (std::uint64_t v = 10; v < 15; ++v) negatives.push_back(Key::from_u64(v));
  const BucketHistogramOracle oracle = train_bucket_oracle(positives, negatives, 1, HashSeed{3});
  // (1 + 3) / (2 + 8) for every key, trained or not.
  CHECK(oracle.score(Key::from_u64(0)) == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(oracle.score(Key::from_u64(12345)) == doctest::Approx(0.4).epsilon(1e-12));
}

TEST_CASE("trained bucket oracle lands between the extremes") {
  RangeScenario sc;
  std::vector<Key> training_negatives(sc.negatives.begin(), sc.negatives.begin() + 2000);
  const BucketHistogramOracle oracle =
      train_bucket_oracle(sc.positives, training_negatives, 1024, HashSeed{5});
  const OracleProfile p = profile(oracle, 0.5, sc.positives, sc.negatives);
  CHECK(p.fn > 0.0);
  CHECK(p.fn < 1.0);
}

TEST_CASE("score oracle serialization round-trips") {
  const auto members = testutil::uniform_keys(50, 101);
  const auto probes = testutil::uniform_keys(200, 102);

  const IntervalOracle interval({{5, 9}, {100, 200}}, 0.8, 0.2);
  const PlantedScoreOracle planted(members, 0.02, 0.4, HashSeed{103});
  const BucketHistogramOracle bucket =
      train_bucket_oracle(members, testutil::uniform_keys(50, 104), 64, HashSeed{105});

  for (const ScoreOracle* oracle :
       {static_cast<const ScoreOracle*>(&interval), static_cast<const ScoreOracle*>(&planted),
        static_cast<const ScoreOracle*>(&bucket)}) {
    const auto blob = oracle->serialize();
    const auto back = deserialize_score_oracle(blob);
    for (const Key& k : probes) CHECK(back->score(k) == oracle->score(k));

    auto broken = blob;
    broken[0] ^= 0x5A;
    CHECK_THROWS_AS(deserialize_score_oracle(broken), std::runtime_error);
  }
}

TEST_CASE("bucket value oracle majority vote with lowest-value ties") {
  std::vector<std::pair<Key, std::uint64_t>> pairs = {
      {Key::from_u64(1), 3}, {Key::from_u64(2), 7}, {Key::from_u64(3), 3}};
  const BucketValueOracle majority = train_bucket_value_oracle(pairs, 8, 1, HashSeed{9});
  CHECK(majority.predict(Key::from_u64(1)) == 3);
  CHECK(majority.predict(Key::from_u64(999)) == 3);  // single shared bucket

  std::vector<std::pair<Key, std::uint64_t>> tied = {{Key::from_u64(1), 7}, {Key::from_u64(2), 3}};
  const BucketValueOracle tie_broken = train_bucket_value_oracle(tied, 8, 1, HashSeed{9});
  CHECK(tie_broken.predict(Key::from_u64(5)) == 3);
}

TEST_CASE("untrained buckets predict null") {
  std::vector<std::pair<Key, std::uint64_t>> pairs = {{Key::from_u64(1), 200}};
  const BucketValueOracle oracle = train_bucket_value_oracle(pairs, 8, 64, HashSeed{10});
  CHECK(oracle.predict(Key::from_u64(1)) == 200);
  std::uint64_t nulls = 0;
  for (std::uint64_t v = 100; v < 200; ++v) nulls += oracle.predict(Key::from_u64(v)) ? 0 : 1;
  CHECK(nulls > 90);  // one occupied bucket of 64

  const BucketValueOracle empty = train_bucket_value_oracle({}, 8, 16, HashSeed{11});
  CHECK_FALSE(empty.predict(Key::from_u64(0)).has_value());
}

TEST_CASE("value oracle validation") {
  std::vector<std::pair<Key, std::uint64_t>> wide = {{Key::from_u64(1), 16}};
  CHECK_THROWS_AS(train_bucket_value_oracle(wide, 4, 8, HashSeed{1}), std::invalid_argument);
  CHECK_THROWS_AS(train_bucket_value_oracle(wide, 0, 8, HashSeed{1}), std::invalid_argument);
  CHECK_THROWS_AS(train_bucket_value_oracle(wide, 65, 8, HashSeed{1}), std::invalid_argument);
  CHECK_THROWS_AS(train_bucket_value_oracle(wide, 8, 0, HashSeed{1}), std::invalid_argument);

  CHECK_THROWS_AS(BucketValueOracle(4, 2, HashSeed{1}, {std::uint64_t{16}, std::nullopt}),
                  std::invalid_argument);
  CHECK_THROWS_AS(BucketValueOracle(8, 2, HashSeed{1}, {std::nullopt}), std::invalid_argument);
}

TEST_CASE("value oracle serialization round-trips") {
  std::vector<std::pair<Key, std::uint64_t>> pairs;
  SplitMix64 rng(121);
  for (int i = 0; i < 100; ++i) pairs.emplace_back(Key::from_u64(rng()), rng.below(1 << 12));
  const BucketValueOracle oracle = train_bucket_value_oracle(pairs, 12, 37, HashSeed{122});

  const auto blob = oracle.serialize();
  const auto back = deserialize_value_oracle(blob);
  CHECK(back->value_bits() == 12);
  for (const auto& [key, value] : pairs) CHECK(back->predict(key) == oracle.predict(key));
  for (int i = 0; i < 100; ++i) {
    const Key probe = Key::from_u64(rng());
    CHECK(back->predict(probe) == oracle.predict(probe));
  }

  auto broken = blob;
  broken[0] ^= 1;
  CHECK_THROWS_AS(deserialize_value_oracle(broken), std::runtime_error);
}

TEST_CASE("probe counter tracks predict calls") {
  const std::vector<std::pair<Key, std::uint64_t>> pairs = {{Key::from_u64(1), 5}};
  const BucketValueOracle oracle = train_bucket_value_oracle(pairs, 8, 4, HashSeed{131});
  oracle.reset_probe_count();
  oracle.predict(Key::from_u64(1));
  oracle.predict(Key::from_u64(2));
  CHECK(oracle.probe_count() == 2);
}
