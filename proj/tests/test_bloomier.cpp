#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <stdexcept>
#include <unordered_set>
#include <vector>

#include "filterkit/bloomier.hpp"
#include "test_util.hpp"

using namespace filterkit;

namespace {

std::vector<std::pair<Key, std::uint64_t>> random_pairs(std::size_t n, std::uint32_t u_bits,
                                                        std::uint64_t seed) {
  const auto keys = testutil::uniform_keys(n, seed);
  std::vector<std::pair<Key, std::uint64_t>> pairs;
  pairs.reserve(n);
  SplitMix64 rng(seed ^ 0xABCD);
  const std::uint64_t mask = u_bits == 64 ? ~0ULL : (1ULL << u_bits) - 1;
  for (const Key& k : keys) pairs.emplace_back(k, rng() & mask);
  return pairs;
}

BloomierParams params_with(std::uint32_t u, std::uint32_t r, std::uint64_t seed) {
  BloomierParams p;
  p.u = u;
  p.r = r;
  p.seed = HashSeed{seed};
  return p;
}

}  // namespace

TEST_CASE("single pair round-trips") {
  const std::vector<std::pair<Key, std::uint64_t>> pairs = {{Key::from_u64(77), 1234}};
  const BloomierFilter f = BloomierFilter::build(pairs, params_with(16, 8, 1));
  CHECK(f.lookup(Key::from_u64(77)) == 1234);
  CHECK(f.z() == 1);
  CHECK(f.num_cells() == 3);  // never fewer cells than probes per key
}

TEST_CASE("boundary value of all ones survives") {
  const std::vector<std::pair<Key, std::uint64_t>> pairs = {
      {Key::from_u64(1), 0xFFFF}, {Key::from_u64(2), 0}, {Key::from_u64(3), 0x8000}};
  // A 3-key table at the asymptotic c has too few cells for three distinct
  // probes each; tiny tables need c well above the peeling threshold.
  BloomierParams p = params_with(16, 8, 2);
  p.c = 3.0;
  const BloomierFilter f = BloomierFilter::build(pairs, p);
  CHECK(f.lookup(Key::from_u64(1)) == 0xFFFF);
  CHECK(f.lookup(Key::from_u64(2)) == 0);
  CHECK(f.lookup(Key::from_u64(3)) == 0x8000);
}

TEST_CASE("every stored key retrieves its exact value") {
  const auto pairs = random_pairs(10000, 16, 11);
  const BloomierFilter f = BloomierFilter::build(pairs, params_with(16, 8, 12));
  for (const auto& [key, value] : pairs) CHECK(f.lookup(key) == value);
  CHECK(f.size_bits() == f.num_cells() * 24);
}

TEST_CASE("construction peels within three attempts almost always") {
  int quick = 0;
  for (std::uint64_t run = 0; run < 100; ++run) {
    const auto pairs = random_pairs(10000, 16, 1000 + run);
    const BloomierFilter f = BloomierFilter::build(pairs, params_with(16, 8, 2000 + run));
    quick += f.attempts() <= 3 ? 1 : 0;
  }
  CHECK(quick >= 99);
}

TEST_CASE("zero check bits answer every probe") {
  const auto pairs = random_pairs(500, 16, 21);
  const BloomierFilter f = BloomierFilter::build(pairs, params_with(16, 0, 22));
  for (const auto& [key, value] : pairs) CHECK(f.lookup(key) == value);
  SplitMix64 rng(23);
  for (int i = 0; i < 10000; ++i) {
    CHECK(f.lookup(Key::from_u64(rng())).has_value());
  }
}

TEST_CASE("non-key positives track two to the minus r") {
  constexpr std::uint64_t kProbes = 200000;
  const auto pairs = random_pairs(10000, 16, 31);
  const BloomierFilter f = BloomierFilter::build(pairs, params_with(16, 8, 32));

  std::unordered_set<std::uint64_t> members;
  for (const auto& [key, value] : pairs) members.insert(key.as_u64());
  const auto probes = testutil::fresh_negatives(kProbes, members, 33);
  std::uint64_t hits = 0;
  for (const Key& k : probes) hits += f.lookup(k).has_value() ? 1 : 0;
  const double rate = static_cast<double>(hits) / kProbes;
  const double expect = std::pow(2.0, -8.0);
  CHECK(std::abs(rate - expect) <= 3 * testutil::binomial_se(expect, kProbes));
}

TEST_CASE("peeling is deterministic") {
  const auto pairs = random_pairs(2000, 12, 41);
  const BloomierFilter a = BloomierFilter::build(pairs, params_with(12, 6, 42));
  const BloomierFilter b = BloomierFilter::build(pairs, params_with(12, 6, 42));
  CHECK(a == b);
  CHECK(a.serialize() == b.serialize());
}

TEST_CASE("bloomier serialization round-trips") {
  const auto pairs = random_pairs(3000, 16, 51);
  const BloomierFilter f = BloomierFilter::build(pairs, params_with(16, 8, 52));
  const auto blob = f.serialize();
  const BloomierFilter back = BloomierFilter::deserialize(blob);
  CHECK(back == f);
  for (const auto& [key, value] : pairs) CHECK(back.lookup(key) == value);

  auto broken = blob;
  broken[0] ^= 0xFF;
  CHECK_THROWS_AS(BloomierFilter::deserialize(broken), std::runtime_error);
}

TEST_CASE("bloomier input validation") {
  const auto pairs = random_pairs(10, 16, 61);
  BloomierParams p = params_with(16, 8, 62);

  p.c = 1.0;
  CHECK_THROWS_AS(BloomierFilter::build(pairs, p), std::invalid_argument);
  p = params_with(60, 8, 62);  // u + r over the 64-bit cell budget
  CHECK_THROWS_AS(BloomierFilter::build(pairs, p), std::invalid_argument);
  p = params_with(16, 8, 62);
  p.num_hashes = 1;
  CHECK_THROWS_AS(BloomierFilter::build(pairs, p), std::invalid_argument);

  CHECK_THROWS_AS(BloomierFilter::build({}, params_with(16, 8, 62)), std::invalid_argument);

  auto duplicated = pairs;
  duplicated.push_back(duplicated.front());
  CHECK_THROWS_AS(BloomierFilter::build(duplicated, params_with(16, 8, 62)), std::invalid_argument);

  std::vector<std::pair<Key, std::uint64_t>> wide = {{Key::from_u64(1), 1ULL << 16}};
  CHECK_THROWS_AS(BloomierFilter::build(wide, params_with(16, 8, 62)), std::invalid_argument);
}

TEST_CASE("perfect oracle leaves nothing to back up") {
  const auto pairs = random_pairs(100, 16, 71);
  auto oracle = std::make_shared<BucketValueOracle>(
      train_bucket_value_oracle(pairs, 16, 1 << 20, HashSeed{72}));
  // The scenario needs a collision-free bucket table; verify before relying
  // on it.
  for (const auto& [key, value] : pairs) REQUIRE(oracle->predict(key) == value);

  const LearnedBloomierFilter f = LearnedBloomierFilter::build(oracle, pairs, 8.0, params_with(16, 8, 73));
  CHECK(f.false_negative_count() == 0);
  CHECK(f.fn_filter() == nullptr);
  CHECK(f.backup() == nullptr);
  CHECK(f.backup_key_count() == 0);
  CHECK(f.total_bits() == oracle->size_bits());
  for (const auto& [key, value] : pairs) CHECK(f.lookup(key) == value);
}

TEST_CASE("blind oracle pushes every key to the backup") {
  const auto pairs = random_pairs(400, 16, 81);
  auto oracle = std::make_shared<BucketValueOracle>(
      BucketValueOracle(16, 4, HashSeed{82}, std::vector<std::optional<std::uint64_t>>(4)));
  const LearnedBloomierFilter f = LearnedBloomierFilter::build(oracle, pairs, 8.0, params_with(16, 8, 83));
  CHECK(f.false_negative_count() == 400);
  REQUIRE(f.fn_filter() != nullptr);
  CHECK(f.fn_filter()->n_inserted() == 400);
  CHECK(f.backup_key_count() == 400);
  for (const auto& [key, value] : pairs) CHECK(f.lookup(key) == value);
}

TEST_CASE("backup population matches the instance model") {
  const auto pairs = random_pairs(10000, 16, 91);
  auto oracle = std::make_shared<BucketValueOracle>(
      train_bucket_value_oracle(pairs, 16, 13000, HashSeed{92}));
  const LearnedBloomierFilter f = LearnedBloomierFilter::build(oracle, pairs, 8.0, params_with(16, 8, 93));
  REQUIRE(f.fn_filter() != nullptr);
  REQUIRE(f.backup() != nullptr);

  const double m = 10000;
  const double fn = static_cast<double>(f.false_negative_count()) / m;
  CHECK(fn > 0.2);
  CHECK(fn < 0.4);

  // Non-miss keys land in the backup only through fn_filter collisions, at
  // rate rho^k each.
  const double rho_k =
      std::pow(f.fn_filter()->fill_fraction(), f.fn_filter()->params().k);
  const double p = fn + (1 - fn) * rho_k;
  const double expected = m * p;
  const double sigma = std::sqrt(m * p * (1 - p));
  CHECK(std::abs(static_cast<double>(f.backup_key_count()) - expected) <= 3 * sigma);
}

TEST_CASE("learned bloomier lookups stay exact and nulls stay null") {
  const auto pairs = random_pairs(10000, 16, 101);
  auto oracle = std::make_shared<BucketValueOracle>(
      train_bucket_value_oracle(pairs, 16, 13000, HashSeed{102}));
  const LearnedBloomierFilter f = LearnedBloomierFilter::build(oracle, pairs, 8.0, params_with(16, 8, 103));
  for (const auto& [key, value] : pairs) CHECK(f.lookup(key) == value);

  std::unordered_set<std::uint64_t> members;
  for (const auto& [key, value] : pairs) members.insert(key.as_u64());
  const auto probes = testutil::fresh_negatives(1000, members, 104);
  for (const Key& k : probes) {
    if (!oracle->predict(k).has_value() && f.fn_filter() && !f.fn_filter()->contains(k)) {
      CHECK_FALSE(f.lookup(k).has_value());
    }
  }
}

TEST_CASE("learned bloomier rate matches its instance composition") {
  constexpr std::uint64_t kProbes = 200000;
  const auto pairs = random_pairs(10000, 16, 111);
  auto oracle = std::make_shared<BucketValueOracle>(
      train_bucket_value_oracle(pairs, 16, 13000, HashSeed{112}));
  const LearnedBloomierFilter f = LearnedBloomierFilter::build(oracle, pairs, 8.0, params_with(16, 8, 113));
  REQUIRE(f.fn_filter() != nullptr);

  std::unordered_set<std::uint64_t> members;
  for (const auto& [key, value] : pairs) members.insert(key.as_u64());

  // Instance-measured oracle false positive rate on an independent sample.
  const auto fp_sample = testutil::fresh_negatives(200000, members, 114);
  std::uint64_t non_null = 0;
  for (const Key& k : fp_sample) non_null += oracle->predict(k).has_value() ? 1 : 0;
  const double fp_hat = static_cast<double>(non_null) / static_cast<double>(fp_sample.size());

  const double rho_k = std::pow(f.fn_filter()->fill_fraction(), f.fn_filter()->params().k);
  const double composed = fp_hat * (1 - rho_k) + rho_k * std::pow(2.0, -8.0);

  const auto probes = testutil::fresh_negatives(kProbes, members, 115);
  std::uint64_t hits = 0;
  for (const Key& k : probes) hits += f.lookup(k).has_value() ? 1 : 0;
  const double rate = static_cast<double>(hits) / kProbes;
  CHECK(std::abs(rate - composed) <= 3 * testutil::binomial_se(composed, kProbes));
}

TEST_CASE("fn filter budget must round to at least one bit") {
  const auto pairs = random_pairs(50, 16, 121);
  auto oracle = std::make_shared<BucketValueOracle>(
      BucketValueOracle(16, 4, HashSeed{122}, std::vector<std::optional<std::uint64_t>>(4)));
  CHECK_THROWS_AS(LearnedBloomierFilter::build(oracle, pairs, 0.0001, params_with(16, 8, 123)),
                  std::invalid_argument);
}

TEST_CASE("space model endpoints") {
  const FilterModel model{0.6185};
  // fn = 0 drops the Bloom filter term but keeps the alpha^b leak into the
  // backup; fn = 1 stores every key behind a full-width Bloom filter.
  const double none = learned_bloomier_space_model(4321, 1000, 0.0, 8, 1.23, 16, 8, model);
  CHECK(none ==
        doctest::Approx(4321 + 1.23 * 1000 * std::pow(0.6185, 8.0) * 24).epsilon(1e-12));
  const double full = learned_bloomier_space_model(0, 1000, 1.0, 8, 1.23, 16, 8, model);
  CHECK(full == doctest::Approx(8.0 * 1000 + 1.23 * 1000 * 24).epsilon(1e-12));
}

TEST_CASE("space model comparison at a plausible oracle") {
  const FilterModel model{0.6185};
  // A 2 bits/key oracle at fp 0.01 and fn 0.3 against a plain layout sized
  // for the same model rate.
  const double m = 10000;
  const double learned_bits = learned_bloomier_space_model(2 * m, m, 0.3, 8, 1.23, 16, 8, model);
  const double target = learned_bloomier_fpr_model(0.01, 8, 8, model);
  const double r_match = std::ceil(std::log2(1.0 / target));
  const double plain_bits = 1.23 * m * (16 + r_match);
  CHECK(learned_bits < plain_bits);
  CHECK(learned_bits / m == doctest::Approx(13.7).epsilon(0.05));
  CHECK(plain_bits / m == doctest::Approx(28.3).epsilon(0.01));
}

TEST_CASE("false positive model endpoints") {
  const FilterModel model{0.6185};
  CHECK(learned_bloomier_fpr_model(0.3, 0, 8, model) ==
        doctest::Approx(std::pow(2.0, -8.0)).epsilon(1e-12));
  const double inf = std::numeric_limits<double>::infinity();
  CHECK(learned_bloomier_fpr_model(0.3, 8, inf, model) ==
        doctest::Approx(0.3 * (1 - std::pow(0.6185, 8.0))).epsilon(1e-12));
  CHECK(learned_bloomier_fpr_model(0.01, 8, 8, model) == doctest::Approx(0.00987).epsilon(0.001));
}
