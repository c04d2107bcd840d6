#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "filterkit/bloom.hpp"
#include "test_util.hpp"

using namespace filterkit;

namespace {
BloomParams params_of(std::uint64_t m, std::uint32_t k, std::uint64_t seed) {
  return BloomParams{m, k, HashSeed{seed}};
}
}  // namespace

TEST_CASE("empty build leaves all bits zero") {
  const BloomFilter f = BloomFilter::build(params_of(64, 3, 1), {});
  CHECK(f.fill_fraction() == 0.0);
  CHECK(f.bits().popcount() == 0);
  CHECK(f.n_inserted() == 0);
  CHECK_FALSE(f.contains(Key::from_u64(7)));
}

TEST_CASE("one key sets at most k bits") {
  const std::vector<Key> keys = {Key::from_u64(42)};
  const BloomFilter f = BloomFilter::build(params_of(1024, 2, 1), keys);
  CHECK(f.bits().popcount() >= 1);
  CHECK(f.bits().popcount() <= 2);
  CHECK(f.contains(keys[0]));
}

// Realized fill fraction should track E[rho] = 1 - (1 - 1/m)^(kn).
TEST_CASE("fill fraction matches its expectation formula") {
  const auto keys = testutil::uniform_keys(10000, 11);
  const BloomFilter f = BloomFilter::build(params_of(100000, 7, 2), keys);
  const double expected = 1.0 - std::pow(1.0 - 1.0 / 100000.0, 7.0 * 10000.0);
  CHECK(std::abs(f.fill_fraction() - expected) < 0.01);
}

TEST_CASE("insert is idempotent") {
  BloomFilter f = BloomFilter::build(params_of(256, 4, 9), {});
  const Key k = Key::from_u64(1234);
  f.insert(k);
  CHECK(f.contains(k));
  const std::uint64_t pop = f.bits().popcount();
  f.insert(k);
  CHECK(f.bits().popcount() == pop);
  CHECK(f.n_inserted() == 2);
}

TEST_CASE("inserting into a saturated array changes nothing") {
  BloomFilter f = BloomFilter::build(params_of(16, 4, 5), {});
  SplitMix64 rng(17);
  while (f.fill_fraction() < 1.0) f.insert(Key::from_u64(rng()));
  f.insert(Key::from_u64(1));
  CHECK(f.fill_fraction() == 1.0);
  CHECK(f.bits().popcount() == 16);
  CHECK(f.contains(Key::from_u64(999)));  // everything collides now
}

TEST_CASE("fill fraction is monotone under insertion") {
  BloomFilter f = BloomFilter::build(params_of(512, 3, 6), {});
  double last = 0;
  SplitMix64 rng(21);
  for (int i = 0; i < 50; ++i) {
    f.insert(Key::from_u64(rng()));
    CHECK(f.fill_fraction() >= last);
    last = f.fill_fraction();
  }
}

// Non-member positives should land within 3 standard errors of rho^k, the
// per-instance false positive probability.
TEST_CASE("false positive rate tracks rho^k") {
  constexpr std::uint64_t kProbes = 1000000;
  const auto keys = testutil::uniform_keys(10000, 31);
  const BloomFilter f = BloomFilter::build(params_of(80000, 6, 32), keys);

  const double p = std::pow(f.fill_fraction(), 6);
  const auto probes = testutil::fresh_negatives(kProbes, testutil::key_values(keys), 33);
  std::uint64_t hits = 0;
  for (const Key& k : probes) hits += f.contains(k) ? 1 : 0;
  const double rate = static_cast<double>(hits) / kProbes;
  CHECK(std::abs(rate - p) <= 3 * testutil::binomial_se(p, kProbes));
}

TEST_CASE("members always query positive") {
  const auto keys = testutil::uniform_keys(2000, 77);
  const BloomFilter f = BloomFilter::build(params_of(6000, 5, 78), keys);
  for (const Key& k : keys) CHECK(f.contains(k));
}

TEST_CASE("optimal hash count at reference budgets") {
  CHECK(optimal_hash_count(8) == 6);
  CHECK(optimal_hash_count(10) == 7);
  CHECK(optimal_hash_count(1.4427) == 1);
  CHECK(optimal_hash_count(0.1) == 1);
  CHECK_THROWS_AS(optimal_hash_count(0), std::invalid_argument);
  CHECK_THROWS_AS(optimal_hash_count(-3), std::invalid_argument);
}

// The chosen k must beat every other k under the analytic false positive
// probability (1 - e^{-k/b})^k.
TEST_CASE("optimal hash count minimizes the analytic model") {
  auto fpp = [](double b, std::uint32_t k) {
    return std::pow(1.0 - std::exp(-static_cast<double>(k) / b), static_cast<double>(k));
  };
  for (double b : {1.5, 2.7, 4.0, 8.0, 10.0, 16.0, 23.7}) {
    const std::uint32_t chosen = optimal_hash_count(b);
    for (std::uint32_t k = 1; k <= 40; ++k) {
      CHECK(fpp(b, chosen) <= fpp(b, k) + 1e-15);
    }
  }
}

TEST_CASE("bloom serialization round-trips") {
  const auto keys = testutil::uniform_keys(300, 41);
  const BloomFilter f = BloomFilter::build(params_of(2048, 4, 42), keys);
  const auto blob = f.serialize();
  const BloomFilter back = BloomFilter::deserialize(blob);
  CHECK(back == f);
  CHECK(back.contains(keys[0]));

  auto broken = blob;
  broken[0] ^= 0xFF;
  CHECK_THROWS_AS(BloomFilter::deserialize(broken), std::runtime_error);
  CHECK_THROWS_AS(BloomFilter::deserialize(std::span<const std::uint8_t>(blob.data(), blob.size() - 1)),
                  std::runtime_error);
}

TEST_CASE("invalid parameters are rejected") {
  CHECK_THROWS_AS(BloomFilter::build(params_of(0, 3, 1), {}), std::invalid_argument);
  CHECK_THROWS_AS(BloomFilter::build(params_of(64, 0, 1), {}), std::invalid_argument);
}
