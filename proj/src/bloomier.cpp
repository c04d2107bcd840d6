#include "filterkit/bloomier.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

#include "filterkit/serial.hpp"

namespace filterkit {

namespace {

constexpr std::uint32_t kMagic = 0x52424B46;  // "FKBR"
constexpr std::uint16_t kVersion = 1;
constexpr std::uint32_t kMaxAttempts = 100;
constexpr std::uint64_t kFillLane = 0x66;       // random words for unowned cells
constexpr std::uint64_t kFnFilterLane = 1000;   // Bloom filter inside the learned pipeline

void validate(const BloomierParams& params) {
  if (!(params.c > 1)) throw std::invalid_argument("bloomier: c must be > 1");
  if (params.u == 0) throw std::invalid_argument("bloomier: u must be >= 1");
  if (params.u + params.r > 64) throw std::invalid_argument("bloomier: u + r must be <= 64");
  if (params.num_hashes < 2 || params.num_hashes > 64)
    throw std::invalid_argument("bloomier: num_hashes must lie in [2, 64]");
}

double quantize_c(double c) { return std::round(c * 4294967296.0) / 4294967296.0; }

std::uint64_t width_mask(std::uint32_t width) {
  return width == 64 ? ~0ULL : (1ULL << width) - 1;
}

// The distinct cells a key probes under one seed. Drawn from a per-key
// generator with rejection, so every probe set has exactly num_hashes
// different cells (num_cells >= num_hashes always holds).
void probe_cells(const Key& key, HashSeed seed, std::uint32_t num_hashes, std::uint64_t num_cells,
                 std::uint64_t* out) {
  const HashPair hp = hash_pair(key, seed);
  SplitMix64 gen(hp.h1 ^ (hp.h2 * 0x9E3779B97F4A7C15ULL));
  for (std::uint32_t i = 0; i < num_hashes; ++i) {
    std::uint64_t cell;
    bool fresh;
    do {
      cell = gen.below(num_cells);
      fresh = true;
      for (std::uint32_t j = 0; j < i; ++j)
        if (out[j] == cell) fresh = false;
    } while (!fresh);
    out[i] = cell;
  }
}

struct PeelOrder {
  bool success = false;
  // (key index, owned cell) in peel order; assignment walks it backwards.
  std::vector<std::pair<std::uint64_t, std::uint64_t>> order;
};

PeelOrder peel(const std::vector<std::uint64_t>& probes, std::uint64_t z, std::uint32_t num_hashes,
               std::uint64_t num_cells) {
  std::vector<std::uint32_t> count(num_cells, 0);
  std::vector<std::uint64_t> key_xor(num_cells, 0);
  for (std::uint64_t i = 0; i < z; ++i) {
    for (std::uint32_t j = 0; j < num_hashes; ++j) {
      const std::uint64_t cell = probes[i * num_hashes + j];
      ++count[cell];
      key_xor[cell] ^= i;
    }
  }

  std::vector<std::uint64_t> stack;
  for (std::uint64_t cell = 0; cell < num_cells; ++cell)
    if (count[cell] == 1) stack.push_back(cell);

  PeelOrder result;
  result.order.reserve(z);
  while (!stack.empty()) {
    const std::uint64_t cell = stack.back();
    stack.pop_back();
    if (count[cell] != 1) continue;
    const std::uint64_t key = key_xor[cell];
    result.order.emplace_back(key, cell);
    for (std::uint32_t j = 0; j < num_hashes; ++j) {
      const std::uint64_t d = probes[key * num_hashes + j];
      --count[d];
      key_xor[d] ^= key;
      if (count[d] == 1) stack.push_back(d);
    }
  }
  result.success = result.order.size() == z;
  return result;
}

void check_pairs(std::span<const std::pair<Key, std::uint64_t>> pairs, std::uint32_t u) {
  if (pairs.empty()) throw std::invalid_argument("bloomier: pair list must be nonempty");
  std::unordered_set<Key, KeyHash> seen;
  seen.reserve(pairs.size());
  for (const auto& [key, value] : pairs) {
    if (u < 64 && (value >> u) != 0)
      throw std::invalid_argument("bloomier: value does not fit in u bits");
    if (!seen.insert(key).second) throw std::invalid_argument("bloomier: duplicate key");
  }
}

}  // namespace

BloomierFilter BloomierFilter::build(std::span<const std::pair<Key, std::uint64_t>> pairs,
                                     const BloomierParams& params) {
  validate(params);
  check_pairs(pairs, params.u);

  BloomierFilter filter;
  filter.params_ = params;
  filter.params_.c = quantize_c(params.c);
  filter.z_ = pairs.size();
  filter.num_cells_ = std::max<std::uint64_t>(
      static_cast<std::uint64_t>(std::ceil(filter.params_.c * static_cast<double>(filter.z_))),
      params.num_hashes);

  const std::uint32_t width = params.u + params.r;
  const std::uint64_t mask = width_mask(width);
  std::vector<std::uint64_t> probes(filter.z_ * params.num_hashes);

  for (std::uint32_t attempt = 0; attempt < kMaxAttempts; ++attempt) {
    const HashSeed seed = derive_seed(params.seed, attempt);
    for (std::uint64_t i = 0; i < filter.z_; ++i)
      probe_cells(pairs[i].first, seed, params.num_hashes, filter.num_cells_,
                  &probes[i * params.num_hashes]);

    const PeelOrder peeled = peel(probes, filter.z_, params.num_hashes, filter.num_cells_);
    if (!peeled.success) continue;

    filter.effective_seed_ = seed;
    filter.attempts_ = attempt + 1;
    filter.cells_ = BitArray(filter.num_cells_ * width);
    SplitMix64 fill(derive_seed(seed, kFillLane).value);
    for (std::uint64_t cell = 0; cell < filter.num_cells_; ++cell)
      filter.cells_.set_field(cell * width, width, fill() & mask);
    for (auto it = peeled.order.rbegin(); it != peeled.order.rend(); ++it) {
      const auto [key_index, slot] = *it;
      std::uint64_t acc = pairs[key_index].second;  // top r bits zero
      for (std::uint32_t j = 0; j < params.num_hashes; ++j) {
        const std::uint64_t d = probes[key_index * params.num_hashes + j];
        if (d != slot) acc ^= filter.cells_.get_field(d * width, width);
      }
      filter.cells_.set_field(slot * width, width, acc);
    }
    return filter;
  }
  throw std::runtime_error("bloomier: no probe graph peeled after 100 seeds; raise c or change the seed");
}

std::optional<std::uint64_t> BloomierFilter::lookup(const Key& key) const {
  const std::uint32_t width = params_.u + params_.r;
  std::uint64_t cells[64];
  probe_cells(key, effective_seed_, params_.num_hashes, num_cells_, cells);
  std::uint64_t acc = 0;
  for (std::uint32_t j = 0; j < params_.num_hashes; ++j)
    acc ^= cells_.get_field(cells[j] * width, width);
  if (params_.r > 0 && (acc >> params_.u) != 0) return std::nullopt;
  return acc & width_mask(params_.u);
}

std::vector<std::uint8_t> BloomierFilter::serialize() const {
  ByteWriter w;
  w.u32(kMagic);
  w.u16(kVersion);
  w.u64(static_cast<std::uint64_t>(std::llround(params_.c * 4294967296.0)));
  w.u32(params_.u);
  w.u32(params_.r);
  w.u32(params_.num_hashes);
  w.u64(params_.seed.value);
  w.u64(effective_seed_.value);
  w.u32(attempts_);
  w.u64(z_);
  cells_.serialize(w);
  return w.take();
}

BloomierFilter BloomierFilter::deserialize(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  if (r.u32() != kMagic) throw std::runtime_error("bloomier: bad magic");
  if (r.u16() != kVersion) throw std::runtime_error("bloomier: unsupported version");
  BloomierFilter filter;
  filter.params_.c = static_cast<double>(r.u64()) / 4294967296.0;
  filter.params_.u = r.u32();
  filter.params_.r = r.u32();
  filter.params_.num_hashes = r.u32();
  filter.params_.seed.value = r.u64();
  filter.effective_seed_.value = r.u64();
  filter.attempts_ = r.u32();
  filter.z_ = r.u64();
  validate(filter.params_);
  filter.num_cells_ = std::max<std::uint64_t>(
      static_cast<std::uint64_t>(std::ceil(filter.params_.c * static_cast<double>(filter.z_))),
      filter.params_.num_hashes);
  filter.cells_ = BitArray::deserialize(r, filter.num_cells_ * (filter.params_.u + filter.params_.r));
  r.expect_end();
  return filter;
}

LearnedBloomierFilter LearnedBloomierFilter::build(
    std::shared_ptr<const ValueOracle> oracle, std::span<const std::pair<Key, std::uint64_t>> pairs,
    double fn_filter_bits_per_key, const BloomierParams& backup_params) {
  validate(backup_params);
  check_pairs(pairs, backup_params.u);
  if (!oracle) throw std::invalid_argument("learned bloomier: oracle must not be null");
  if (!(fn_filter_bits_per_key >= 0) || !std::isfinite(fn_filter_bits_per_key))
    throw std::invalid_argument("learned bloomier: bits-per-key budget must be finite and >= 0");

  std::vector<Key> mispredicted;
  for (const auto& [key, value] : pairs) {
    const auto predicted = oracle->predict(key);
    if (!predicted || *predicted != value) mispredicted.push_back(key);
  }

  LearnedBloomierFilter filter;
  filter.oracle_ = std::move(oracle);
  filter.fn_count_ = mispredicted.size();
  if (mispredicted.empty()) return filter;

  const auto fn_bits = static_cast<std::uint64_t>(
      std::floor(fn_filter_bits_per_key * static_cast<double>(mispredicted.size())));
  if (fn_bits == 0)
    throw std::invalid_argument("learned bloomier: budget floors to zero bits but mispredictions exist");
  BloomParams fn_params;
  fn_params.m_bits = fn_bits;
  fn_params.k = optimal_hash_count(static_cast<double>(fn_bits) /
                                   static_cast<double>(mispredicted.size()));
  fn_params.seed = derive_seed(backup_params.seed, kFnFilterLane);
  filter.fn_filter_ = BloomFilter::build(fn_params, mispredicted);

  std::vector<std::pair<Key, std::uint64_t>> redirected;
  for (const auto& pair : pairs)
    if (filter.fn_filter_->contains(pair.first)) redirected.push_back(pair);
  filter.backup_ = BloomierFilter::build(redirected, backup_params);
  return filter;
}

std::optional<std::uint64_t> LearnedBloomierFilter::lookup(const Key& key) const {
  if (fn_filter_ && fn_filter_->contains(key))
    return backup_ ? backup_->lookup(key) : std::nullopt;
  return oracle_->predict(key);
}

std::uint64_t LearnedBloomierFilter::total_bits() const {
  return oracle_->size_bits() + (fn_filter_ ? fn_filter_->size_bits() : 0) +
         (backup_ ? backup_->size_bits() : 0);
}

double learned_bloomier_space_model(double zeta_bits, double m_keys, double fn, double b, double c,
                                    double u, double r_prime, FilterModel model) {
  if (!(model.alpha > 0 && model.alpha < 1))
    throw std::invalid_argument("filter model: alpha must lie in (0, 1)");
  if (!(zeta_bits >= 0) || !(m_keys >= 0) || !(b >= 0) || !(c > 0) || !(u >= 0) || !(r_prime >= 0))
    throw std::invalid_argument("learned_bloomier_space_model: argument out of range");
  if (!(fn >= 0 && fn <= 1))
    throw std::invalid_argument("learned_bloomier_space_model: fn must lie in [0, 1]");
  const double leak = std::pow(model.alpha, b);
  return zeta_bits + b * m_keys * fn + c * m_keys * (fn + (1 - fn) * leak) * (u + r_prime);
}

double learned_bloomier_fpr_model(double fp, double b, double r_prime, FilterModel model) {
  if (!(model.alpha > 0 && model.alpha < 1))
    throw std::invalid_argument("filter model: alpha must lie in (0, 1)");
  if (!(fp >= 0 && fp <= 1))
    throw std::invalid_argument("learned_bloomier_fpr_model: fp must lie in [0, 1]");
  if (!(b >= 0) || !(r_prime >= 0))
    throw std::invalid_argument("learned_bloomier_fpr_model: argument out of range");
  const double hit = std::pow(model.alpha, b);
  return fp * (1 - hit) + hit * std::pow(2.0, -r_prime);
}

}  // namespace filterkit
