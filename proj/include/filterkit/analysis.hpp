#pragma once

#include <cstdint>
#include <vector>

namespace filterkit {

/**
 * Continuous space model for filters: a filter spending j bits per key has
 * false positive probability alpha^j. The default alpha is the base for a
 * Bloom filter run at its optimal hash count.
 */
struct FilterModel {
  double alpha = 0.6185;  // must lie in (0, 1)
};

// Allocation of a total budget of b bits per key between an initial filter
// (b1, in front of the oracle) and a backup filter (b2, behind it).
struct BudgetSplit {
  double b = 0;
  double b1 = 0;
  double b2 = 0;
};

// alpha^bits_per_key: the model false positive probability of a plain
// filter. Throws std::invalid_argument on bits_per_key < 0 or alpha outside
// (0, 1).
double bloom_model_fpp(double bits_per_key, FilterModel model);

// Model false positive rate of an oracle (F_p, F_n) with a backup filter of
// b bits per key: fp + (1 - fp) * alpha^(b / fn). fn = 0 returns fp (an
// empty backup passes nothing). Throws std::invalid_argument on arguments
// outside fp, fn in [0, 1], b >= 0, alpha in (0, 1).
double learned_fpr_model(double fp, double fn, double b, FilterModel model);

// Model false positive rate with an initial filter of b1 bits per key in
// front: alpha^b1 * (fp + (1 - fp) * alpha^(b2 / fn)). b1 = 0 reduces to
// learned_fpr_model. Same argument contract.
double sandwich_fpr_model(double fp, double fn, double b1, double b2, FilterModel model);

// The backup size minimizing sandwich_fpr_model at fixed total budget:
// b2* = fn * log_alpha(fp / ((1 - fp) * (1 / fn - 1))). A constant in the
// total budget: growing the budget should grow only the initial filter.
// May be negative (an oracle worse than useless); callers clamp.
// Throws std::domain_error when fp or fn is 0 or 1 (no interior optimum).
double optimal_backup_bits(double fp, double fn, FilterModel model);

// Splits a total budget b using optimal_backup_bits, clamping so that
// 0 <= b2 <= b. When b <= b2* the whole budget goes to the backup filter
// and there is no initial filter. Throws as optimal_backup_bits, plus
// std::invalid_argument on b < 0.
BudgetSplit allocate_budget(double b, double fp, double fn, FilterModel model);

// Largest oracle cost in bits per key at which a learned filter with b
// backup bits per key still beats a plain filter of equal total size:
// log_alpha(learned fpr) - b. Throws std::invalid_argument on fn = 0 or
// arguments outside the learned_fpr_model ranges.
double plain_gain_threshold(double fp, double fn, double b, FilterModel model);

// Same bound for the optimally split sandwich; independent of the total
// budget (valid whenever b >= b2*):
// log_alpha(fp / (1 - fn)) - fn * log_alpha(fp / ((1 - fp) * (1 / fn - 1))).
// Throws std::domain_error when fp or fn is 0 or 1.
double sandwich_gain_threshold(double fp, double fn, FilterModel model);

// Fraction of true entries: the empirical false positive rate of a decision
// list over known non-members. Throws std::invalid_argument on an empty
// list.
double empirical_fpr(const std::vector<bool>& decisions);

// Two-sided sampling bound: with t_size held-out test queries and q_size
// live queries drawn iid from one distribution, the probability that the
// two empirical rates differ by more than epsilon is at most
// min(1, 2 e^(-epsilon^2 t/2) + 2 e^(-epsilon^2 q/2)). Throws
// std::invalid_argument on zero sizes or epsilon <= 0.
double concentration_bound(std::uint64_t t_size, std::uint64_t q_size, double epsilon);

// ln(x) / ln(alpha) with domain checks. Throws std::invalid_argument on
// x <= 0 or alpha outside (0, 1).
double log_alpha(double x, FilterModel model);

}  // namespace filterkit
