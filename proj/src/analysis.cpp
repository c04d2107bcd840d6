#include "filterkit/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace filterkit {

namespace {

void check_alpha(FilterModel model) {
  if (!(model.alpha > 0 && model.alpha < 1))
    throw std::invalid_argument("filter model: alpha must lie in (0, 1)");
}

void check_rate(double v, const char* name) {
  if (!(v >= 0 && v <= 1)) throw std::invalid_argument(std::string(name) + " must lie in [0, 1]");
}

void check_interior(double v, const char* name) {
  if (!(v > 0 && v < 1)) throw std::domain_error(std::string(name) + " must lie strictly in (0, 1)");
}

}  // namespace

double bloom_model_fpp(double bits_per_key, FilterModel model) {
  check_alpha(model);
  if (!(bits_per_key >= 0)) throw std::invalid_argument("bits_per_key must be >= 0");
  return std::pow(model.alpha, bits_per_key);
}

double learned_fpr_model(double fp, double fn, double b, FilterModel model) {
  check_alpha(model);
  check_rate(fp, "fp");
  check_rate(fn, "fn");
  if (!(b >= 0)) throw std::invalid_argument("b must be >= 0");
  if (fn == 0) return fp;
  return fp + (1 - fp) * std::pow(model.alpha, b / fn);
}

double sandwich_fpr_model(double fp, double fn, double b1, double b2, FilterModel model) {
  if (!(b1 >= 0)) throw std::invalid_argument("b1 must be >= 0");
  return std::pow(model.alpha, b1) * learned_fpr_model(fp, fn, b2, model);
}

double optimal_backup_bits(double fp, double fn, FilterModel model) {
  check_alpha(model);
  check_interior(fp, "fp");
  check_interior(fn, "fn");
  const double bracket = fp / ((1 - fp) * (1 / fn - 1));
  return fn * log_alpha(bracket, model);
}

BudgetSplit allocate_budget(double b, double fp, double fn, FilterModel model) {
  if (!(b >= 0)) throw std::invalid_argument("b must be >= 0");
  const double b2_star = optimal_backup_bits(fp, fn, model);
  BudgetSplit split;
  split.b = b;
  split.b2 = std::clamp(b2_star, 0.0, b);
  split.b1 = b - split.b2;
  return split;
}

double plain_gain_threshold(double fp, double fn, double b, FilterModel model) {
  if (fn == 0) throw std::invalid_argument("plain_gain_threshold: fn must be > 0");
  const double fpr = learned_fpr_model(fp, fn, b, model);
  return log_alpha(fpr, model) - b;
}

double sandwich_gain_threshold(double fp, double fn, FilterModel model) {
  check_alpha(model);
  check_interior(fp, "fp");
  check_interior(fn, "fn");
  const double bracket = fp / ((1 - fp) * (1 / fn - 1));
  return log_alpha(fp / (1 - fn), model) - fn * log_alpha(bracket, model);
}

double empirical_fpr(const std::vector<bool>& decisions) {
  if (decisions.empty()) throw std::invalid_argument("empirical_fpr: decision list must be nonempty");
  std::uint64_t positives = 0;
  for (bool d : decisions) positives += d;
  return static_cast<double>(positives) / static_cast<double>(decisions.size());
}

double concentration_bound(std::uint64_t t_size, std::uint64_t q_size, double epsilon) {
  if (t_size == 0 || q_size == 0)
    throw std::invalid_argument("concentration_bound: sample sizes must be >= 1");
  if (!(epsilon > 0)) throw std::invalid_argument("concentration_bound: epsilon must be > 0");
  const double e2 = epsilon * epsilon;
  const double bound = 2 * std::exp(-e2 * static_cast<double>(t_size) / 2) +
                       2 * std::exp(-e2 * static_cast<double>(q_size) / 2);
  return std::min(1.0, bound);
}

double log_alpha(double x, FilterModel model) {
  check_alpha(model);
  if (!(x > 0)) throw std::invalid_argument("log_alpha: argument must be > 0");
  return std::log(x) / std::log(model.alpha);
}

}  // namespace filterkit
