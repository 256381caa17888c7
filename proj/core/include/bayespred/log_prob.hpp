#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>

namespace bayespred {

// Log-domain zero. Impossible events carry exactly this value, never a
// tiny finite number.
inline constexpr double kLogZero = -std::numeric_limits<double>::infinity();

inline bool is_log_zero(double lp) { return lp == kLogZero; }

inline double safe_log(double p) { return p > 0.0 ? std::log(p) : kLogZero; }

// log(exp(a) + exp(b)) without overflow; exact for -inf operands.
inline double log_add(double a, double b) {
  if (a < b) std::swap(a, b);
  if (is_log_zero(b)) return a;
  return a + std::log1p(std::exp(b - a));
}

// log(sum_i exp(terms[i])). Empty input or all -inf yields -inf.
inline double log_sum_exp(std::span<const double> terms) {
  if (terms.empty()) return kLogZero;
  const double max_term = *std::max_element(terms.begin(), terms.end());
  if (is_log_zero(max_term)) return kLogZero;
  if (std::isinf(max_term)) return max_term;
  double sum = 0.0;
  for (double t : terms) sum += std::exp(t - max_term);
  return max_term + std::log(sum);
}

// Neumaier-compensated running sum. Accumulation order is the caller's
// responsibility; given a fixed order the result is bit-reproducible.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (!std::isfinite(t)) {
      sum_ = t;
      return;
    }
    if (std::abs(sum_) >= std::abs(x)) {
      carry_ += (sum_ - t) + x;
    } else {
      carry_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  void merge(const CompensatedSum& other) {
    add(other.sum_);
    add(other.carry_);
  }
  double value() const { return std::isfinite(sum_) ? sum_ + carry_ : sum_; }

 private:
  double sum_ = 0.0;
  double carry_ = 0.0;
};

}  // namespace bayespred
