#include "bayespred/metrics.hpp"

#include <cmath>
#include <limits>

#include "bayespred/errors.hpp"
#include "bayespred/measure.hpp"

namespace bayespred {

namespace {

void check_pair(std::span<const double> mu, std::span<const double> xi) {
  if (mu.size() != xi.size() || mu.empty()) throw DomainError("distance: vectors must have equal, non-zero length");
  validate_distribution(mu, 1e-9, "mu posterior");
  validate_distribution(xi, 1e-9, "xi posterior");
}

double ratio_term_unchecked(std::span<const double> mu, std::span<const double> xi) {
  double total = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    if (mu[i] == 0.0) continue;
    const double diff = std::sqrt(xi[i]) - std::sqrt(mu[i]);
    total += diff * diff;
  }
  return total;
}

}  // namespace

bool StepDistances::infinite_divergence() const { return std::isinf(kl) || std::isinf(abs_log); }

StepDistances instant_distances(std::span<const double> mu, std::span<const double> xi) {
  check_pair(mu, xi);
  constexpr double kInf = std::numeric_limits<double>::infinity();
  StepDistances out;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const double y = mu[i];
    const double z = xi[i];
    const double diff = y - z;
    out.absolute += std::abs(diff);
    out.square += diff * diff;
    const double root_diff = std::sqrt(y) - std::sqrt(z);
    out.hellinger += root_diff * root_diff;
    if (y == 0.0) continue;
    if (z == 0.0) {
      out.kl = kInf;
      out.abs_log = kInf;
      continue;
    }
    const double log_ratio = std::log(y / z);
    out.kl += y * log_ratio;
    out.abs_log += y * std::abs(log_ratio);
  }
  // Roundoff can leave a tiny negative KL for nearly equal vectors.
  if (out.kl < 0.0) out.kl = 0.0;
  out.ratio = ratio_term_unchecked(mu, xi);
  return out;
}

double ratio_term(std::span<const double> mu, std::span<const double> xi) {
  check_pair(mu, xi);
  return ratio_term_unchecked(mu, xi);
}

double binary_relative_entropy(double y, double z) {
  double total = 0.0;
  if (y > 0.0) total += y * std::log(y / z);
  if (y < 1.0) total += (1.0 - y) * std::log((1.0 - y) / (1.0 - z));
  return total;
}

}  // namespace bayespred
