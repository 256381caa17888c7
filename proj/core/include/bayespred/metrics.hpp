#pragma once

#include <span>

namespace bayespred {

// Distances between the true one-step posterior mu(.|h) and the mixture
// posterior xi(.|h) at a single history.
struct StepDistances {
  double absolute = 0.0;   // a_t = sum |mu - xi|
  double square = 0.0;     // s_t = sum (mu - xi)^2
  double hellinger = 0.0;  // h_t = sum (sqrt(mu) - sqrt(xi))^2
  double kl = 0.0;         // d_t = sum' mu ln(mu / xi)
  double abs_log = 0.0;    // b_t = sum' mu |ln(mu / xi)|
  double ratio = 0.0;      // E_t[(sqrt(xi / mu) - 1)^2] = sum' (sqrt(xi) - sqrt(mu))^2

  // d and b are +inf when xi vanishes where mu does not.
  bool infinite_divergence() const;
};

// Primed sums skip outcomes with mu = 0 exactly. Throws DomainError unless
// both vectors have equal length and sum to 1 within 1e-9.
StepDistances instant_distances(std::span<const double> mu, std::span<const double> xi);

double ratio_term(std::span<const double> mu, std::span<const double> xi);

// y ln(y/z) + (1-y) ln((1-y)/(1-z)), with 0 ln 0 = 0.
double binary_relative_entropy(double y, double z);

}  // namespace bayespred
