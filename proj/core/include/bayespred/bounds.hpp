#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "bayespred/engine.hpp"

namespace bayespred {

// Exact-engine checks: accumulated roundoff over up to 2^24 node visits.
inline constexpr double kExactTolerance = 1e-9;
// Closed-form grid checks.
inline constexpr double kGridTolerance = 1e-12;

// Certified inequality lhs <= rhs. For series checks the reported values
// are those at the location of minimal (tolerance-adjusted) slack.
struct BoundCheckResult {
  std::string id;
  std::string description;
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;  // rhs - lhs
  double tolerance = 0.0;
  bool pass = false;  // slack >= -tolerance
  std::string location;
  bool statistical = false;  // Monte Carlo: tolerance widened by 3 standard errors
  std::string note;
};

bool all_pass(const std::vector<BoundCheckResult>& results);

struct ConvergenceCheckOptions {
  double epsilon = 0.1;  // deviation-count threshold
  double tolerance = kExactTolerance;
};

// Entropy bound, S_n <= D_n, ratio sum <= H_n <= D_n, B_n - D_n <= A_n <=
// sqrt(2 n D_n), the telescoping identity, the deviation-count rate and
// monotonicity of the entropy-bound slack.
std::vector<BoundCheckResult> check_convergence_bounds(const TotalsReport& report,
                                                       const ConvergenceCheckOptions& options = {});

// Regret bounds for one loss. Unbounded (log) losses are routed to
// check_logloss_identity.
std::vector<BoundCheckResult> check_loss_bounds(const TotalsReport& report, std::size_t loss_index,
                                                double tolerance = kExactTolerance);

// |(L_xi - L_mu) - D_n| <= tolerance at every n.
BoundCheckResult check_logloss_identity(const TotalsReport& report, std::size_t loss_index,
                                        double tolerance = kExactTolerance);

// Per-history instantaneous loss chains plus the aggregate squared-gap
// bound. Requires records from exact_evaluate(keep_records = true).
std::vector<BoundCheckResult> check_instant_bounds(const TotalsReport& report, std::size_t loss_index,
                                                   double tolerance = kExactTolerance);

// Per-history b_t - d_t <= a_t <= sqrt(2 d_t) and ratio <= h_t <= d_t.
std::vector<BoundCheckResult> check_instant_distances(const TotalsReport& report,
                                                      double tolerance = kExactTolerance);

// Finite-horizon surrogate for bounded total loss under a deterministic
// true measure and a loss with a zero-loss action for every outcome:
// L_mu = 0, L_xi <= 2 D_n <= 2 ln(1/w_mu), and the L_xi series increases
// by less than 1e-12 over the final ceil(n/4) steps.
std::vector<BoundCheckResult> check_finite_loss_surrogate(const TotalsReport& report, std::size_t loss_index,
                                                          double tolerance = kExactTolerance);

// Binary loss-bound proof functions at (y, z) with A' = A + 1, B' = B + 1.
struct InequalityPoint {
  double a = 1.0;
  double b = 2.0;
  double y = 0.5;
  double z = 0.5;
};

struct ProofValues {
  double f1 = 0.0;  // relevant for z <= 1/2
  double f2 = 0.0;  // relevant for z >= 1/2
  double g1 = 0.0;
  double g2 = 0.0;
};

// Throws DomainError unless 0 < y, z < 1 and A > 0.
ProofValues proof_inequality_values(const InequalityPoint& p);

// B'[KL(y||z)] + A'(1-y) z/(1-z) - y
double proof_f1(double a, double b, double y, double z);
// B'[KL(y||z)] + A'(1-y) - y (1-z)/z
double proof_f2(double a, double b, double y, double z);
// 2B'A'^2 z(1-z) + [(A'-1)B'(1-z) - A'](B' + A' z/(1-z))
double proof_g1(double a, double b, double z);
// g1 with z/(1-z) raised to 1 in the second factor; lower-bounds g1 when
// the bracket is negative and is quadratic in z.
double proof_g1_relaxed(double a, double b, double z);
// [(A'-1)B'z - A' + 2z(1-z)](B' + 1 - 1/z) + 2(1-z)^2
double proof_g2(double a, double b, double z);
// Stationary points of f1, f2 in z for fixed y.
double proof_y_star_1(double a, double b, double z);
double proof_y_star_2(double a, double b, double z);

enum class BRule { kReciprocalPlusOne, kQuarterPlusReciprocal, kFixed };

std::string to_string(BRule rule);
double b_from_rule(BRule rule, double a, double fixed_b = 0.0);

struct GridSpec {
  BRule rule = BRule::kReciprocalPlusOne;
  double fixed_b = 0.0;  // kFixed only
  std::vector<double> a_values;
  std::size_t yz_points = 201;
  double margin = 1e-4;  // y, z in [margin, 1 - margin]
  double tolerance = kGridTolerance;
  unsigned workers = 1;
};

// count values from lo to hi, evenly spaced in log scale.
std::vector<double> log_spaced(double lo, double hi, std::size_t count);
// count values from lo to hi; the centre point of an odd count is exactly 1/2
// when lo + hi = 1.
std::vector<double> unit_grid(double margin, std::size_t count);

struct GridVerification {
  BoundCheckResult f1;  // min over z <= 1/2
  BoundCheckResult f2;  // min over z >= 1/2
  bool pass() const { return f1.pass && f2.pass; }
};

GridVerification grid_verify_proof_inequalities(const GridSpec& spec);

}  // namespace bayespred
