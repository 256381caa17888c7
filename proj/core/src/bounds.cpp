#include "bayespred/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <thread>
#include <utility>

#include "bayespred/errors.hpp"
#include "bayespred/metrics.hpp"

namespace bayespred {

namespace {

using BoundFn = std::function<std::pair<double, double>(std::span<const double>, double)>;

std::string format_value(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

// Tracks the point of minimal tolerance-adjusted slack.
class WorstPoint {
 public:
  WorstPoint(std::string id, std::string description, bool statistical) {
    result_.id = std::move(id);
    result_.description = std::move(description);
    result_.statistical = statistical;
  }
  void offer(double lhs, double rhs, double tolerance, const std::function<std::string()>& location) {
    const double slack = rhs - lhs;
    const double margin = std::isnan(slack) ? -std::numeric_limits<double>::infinity() : slack + tolerance;
    if (!seen_ || margin < best_margin_) {
      seen_ = true;
      best_margin_ = margin;
      result_.lhs = lhs;
      result_.rhs = rhs;
      result_.slack = slack;
      result_.tolerance = tolerance;
      result_.location = location();
    }
  }
  BoundCheckResult finish(std::string note = {}) {
    result_.pass = seen_ && best_margin_ >= 0.0;
    if (!seen_) result_.location = "no data";
    result_.note = std::move(note);
    return result_;
  }

 private:
  BoundCheckResult result_;
  bool seen_ = false;
  double best_margin_ = 0.0;
};

std::string at_n(std::size_t t) { return "n=" + std::to_string(t); }

// Checks lhs <= rhs over every prefix length n = 1..horizon of the given
// cumulative series. Monte Carlo reports widen the tolerance by 3 standard
// errors propagated through the bound by one-sided perturbation.
BoundCheckResult series_check(std::string id, std::string description, const TotalsReport& report,
                              const std::vector<const Series*>& inputs, const BoundFn& fn, double tolerance,
                              std::string note = {}) {
  WorstPoint worst(std::move(id), std::move(description), report.statistical());
  std::vector<double> values(inputs.size());
  for (std::size_t t = 1; t <= report.horizon; ++t) {
    for (std::size_t i = 0; i < inputs.size(); ++i) values[i] = inputs[i]->cumulative[t - 1];
    const double n = static_cast<double>(t);
    const auto [lhs, rhs] = fn(values, n);
    double tol = tolerance;
    if (report.statistical()) {
      const double slack = rhs - lhs;
      for (std::size_t i = 0; i < inputs.size(); ++i) {
        const double se = inputs[i]->cumulative_se[t - 1];
        if (se == 0.0) continue;
        double spread = 0.0;
        for (double sign : {1.0, -1.0}) {
          std::vector<double> shifted = values;
          shifted[i] = std::max(0.0, shifted[i] + sign * se);
          const auto [l2, r2] = fn(shifted, n);
          spread = std::max(spread, std::abs((r2 - l2) - slack));
        }
        tol += 3.0 * spread;
      }
    }
    worst.offer(lhs, rhs, tol, [t] { return at_n(t); });
  }
  return worst.finish(std::move(note));
}

std::string history_location(const HistoryRecord& r) {
  return "t=" + std::to_string(r.t) + " history='" + to_string(r.history) + "'";
}

void require_records(const TotalsReport& report) {
  if (report.engine != EngineKind::kExact || report.records.empty()) {
    throw DomainError("per-history checks require records from the exact engine");
  }
}

const LossTotals& loss_at(const TotalsReport& report, std::size_t loss_index) {
  if (loss_index >= report.losses.size()) throw DomainError("loss index out of range");
  return report.losses[loss_index];
}

void check_unit_interval(double y, double z) {
  if (!(y > 0.0 && y < 1.0) || !(z > 0.0 && z < 1.0)) {
    throw DomainError("proof inequalities need 0 < y, z < 1 (log singularities at the endpoints)");
  }
}

}  // namespace

bool all_pass(const std::vector<BoundCheckResult>& results) {
  return std::all_of(results.begin(), results.end(), [](const BoundCheckResult& r) { return r.pass; });
}

std::vector<BoundCheckResult> check_convergence_bounds(const TotalsReport& report,
                                                       const ConvergenceCheckOptions& options) {
  if (report.horizon == 0) throw DomainError("empty report");
  if (!(options.epsilon > 0.0)) throw DomainError("deviation-count epsilon must be positive");
  const double tol = options.tolerance;
  const double log_w = report.log_inverse_weight;
  std::vector<BoundCheckResult> out;

  out.push_back(series_check("entropy-bound", "D_n <= ln(1/w_mu)", report, {&report.kl},
                             [log_w](std::span<const double> v, double) { return std::pair{v[0], log_w}; }, tol));
  out.push_back(series_check("conv-i-square", "S_n <= D_n", report, {&report.square, &report.kl},
                             [](std::span<const double> v, double) { return std::pair{v[0], v[1]}; }, tol));
  out.push_back(series_check("conv-iv-ratio", "sum_t E[(sqrt(xi_t/mu_t)-1)^2] <= H_n", report,
                             {&report.ratio, &report.hellinger},
                             [](std::span<const double> v, double) { return std::pair{v[0], v[1]}; }, tol));
  out.push_back(series_check("conv-iv-hellinger", "H_n <= D_n", report, {&report.hellinger, &report.kl},
                             [](std::span<const double> v, double) { return std::pair{v[0], v[1]}; }, tol));
  out.push_back(series_check("conv-vi-lower", "B_n - D_n <= A_n", report,
                             {&report.abs_log, &report.kl, &report.absolute},
                             [](std::span<const double> v, double) { return std::pair{v[0] - v[1], v[2]}; }, tol));
  out.push_back(series_check("conv-vi-upper", "A_n <= sqrt(2 n D_n)", report, {&report.absolute, &report.kl},
                             [](std::span<const double> v, double n) {
                               return std::pair{v[0], std::sqrt(2.0 * n * v[1])};
                             },
                             tol));

  {
    WorstPoint identity("entropy-identity", "sum_t E[d_t] = E[ln mu(x_1:n)/xi(x_1:n)]", report.statistical());
    const double d = report.kl.total();
    double id_tol = tol;
    if (report.statistical()) id_tol += 3.0 * (report.kl.total_se() + report.kl_direct_se);
    identity.offer(std::abs(d - report.kl_direct), 0.0, id_tol, [&] { return at_n(report.horizon); });
    out.push_back(identity.finish());
  }

  {
    const double eps2 = options.epsilon * options.epsilon;
    WorstPoint count("deviation-count", "#{t <= n : E[s_t] > eps^2} <= D_n / eps^2", report.statistical());
    std::size_t exceed = 0;
    for (std::size_t t = 1; t <= report.horizon; ++t) {
      if (report.square.step[t - 1] > eps2) ++exceed;
      double c_tol = tol;
      if (report.statistical()) c_tol += 3.0 * report.kl.cumulative_se[t - 1] / eps2;
      count.offer(static_cast<double>(exceed), report.kl.cumulative[t - 1] / eps2, c_tol, [t] { return at_n(t); });
    }
    out.push_back(count.finish("epsilon=" + format_value(options.epsilon)));
  }

  {
    WorstPoint monotone("entropy-slack-monotone", "ln(1/w_mu) - D_n non-increasing in n", report.statistical());
    for (std::size_t t = 2; t <= report.horizon; ++t) {
      monotone.offer(report.kl.cumulative[t - 2], report.kl.cumulative[t - 1], tol, [t] { return at_n(t); });
    }
    if (report.horizon == 1) monotone.offer(0.0, 0.0, tol, [] { return at_n(1); });
    out.push_back(monotone.finish());
  }
  return out;
}

std::vector<BoundCheckResult> check_loss_bounds(const TotalsReport& report, std::size_t loss_index, double tolerance) {
  const LossTotals& loss = loss_at(report, loss_index);
  if (!loss.bounded) return {check_logloss_identity(report, loss_index, tolerance)};
  const std::string tag = "[" + loss.name + "]";
  std::vector<BoundCheckResult> out;
  const std::vector<const Series*> gap_l_d = {&loss.gap, &loss.mu, &report.kl};

  out.push_back(series_check("loss-nonneg" + tag, "0 <= L_xi - L_mu", report, {&loss.gap},
                             [](std::span<const double> v, double) { return std::pair{0.0, v[0]}; }, tolerance));
  out.push_back(series_check("loss-sqrt" + tag, "L_xi - L_mu <= D_n + sqrt(4 L_mu D_n + D_n^2)", report, gap_l_d,
                             [](std::span<const double> v, double) {
                               const double l = std::max(0.0, v[1]);
                               const double d = std::max(0.0, v[2]);
                               return std::pair{v[0], d + std::sqrt(4.0 * l * d + d * d)};
                             },
                             tolerance));
  out.push_back(series_check("loss-chain" + tag, "D_n + sqrt(4 L_mu D_n + D_n^2) <= 2 D_n + 2 sqrt(L_mu D_n)",
                             report, {&loss.mu, &report.kl},
                             [](std::span<const double> v, double) {
                               const double l = std::max(0.0, v[0]);
                               const double d = std::max(0.0, v[1]);
                               return std::pair{d + std::sqrt(4.0 * l * d + d * d), 2.0 * d + 2.0 * std::sqrt(l * d)};
                             },
                             tolerance));
  out.push_back(series_check("loss-linear" + tag, "L_xi - L_mu <= 2 D_n + 2 sqrt(L_mu D_n)", report, gap_l_d,
                             [](std::span<const double> v, double) {
                               const double l = std::max(0.0, v[1]);
                               const double d = std::max(0.0, v[2]);
                               return std::pair{v[0], 2.0 * d + 2.0 * std::sqrt(l * d)};
                             },
                             tolerance));
  out.push_back(series_check("gap-abs" + tag, "L_xi - L_mu <= A_n", report, {&loss.gap, &report.absolute},
                             [](std::span<const double> v, double) { return std::pair{v[0], v[1]}; }, tolerance));
  out.push_back(series_check("gap-sqrt-2nd" + tag, "L_xi - L_mu <= sqrt(2 n D_n)", report, {&loss.gap, &report.kl},
                             [](std::span<const double> v, double n) {
                               return std::pair{v[0], std::sqrt(2.0 * n * std::max(0.0, v[1]))};
                             },
                             tolerance));
  for (std::size_t j = 0; j < loss.strategies.size(); ++j) {
    const std::string stag = "[" + loss.name + "," + loss.strategy_names[j] + "]";
    out.push_back(series_check("informed-optimal" + stag, "L_mu <= L_Lambda", report,
                               {&loss.mu, &loss.strategies[j]},
                               [](std::span<const double> v, double) { return std::pair{v[0], v[1]}; }, tolerance));
    out.push_back(series_check("any-scheme-lower" + stag, "L_Lambda >= L_xi - 2 sqrt(L_xi D_n)", report,
                               {&loss.xi, &report.kl, &loss.strategies[j]},
                               [](std::span<const double> v, double) {
                                 const double lx = std::max(0.0, v[0]);
                                 const double d = std::max(0.0, v[1]);
                                 return std::pair{lx - 2.0 * std::sqrt(lx * d), v[2]};
                               },
                               tolerance));
  }
  return out;
}

BoundCheckResult check_logloss_identity(const TotalsReport& report, std::size_t loss_index, double tolerance) {
  const LossTotals& loss = loss_at(report, loss_index);
  return series_check("logloss-identity[" + loss.name + "]", "|(L_xi - L_mu) - D_n| <= tol", report,
                      {&loss.gap, &report.kl},
                      [](std::span<const double> v, double) { return std::pair{std::abs(v[0] - v[1]), 0.0}; },
                      tolerance);
}

std::vector<BoundCheckResult> check_instant_bounds(const TotalsReport& report, std::size_t loss_index,
                                                   double tolerance) {
  require_records(report);
  const LossTotals& loss = loss_at(report, loss_index);
  const std::string tag = "[" + loss.name + "]";
  WorstPoint nonneg("instant-nonneg" + tag, "0 <= l_xi - l_mu", false);
  WorstPoint abs_gap("instant-abs" + tag, "l_xi - l_mu <= sum |xi_t - mu_t|", false);
  WorstPoint abs_kl("instant-abs-kl" + tag, "sum |xi_t - mu_t| <= sqrt(2 d_t)", false);
  WorstPoint entropy("instant-entropy" + tag, "l_xi - l_mu <= 2 d_t + 2 sqrt(l_mu d_t)", false);
  for (const HistoryRecord& r : report.records) {
    const double gap = r.loss_xi[loss_index] - r.loss_mu[loss_index];
    const double d = r.distances.kl;
    const double a = r.distances.absolute;
    const auto where = [&r] { return history_location(r); };
    nonneg.offer(0.0, gap, tolerance, where);
    abs_gap.offer(gap, a, tolerance, where);
    abs_kl.offer(a, std::sqrt(2.0 * d), tolerance, where);
    entropy.offer(gap, 2.0 * d + 2.0 * std::sqrt(std::max(0.0, r.loss_mu[loss_index]) * d), tolerance, where);
  }
  std::vector<BoundCheckResult> out;
  if (!loss.bounded) {
    // Losses outside [0,1] void the |l_s - l_m| <= 1 step.
    out.push_back(nonneg.finish());
    out.push_back(entropy.finish("unbounded loss: informational"));
    return out;
  }
  out.push_back(nonneg.finish());
  out.push_back(abs_gap.finish());
  out.push_back(abs_kl.finish());
  out.push_back(entropy.finish());
  out.push_back(series_check("instant-squared" + tag, "sum_t E[(l_xi - l_mu)^2] <= 2 D_n", report,
                             {&loss.gap_squared, &report.kl},
                             [](std::span<const double> v, double) { return std::pair{v[0], 2.0 * v[1]}; },
                             tolerance));
  return out;
}

std::vector<BoundCheckResult> check_instant_distances(const TotalsReport& report, double tolerance) {
  require_records(report);
  WorstPoint lower("instant-vi-lower", "b_t - d_t <= a_t", false);
  WorstPoint upper("instant-vi-upper", "a_t <= sqrt(2 d_t)", false);
  WorstPoint ratio("instant-ratio", "E_t[(sqrt(xi_t/mu_t)-1)^2] <= h_t", false);
  WorstPoint hellinger("instant-hellinger", "h_t <= d_t", false);
  for (const HistoryRecord& r : report.records) {
    const auto& m = r.distances;
    const auto where = [&r] { return history_location(r); };
    lower.offer(m.abs_log - m.kl, m.absolute, tolerance, where);
    upper.offer(m.absolute, std::sqrt(2.0 * m.kl), tolerance, where);
    ratio.offer(m.ratio, m.hellinger, tolerance, where);
    hellinger.offer(m.hellinger, m.kl, tolerance, where);
  }
  return {lower.finish(), upper.finish(), ratio.finish(), hellinger.finish()};
}

std::vector<BoundCheckResult> check_finite_loss_surrogate(const TotalsReport& report, std::size_t loss_index,
                                                          double tolerance) {
  const LossTotals& loss = loss_at(report, loss_index);
  const std::string tag = "[" + loss.name + "]";
  const double log_w = report.log_inverse_weight;
  std::vector<BoundCheckResult> out;
  out.push_back(series_check("finite-informed-zero" + tag, "L_mu = 0 (deterministic mu, zero-loss actions)", report,
                             {&loss.mu}, [](std::span<const double> v, double) { return std::pair{v[0], 0.0}; },
                             tolerance));
  out.push_back(series_check("finite-2d" + tag, "L_xi <= 2 D_n", report, {&loss.xi, &report.kl},
                             [](std::span<const double> v, double) { return std::pair{v[0], 2.0 * v[1]}; },
                             tolerance));
  out.push_back(series_check("finite-bound" + tag, "L_xi <= 2 ln(1/w_mu)", report, {&loss.xi},
                             [log_w](std::span<const double> v, double) { return std::pair{v[0], 2.0 * log_w}; },
                             tolerance));
  const std::size_t n = report.horizon;
  const std::size_t window = (n + 3) / 4;
  WorstPoint plateau("finite-plateau" + tag, "L_xi(n) - L_xi(n - ceil(n/4)) < 1e-12", report.statistical());
  const double before = n > window ? loss.xi.cumulative[n - window - 1] : 0.0;
  plateau.offer(loss.xi.total() - before, 1e-12, 0.0, [&] {
    return "steps " + std::to_string(n - window + 1) + ".." + std::to_string(n);
  });
  out.push_back(plateau.finish("finite-horizon surrogate for a bounded infinite-horizon total"));
  return out;
}

double proof_f1(double a, double b, double y, double z) {
  const double ap = a + 1.0;
  const double bp = b + 1.0;
  return bp * binary_relative_entropy(y, z) + ap * (1.0 - y) * z / (1.0 - z) - y;
}

double proof_f2(double a, double b, double y, double z) {
  const double ap = a + 1.0;
  const double bp = b + 1.0;
  return bp * binary_relative_entropy(y, z) + ap * (1.0 - y) - y * (1.0 - z) / z;
}

double proof_g1(double a, double b, double z) {
  const double ap = a + 1.0;
  const double bp = b + 1.0;
  return 2.0 * bp * ap * ap * z * (1.0 - z) + ((ap - 1.0) * bp * (1.0 - z) - ap) * (bp + ap * z / (1.0 - z));
}

double proof_g1_relaxed(double a, double b, double z) {
  const double ap = a + 1.0;
  const double bp = b + 1.0;
  return 2.0 * bp * ap * ap * z * (1.0 - z) + ((ap - 1.0) * bp * (1.0 - z) - ap) * (bp + ap);
}

double proof_g2(double a, double b, double z) {
  const double ap = a + 1.0;
  const double bp = b + 1.0;
  return ((ap - 1.0) * bp * z - ap + 2.0 * z * (1.0 - z)) * (bp + 1.0 - 1.0 / z) + 2.0 * (1.0 - z) * (1.0 - z);
}

double proof_y_star_1(double a, double b, double z) {
  const double ap = a + 1.0;
  const double bp = b + 1.0;
  return z * (bp * (1.0 - z) + ap) / (bp * (1.0 - z) + ap * z);
}

double proof_y_star_2(double, double b, double z) {
  const double bp = b + 1.0;
  return z * bp * z / ((bp + 1.0) * z - 1.0);
}

ProofValues proof_inequality_values(const InequalityPoint& p) {
  check_unit_interval(p.y, p.z);
  if (!(p.a > 0.0)) throw DomainError("proof inequalities need A > 0");
  return {proof_f1(p.a, p.b, p.y, p.z), proof_f2(p.a, p.b, p.y, p.z), proof_g1(p.a, p.b, p.z),
          proof_g2(p.a, p.b, p.z)};
}

std::string to_string(BRule rule) {
  switch (rule) {
    case BRule::kReciprocalPlusOne:
      return "B=1/A+1";
    case BRule::kQuarterPlusReciprocal:
      return "B=A/4+1/A";
    case BRule::kFixed:
      return "B=fixed";
  }
  return "?";
}

double b_from_rule(BRule rule, double a, double fixed_b) {
  switch (rule) {
    case BRule::kReciprocalPlusOne:
      return 1.0 / a + 1.0;
    case BRule::kQuarterPlusReciprocal:
      return a / 4.0 + 1.0 / a;
    case BRule::kFixed:
      return fixed_b;
  }
  return fixed_b;
}

std::vector<double> log_spaced(double lo, double hi, std::size_t count) {
  if (!(lo > 0.0 && hi >= lo) || count == 0) throw DomainError("log_spaced: need 0 < lo <= hi and count >= 1");
  if (count == 1) return {lo};
  std::vector<double> out(count);
  const double step = std::log(hi / lo) / static_cast<double>(count - 1);
  for (std::size_t i = 0; i < count; ++i) out[i] = lo * std::exp(step * static_cast<double>(i));
  out.back() = hi;
  return out;
}

std::vector<double> unit_grid(double margin, std::size_t count) {
  if (!(margin > 0.0 && margin < 0.5) || count < 2) throw DomainError("unit_grid: need 0 < margin < 1/2, count >= 2");
  std::vector<double> out(count);
  const double span = 1.0 - 2.0 * margin;
  const double centre = static_cast<double>(count - 1) / 2.0;
  for (std::size_t i = 0; i < count; ++i) {
    out[i] = 0.5 + span * (static_cast<double>(i) - centre) / static_cast<double>(count - 1);
  }
  return out;
}

GridVerification grid_verify_proof_inequalities(const GridSpec& spec) {
  if (spec.a_values.empty()) throw DomainError("grid verification: empty A grid");
  for (double a : spec.a_values) {
    if (!(a > 0.0)) throw DomainError("grid verification: A values must be positive");
  }
  const std::vector<double> grid = unit_grid(spec.margin, spec.yz_points);

  struct Minimum {
    double value = std::numeric_limits<double>::infinity();
    double a = 0.0, b = 0.0, y = 0.0, z = 0.0;
  };
  std::vector<Minimum> min_f1(spec.a_values.size());
  std::vector<Minimum> min_f2(spec.a_values.size());

  const auto scan = [&](std::size_t ia) {
    const double a = spec.a_values[ia];
    const double b = b_from_rule(spec.rule, a, spec.fixed_b);
    for (double z : grid) {
      for (double y : grid) {
        if (z <= 0.5) {
          const double v = proof_f1(a, b, y, z);
          if (v < min_f1[ia].value) min_f1[ia] = {v, a, b, y, z};
        }
        if (z >= 0.5) {
          const double v = proof_f2(a, b, y, z);
          if (v < min_f2[ia].value) min_f2[ia] = {v, a, b, y, z};
        }
      }
    }
  };
  const std::size_t threads = std::min<std::size_t>(std::max(1u, spec.workers), spec.a_values.size());
  if (threads <= 1) {
    for (std::size_t i = 0; i < spec.a_values.size(); ++i) scan(i);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < threads; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t i = w; i < spec.a_values.size(); i += threads) scan(i);
      });
    }
    for (auto& t : pool) t.join();
  }

  const std::string rule = to_string(spec.rule);
  const std::string note = spec.rule == BRule::kQuarterPlusReciprocal
                               ? "numerical evidence on a finite grid, not a proof"
                               : "grid minimum of a closed-form function";
  const auto summarize = [&](const std::vector<Minimum>& mins, const std::string& id, const std::string& what) {
    WorstPoint worst(id + "[" + rule + "]", what, false);
    for (const Minimum& m : mins) {
      worst.offer(0.0, m.value, spec.tolerance, [&m] {
        return "A=" + format_value(m.a) + " B=" + format_value(m.b) + " y=" + format_value(m.y) +
               " z=" + format_value(m.z);
      });
    }
    return worst.finish(note);
  };
  return {summarize(min_f1, "proof-f1", "min f1(y,z) over z <= 1/2 is >= 0"),
          summarize(min_f2, "proof-f2", "min f2(y,z) over z >= 1/2 is >= 0")};
}

}  // namespace bayespred
