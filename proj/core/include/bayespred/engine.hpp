#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bayespred/losses.hpp"
#include "bayespred/measure.hpp"
#include "bayespred/metrics.hpp"
#include "bayespred/mixture.hpp"

namespace bayespred {

inline constexpr std::uint64_t kDefaultWorkBudget = std::uint64_t{1} << 24;
inline constexpr std::uint64_t kDefaultRecordBudget = std::uint64_t{1} << 18;

// One expected quantity over t = 1..n. Index t-1 holds time t.
struct Series {
  std::vector<double> step;        // E[q_t]
  std::vector<double> cumulative;  // sum_{s <= t} E[q_s]
  // Monte Carlo only: standard errors of step and cumulative estimates.
  std::vector<double> step_se;
  std::vector<double> cumulative_se;

  double total() const { return cumulative.empty() ? 0.0 : cumulative.back(); }
  double total_se() const { return cumulative_se.empty() ? 0.0 : cumulative_se.back(); }
};

struct LossTotals {
  std::string name;
  bool bounded = true;
  Series xi;           // l_t of the mixture-based scheme
  Series mu;           // l_t of the informed scheme
  Series gap;          // l_t^xi - l_t^mu
  Series gap_squared;  // (l_t^xi - l_t^mu)^2
  std::vector<std::string> strategy_names;
  std::vector<Series> strategies;  // l_t of each comparison scheme
};

// Per-history values from the exact engine.
struct HistoryRecord {
  std::size_t t = 0;  // the history is x_{<t}
  Sequence history;
  double weight = 0.0;  // mu(x_{<t})
  std::vector<double> mu_posterior;
  std::vector<double> xi_posterior;
  StepDistances distances;
  std::vector<double> loss_xi;  // per loss, l_t^xi(x_{<t})
  std::vector<double> loss_mu;
};

enum class EngineKind { kExact, kMonteCarlo };

struct TotalsReport {
  EngineKind engine = EngineKind::kExact;
  std::size_t horizon = 0;
  std::size_t samples = 0;  // Monte Carlo only
  std::uint64_t seed = 0;
  std::size_t true_index = 0;
  double log_inverse_weight = 0.0;  // ln(1 / w_mu)
  std::uint64_t node_visits = 0;

  Series absolute;   // a_t, A_n
  Series square;     // s_t, S_n
  Series hellinger;  // h_t, H_n
  Series kl;         // d_t, D_n
  Series abs_log;    // b_t, B_n
  Series ratio;      // E[(sqrt(xi_t / mu_t) - 1)^2]
  // E[ln(mu(x_{1:n}) / xi(x_{1:n}))], computed from path marginals.
  double kl_direct = 0.0;
  double kl_direct_se = 0.0;

  std::vector<LossTotals> losses;
  std::vector<HistoryRecord> records;  // exact engine, when requested

  bool statistical() const { return engine == EngineKind::kMonteCarlo; }
};

struct EvaluationOptions {
  std::uint64_t work_budget = kDefaultWorkBudget;  // node visits, exact engine
  unsigned workers = 1;
  bool keep_records = false;
  // Upper limit on stored histories when keep_records is set.
  std::uint64_t record_budget = kDefaultRecordBudget;
};

struct EvaluationProblem {
  const MixtureModel* mixture = nullptr;
  std::size_t true_index = 0;
  std::vector<LossSpec> losses;
  std::vector<Strategy> strategies;
  std::size_t horizon = 0;
};

// Exhaustive mu-weighted enumeration of every mu-positive history x_{<t},
// t <= n. Output does not depend on the worker count. Throws ResourceError,
// before any evaluation, when the mu-positive histories outnumber the
// node-visit budget (or the record budget when records are kept).
TotalsReport exact_evaluate(const EvaluationProblem& problem, const EvaluationOptions& options = {});

// Sample means over `samples` mu-sampled paths; per-step conditionals are
// exact. Deterministic given seed regardless of worker count.
TotalsReport monte_carlo_evaluate(const EvaluationProblem& problem, std::size_t samples, std::uint64_t seed,
                                  unsigned workers = 1);

// xi(x|x_{<t}) / mu(x|x_{<t}) along `path`, where x is path[t-1] or, when
// given, the fixed probe symbol. Throws DomainError if the path leaves the
// mu-support or the probe has mu-probability 0.
std::vector<double> ratio_trace(const MixtureModel& mixture, std::size_t true_index, History path,
                                std::optional<Symbol> probe = std::nullopt);

// Least-squares slope of ln(values[t-1]) against ln(t) over t in [first, last].
double fit_loglog_slope(const std::vector<double>& values, std::size_t first, std::size_t last);

}  // namespace bayespred
