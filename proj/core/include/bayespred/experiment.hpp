#pragma once

#include <cstddef>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "bayespred/bounds.hpp"
#include "bayespred/config.hpp"
#include "bayespred/engine.hpp"

namespace bayespred {

// Exit codes shared by the runner and the CLI.
inline constexpr int kExitPass = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitFail = 2;

struct RatioTraceResult {
  Sequence path;
  std::optional<Symbol> probe;
  std::vector<double> ratios;  // index t-1 holds time t
  double slope = 0.0;
  std::size_t fit_first = 0;
  std::size_t fit_last = 0;
};

struct ExperimentResult {
  std::string name;
  TotalsReport report;
  std::vector<BoundCheckResult> checks;
  std::optional<RatioTraceResult> trace;

  bool pass() const { return all_pass(checks); }
  int exit_code() const { return pass() ? kExitPass : kExitFail; }
};

// Runs the configured engine and every requested check. `workers` of 0
// uses the configured count. Throws ResourceError when the exact engine
// exceeds its budget.
ExperimentResult run_experiment(const ExperimentConfig& config, unsigned workers = 0);

// Proof-inequality grids for the configured B rules.
std::vector<BoundCheckResult> run_proof_grid(const ProofGridConfig& grid, unsigned workers = 1);

// Series CSV: header, one row per t = 1..n, then a summary row whose t
// field is "summary" and whose every column holds the total at n.
std::vector<std::string> csv_columns(const TotalsReport& report);
void write_series_csv(std::ostream& out, const TotalsReport& report);
void write_trace_csv(std::ostream& out, const RatioTraceResult& trace);

// One line per bound: status, id, lhs, rhs, slack, location, note.
void write_text_report(std::ostream& out, const ExperimentResult& result);
std::string format_check_line(const BoundCheckResult& check);
void write_json_report(std::ostream& out, const ExperimentResult& result);

// Documentation of every CSV column pattern.
std::string describe_columns();

// Doubles as %.17g; non-finite values as inf, -inf, nan.
std::string format_double(double v);

}  // namespace bayespred
