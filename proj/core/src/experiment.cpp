#include "bayespred/experiment.hpp"

#include <cmath>
#include <cstdio>
#include <functional>

#include <json.hpp>

#include "bayespred/errors.hpp"

namespace bayespred {

namespace {

struct Column {
  std::string name;
  const Series* series;
  bool step;  // E[q_t] rather than the running total
};

std::vector<Column> columns_of(const TotalsReport& report) {
  std::vector<Column> cols = {
      {"E_at", &report.absolute, true}, {"E_st", &report.square, true},  {"E_ht", &report.hellinger, true},
      {"E_dt", &report.kl, true},       {"E_bt", &report.abs_log, true}, {"D_cum", &report.kl, false},
      {"A_cum", &report.absolute, false}, {"S_cum", &report.square, false}, {"H_cum", &report.hellinger, false},
      {"B_cum", &report.abs_log, false},
  };
  for (const LossTotals& loss : report.losses) {
    cols.push_back({"L_xi_cum_" + loss.name, &loss.xi, false});
    cols.push_back({"L_mu_cum_" + loss.name, &loss.mu, false});
    cols.push_back({"gap_" + loss.name, &loss.gap, false});
  }
  cols.push_back({"E_rt", &report.ratio, true});
  cols.push_back({"R_cum", &report.ratio, false});
  for (const LossTotals& loss : report.losses) {
    cols.push_back({"E_lxi_" + loss.name, &loss.xi, true});
    cols.push_back({"E_lmu_" + loss.name, &loss.mu, true});
    cols.push_back({"gap2_cum_" + loss.name, &loss.gap_squared, false});
    for (std::size_t s = 0; s < loss.strategies.size(); ++s) {
      cols.push_back({"L_cum_" + loss.name + "_" + loss.strategy_names[s], &loss.strategies[s], false});
    }
  }
  return cols;
}

double value_at(const Column& c, std::size_t t) { return c.step ? c.series->step[t - 1] : c.series->cumulative[t - 1]; }
double se_at(const Column& c, std::size_t t) {
  return c.step ? c.series->step_se[t - 1] : c.series->cumulative_se[t - 1];
}

const char* engine_name(EngineKind kind) { return kind == EngineKind::kExact ? "exact" : "monte-carlo"; }

BoundCheckResult interval_check(std::string id, std::string description, double lhs, double rhs, std::string location,
                                std::string note) {
  BoundCheckResult r;
  r.id = std::move(id);
  r.description = std::move(description);
  r.lhs = lhs;
  r.rhs = rhs;
  r.slack = rhs - lhs;
  r.tolerance = 0.0;
  r.pass = r.slack >= 0.0;
  r.location = std::move(location);
  r.note = std::move(note);
  return r;
}

RatioTraceResult run_ratio_trace(const ExperimentConfig& config, const MixtureModel& mixture) {
  const RatioTraceConfig& rt = *config.ratio_trace;
  RatioTraceResult out;
  out.path = rt.path(config.horizon);
  out.probe = rt.probe;
  out.ratios = ratio_trace(mixture, config.true_component_index, out.path, rt.probe);
  out.fit_first = rt.fit_first;
  out.fit_last = rt.fit_last;
  out.slope = fit_loglog_slope(out.ratios, rt.fit_first, rt.fit_last);
  return out;
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == 0.0) return "0";  // no negative zero
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<BoundCheckResult> run_proof_grid(const ProofGridConfig& grid, unsigned workers) {
  std::vector<BoundCheckResult> out;
  for (BRule rule : grid.rules) {
    GridSpec spec;
    spec.rule = rule;
    spec.a_values = log_spaced(grid.a_min, grid.a_max, grid.a_count);
    spec.yz_points = grid.yz_points;
    spec.margin = grid.margin;
    spec.workers = workers;
    GridVerification v = grid_verify_proof_inequalities(spec);
    out.push_back(v.f1);
    out.push_back(v.f2);
  }
  return out;
}

ExperimentResult run_experiment(const ExperimentConfig& config, unsigned workers) {
  if (workers == 0) workers = config.workers;
  const MixtureModel mixture = config.mixture();
  EvaluationProblem problem;
  problem.mixture = &mixture;
  problem.true_index = config.true_component_index;
  problem.losses = config.losses;
  problem.strategies = config.strategies;
  problem.horizon = config.horizon;

  ExperimentResult result;
  result.name = config.name;
  if (config.engine == EngineKind::kExact) {
    EvaluationOptions options;
    options.work_budget = config.work_budget;
    options.workers = workers;
    options.keep_records = config.has_check(CheckKind::kInstant);
    result.report = exact_evaluate(problem, options);
  } else {
    result.report = monte_carlo_evaluate(problem, config.samples, config.seed, workers);
  }
  const TotalsReport& report = result.report;
  auto& checks = result.checks;
  const auto append = [&checks](std::vector<BoundCheckResult> more) {
    for (auto& r : more) checks.push_back(std::move(r));
  };

  for (CheckKind kind : config.checks) {
    switch (kind) {
      case CheckKind::kConvergence: {
        ConvergenceCheckOptions options;
        options.epsilon = config.epsilon;
        append(check_convergence_bounds(report, options));
        break;
      }
      case CheckKind::kLoss:
        for (std::size_t i = 0; i < report.losses.size(); ++i) {
          if (!report.losses[i].bounded && config.has_check(CheckKind::kLogLoss)) continue;
          append(check_loss_bounds(report, i));
        }
        break;
      case CheckKind::kLogLoss:
        for (std::size_t i = 0; i < report.losses.size(); ++i) {
          if (!report.losses[i].bounded) checks.push_back(check_logloss_identity(report, i));
        }
        break;
      case CheckKind::kInstant:
        append(check_instant_distances(report));
        for (std::size_t i = 0; i < report.losses.size(); ++i) append(check_instant_bounds(report, i));
        break;
      case CheckKind::kFiniteLoss: {
        bool any = false;
        for (std::size_t i = 0; i < config.losses.size(); ++i) {
          if (!config.losses[i].bounded() || !config.losses[i].has_zero_loss_actions()) continue;
          append(check_finite_loss_surrogate(report, i));
          any = true;
        }
        if (!any) throw ConfigError("/checks: 'finite-loss' needs a bounded loss with a zero-loss action per outcome");
        break;
      }
      case CheckKind::kRatioTrace: {
        result.trace = run_ratio_trace(config, mixture);
        const RatioTraceResult& tr = *result.trace;
        const std::string where = "t in [" + std::to_string(tr.fit_first) + ", " + std::to_string(tr.fit_last) + "]";
        const std::string what = tr.probe ? "xi(" + std::to_string(*tr.probe) + "|x_<t)/mu(" +
                                                std::to_string(*tr.probe) + "|x_<t)"
                                          : "xi(x_t|x_<t)/mu(x_t|x_<t)";
        checks.push_back(interval_check("ratio-trace-slope-min", "log-log slope of " + what + " >= slope_min",
                                        config.ratio_trace->slope_min, tr.slope, where, {}));
        checks.push_back(interval_check("ratio-trace-slope-max", "log-log slope of " + what + " <= slope_max",
                                        tr.slope, config.ratio_trace->slope_max, where, {}));
        break;
      }
      case CheckKind::kProofInequalities:
        append(run_proof_grid(config.proof_grid, workers));
        break;
    }
  }
  return result;
}

std::vector<std::string> csv_columns(const TotalsReport& report) {
  std::vector<std::string> names{"t"};
  const auto cols = columns_of(report);
  for (const Column& c : cols) names.push_back(c.name);
  if (report.statistical()) {
    for (const Column& c : cols) names.push_back(c.name + "_se");
  }
  return names;
}

void write_series_csv(std::ostream& out, const TotalsReport& report) {
  const auto cols = columns_of(report);
  const auto names = csv_columns(report);
  for (std::size_t i = 0; i < names.size(); ++i) out << (i ? "," : "") << names[i];
  out << '\n';
  const bool se = report.statistical();
  for (std::size_t t = 1; t <= report.horizon; ++t) {
    out << t;
    for (const Column& c : cols) out << ',' << format_double(value_at(c, t));
    if (se) {
      for (const Column& c : cols) out << ',' << format_double(se_at(c, t));
    }
    out << '\n';
  }
  out << "summary";
  for (const Column& c : cols) out << ',' << format_double(c.series->total());
  if (se) {
    for (const Column& c : cols) out << ',' << format_double(c.series->total_se());
  }
  out << '\n';
}

void write_trace_csv(std::ostream& out, const RatioTraceResult& trace) {
  out << "t,x_t,ratio\n";
  for (std::size_t t = 1; t <= trace.ratios.size(); ++t) {
    out << t << ',' << trace.path[t - 1] << ',' << format_double(trace.ratios[t - 1]) << '\n';
  }
}

std::string format_check_line(const BoundCheckResult& c) {
  std::string line = c.pass ? "PASS " : "FAIL ";
  line += c.id + " lhs=" + format_double(c.lhs) + " rhs=" + format_double(c.rhs) + " slack=" + format_double(c.slack);
  if (c.tolerance != 0.0) line += " tol=" + format_double(c.tolerance);
  if (!c.location.empty()) line += " at " + c.location;
  if (c.statistical) line += " (statistical)";
  if (!c.note.empty()) line += " [" + c.note + "]";
  return line;
}

void write_text_report(std::ostream& out, const ExperimentResult& result) {
  const TotalsReport& r = result.report;
  out << "# experiment: " << (result.name.empty() ? "(unnamed)" : result.name) << '\n';
  out << "# engine: " << engine_name(r.engine) << " horizon=" << r.horizon;
  if (r.statistical()) out << " samples=" << r.samples << " seed=" << r.seed;
  else out << " node_visits=" << r.node_visits;
  out << '\n';
  out << "# ln(1/w_mu)=" << format_double(r.log_inverse_weight) << " D_n=" << format_double(r.kl.total())
      << " E[ln mu/xi]=" << format_double(r.kl_direct) << '\n';
  for (const LossTotals& l : r.losses) {
    out << "# loss " << l.name << ": L_xi=" << format_double(l.xi.total()) << " L_mu=" << format_double(l.mu.total())
        << '\n';
  }
  if (result.trace) {
    out << "# ratio trace: slope=" << format_double(result.trace->slope) << " over t in [" << result.trace->fit_first
        << ", " << result.trace->fit_last << "]\n";
  }
  std::size_t passed = 0;
  for (const BoundCheckResult& c : result.checks) {
    out << format_check_line(c) << '\n';
    passed += c.pass ? 1 : 0;
  }
  out << "# result: " << (result.pass() ? "PASS" : "FAIL") << " (" << passed << "/" << result.checks.size()
      << " checks)\n";
}

void write_json_report(std::ostream& out, const ExperimentResult& result) {
  using ojson = nlohmann::ordered_json;
  const auto number = [](double v) -> ojson {
    if (std::isfinite(v)) return v;
    return format_double(v);
  };
  const TotalsReport& r = result.report;
  ojson j;
  j["name"] = result.name;
  j["engine"] = engine_name(r.engine);
  j["horizon"] = r.horizon;
  if (r.statistical()) {
    j["samples"] = r.samples;
    j["seed"] = r.seed;
  } else {
    j["node_visits"] = r.node_visits;
  }
  j["log_inverse_weight"] = number(r.log_inverse_weight);
  ojson totals;
  totals["A_n"] = number(r.absolute.total());
  totals["S_n"] = number(r.square.total());
  totals["H_n"] = number(r.hellinger.total());
  totals["D_n"] = number(r.kl.total());
  totals["B_n"] = number(r.abs_log.total());
  totals["R_n"] = number(r.ratio.total());
  totals["D_direct"] = number(r.kl_direct);
  j["totals"] = totals;
  ojson losses = ojson::array();
  for (const LossTotals& l : r.losses) {
    ojson lj;
    lj["name"] = l.name;
    lj["bounded"] = l.bounded;
    lj["L_xi"] = number(l.xi.total());
    lj["L_mu"] = number(l.mu.total());
    lj["gap"] = number(l.gap.total());
    lj["gap_squared"] = number(l.gap_squared.total());
    losses.push_back(lj);
  }
  j["losses"] = losses;
  if (result.trace) j["ratio_trace_slope"] = number(result.trace->slope);
  ojson checks = ojson::array();
  for (const BoundCheckResult& c : result.checks) {
    ojson cj;
    cj["id"] = c.id;
    cj["description"] = c.description;
    cj["lhs"] = number(c.lhs);
    cj["rhs"] = number(c.rhs);
    cj["slack"] = number(c.slack);
    cj["tolerance"] = number(c.tolerance);
    cj["pass"] = c.pass;
    cj["location"] = c.location;
    cj["statistical"] = c.statistical;
    if (!c.note.empty()) cj["note"] = c.note;
    checks.push_back(cj);
  }
  j["checks"] = checks;
  j["pass"] = result.pass();
  out << j.dump(2) << '\n';
}

std::string describe_columns() {
  return R"(t                 time index 1..n; the final row has t=summary and holds totals at n
E_at              E[a_t], a_t = sum_x |mu(x|x_<t) - xi(x|x_<t)|
E_st              E[s_t], s_t = sum_x (mu(x|x_<t) - xi(x|x_<t))^2
E_ht              E[h_t], h_t = sum_x (sqrt(mu(x|x_<t)) - sqrt(xi(x|x_<t)))^2
E_dt              E[d_t], d_t = sum_x mu(x|x_<t) ln(mu(x|x_<t)/xi(x|x_<t))
E_bt              E[b_t], b_t = sum_x mu(x|x_<t) |ln(mu(x|x_<t)/xi(x|x_<t))|
D_cum             D_t = sum_{s<=t} E[d_s]
A_cum             A_t = sum_{s<=t} E[a_s]
S_cum             S_t = sum_{s<=t} E[s_s]
H_cum             H_t = sum_{s<=t} E[h_s]
B_cum             B_t = sum_{s<=t} E[b_s]
L_xi_cum_<loss>   cumulative expected loss of the mixture-based Bayes action
L_mu_cum_<loss>   cumulative expected loss of the informed (true measure) Bayes action
gap_<loss>        L_xi_cum_<loss> - L_mu_cum_<loss>
E_rt              E[sum_{x: mu(x|x_<t)>0} (sqrt(xi(x|x_<t)) - sqrt(mu(x|x_<t)))^2]
R_cum             sum_{s<=t} E_rt
E_lxi_<loss>      per-step expected loss of the mixture-based action
E_lmu_<loss>      per-step expected loss of the informed action
gap2_cum_<loss>   sum_{s<=t} E[(l_s^xi - l_s^mu)^2]
L_cum_<loss>_<s>  cumulative expected loss of comparison strategy s
<column>_se       Monte Carlo only: standard error of <column>
Values are printed with 17 significant digits; inf and nan are spelled out.
)";
}

}  // namespace bayespred
