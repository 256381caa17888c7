// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "bayespred/bounds.hpp"
#include "bayespred/config.hpp"
#include "bayespred/engine.hpp"
#include "bayespred/experiment.hpp"
#include "bayespred/losses.hpp"
#include "bayespred/metrics.hpp"
#include "generators.hpp"

using namespace bayespred;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string preset_path(const std::string& name) { return std::string(BAYESPRED_PRESET_DIR) + "/" + name + ".json"; }

unsigned hardware_workers() { return std::max(1u, std::min(8u, std::thread::hardware_concurrency())); }

// Accumulates failures for one criterion.
class Criterion {
 public:
  Criterion(int number, std::string title) : number_(number), title_(std::move(title)) {}

  void require(bool ok, const std::string& what) {
    ++checked_;
    if (!ok && failures_.size() < 8) failures_.push_back(what);
    if (!ok) ++failed_;
  }
  void info(const std::string& text) { info_.push_back(text); }

  bool report() const {
    const bool ok = failed_ == 0 && checked_ > 0;
    std::printf("%s %d: %s (%zu checks", ok ? "PASS" : "FAIL", number_, title_.c_str(), checked_);
    for (const auto& s : info_) std::printf("; %s", s.c_str());
    std::printf(")\n");
    for (const auto& f : failures_) std::printf("    failed: %s\n", f.c_str());
    if (failed_ > failures_.size()) std::printf("    ... %zu more\n", failed_ - failures_.size());
    std::fflush(stdout);
    return ok;
  }

 private:
  int number_;
  std::string title_;
  std::size_t checked_ = 0;
  std::size_t failed_ = 0;
  std::vector<std::string> failures_;
  std::vector<std::string> info_;
};

std::string describe(const BoundCheckResult& c) { return format_check_line(c); }

void require_checks(Criterion& crit, const std::string& preset, const std::vector<BoundCheckResult>& checks) {
  for (const auto& c : checks) crit.require(c.pass, preset + ": " + describe(c));
}

const BoundCheckResult& find_check(const std::vector<BoundCheckResult>& checks, const std::string& id) {
  for (const auto& c : checks) {
    if (c.id == id) return c;
  }
  throw std::runtime_error("missing check " + id);
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// Every shipped preset evaluated with the exact engine.
const std::vector<std::string> kExactPresets{"collapse",       "three-bernoulli", "binary-markov",
                                             "ternary-markov", "quaternary-iid",  "deterministic-periodic"};

// Exact evaluation of a preset's mixture with the given losses.
TotalsReport evaluate_preset(const ExperimentConfig& cfg, const MixtureModel& mix, std::vector<LossSpec> losses,
                             bool records) {
  EvaluationProblem p;
  p.mixture = &mix;
  p.true_index = cfg.true_component_index;
  p.horizon = cfg.horizon;
  p.losses = std::move(losses);
  EvaluationOptions o;
  o.keep_records = records;
  o.workers = hardware_workers();
  o.work_budget = cfg.work_budget;
  return exact_evaluate(p, o);
}

// error, absolute, quadratic, Hellinger; only error is defined beyond binary.
std::vector<LossSpec> bounded_losses(std::size_t alphabet) {
  if (alphabet != 2) return {LossSpec::error(alphabet)};
  return {LossSpec::error(), LossSpec::absolute(), LossSpec::quadratic(), LossSpec::hellinger()};
}

bool criterion_1() {
  Criterion crit(1, "entropy bound and telescoping identity, three-Bernoulli preset");
  const auto start = Clock::now();
  const auto cfg = load_config(preset_path("three-bernoulli"));
  const auto mix = cfg.mixture();
  const auto r = evaluate_preset(cfg, mix, {}, false);
  const double elapsed = seconds_since(start);
  crit.require(cfg.horizon == 12 && mix.size() == 3, "preset is n = 12 over three components");
  crit.require(std::abs(mix.log_inverse_weight(cfg.true_component_index) - std::log(3.0)) <= 1e-15,
               "ln(1/w_mu) = ln 3");
  const double slack = std::log(3.0) - r.kl.total();
  crit.require(slack > 0.0, "D_n < ln 3, slack " + fmt(slack));
  const double telescoping = std::abs(r.kl.total() - r.kl_direct);
  crit.require(telescoping <= 1e-9, "sum E[d_t] = E[ln mu/xi], diff " + fmt(telescoping));
  crit.require(elapsed < 1.0, "runtime " + fmt(elapsed) + " s < 1 s");
  crit.info("D_n=" + fmt(r.kl.total()) + " slack=" + fmt(slack) + " |telescoping|=" + fmt(telescoping) +
            " runtime=" + fmt(elapsed) + "s");
  return crit.report();
}

bool criterion_2() {
  Criterion crit(2, "tightness witness, collapse preset");
  const auto cfg = load_config(preset_path("collapse"));
  const auto mix = cfg.mixture();
  const auto r = evaluate_preset(cfg, mix, {}, false);
  double worst = 0.0;
  for (std::size_t t = 0; t < cfg.horizon; ++t) {
    const double diff = std::abs(r.kl.cumulative[t] - std::log(2.0));
    worst = std::max(worst, diff);
    crit.require(diff <= 1e-12, "D_" + std::to_string(t + 1) + " = ln 2, diff " + fmt(diff));
  }
  crit.require(std::abs(mix.log_inverse_weight(cfg.true_component_index) - std::log(2.0)) <= 1e-15,
               "ln(1/w_mu) = ln 2");
  crit.info("n=1.." + std::to_string(cfg.horizon) + " max |D_n - ln 2|=" + fmt(worst));
  return crit.report();
}

bool criterion_3() {
  Criterion crit(3, "distance chains S<=D, ratio<=H<=D, B-D<=A<=sqrt(2nD) on every exact preset");
  const std::vector<std::string> ids{"conv-i-square", "conv-iv-ratio", "conv-iv-hellinger", "conv-vi-lower",
                                     "conv-vi-upper"};
  double worst = INFINITY;
  for (const auto& name : kExactPresets) {
    const auto cfg = load_config(preset_path(name));
    const auto mix = cfg.mixture();
    const auto r = evaluate_preset(cfg, mix, {}, false);
    ConvergenceCheckOptions opts;
    opts.tolerance = 1e-9;
    const auto checks = check_convergence_bounds(r, opts);
    for (const auto& id : ids) {
      const auto& c = find_check(checks, id);
      crit.require(c.pass, name + ": " + describe(c));
      worst = std::min(worst, c.slack);
    }
  }
  crit.info("min slack " + fmt(worst));
  return crit.report();
}

bool criterion_4() {
  Criterion crit(4, "loss bounds and the sqrt(2 n D_n) gap bound for error/absolute/quadratic/Hellinger on every exact preset");
  double worst = INFINITY;
  std::size_t count = 0;
  for (const auto& name : kExactPresets) {
    const auto cfg = load_config(preset_path(name));
    const auto mix = cfg.mixture();
    const auto losses = bounded_losses(cfg.alphabet_size);
    const auto r = evaluate_preset(cfg, mix, losses, false);
    for (std::size_t k = 0; k < losses.size(); ++k) {
      const auto checks = check_loss_bounds(r, k, 1e-9);
      for (const char* id : {"loss-nonneg", "loss-sqrt", "loss-chain", "gap-sqrt-2nd"}) {
        const auto& c = find_check(checks, std::string(id) + "[" + losses[k].name() + "]");
        crit.require(c.pass, name + ": " + describe(c));
        worst = std::min(worst, c.slack);
        ++count;
      }
      require_checks(crit, name, checks);
    }
  }
  crit.info(std::to_string(count) + " headline bounds, min slack " + fmt(worst));
  return crit.report();
}

bool criterion_5() {
  Criterion crit(5, "log-loss identity |(L_xi - L_mu) - D_n| <= 1e-9 on every exact preset");
  double worst = 0.0;
  for (const auto& name : kExactPresets) {
    const auto cfg = load_config(preset_path(name));
    const auto mix = cfg.mixture();
    if (cfg.alphabet_size == 2) {
      const auto r = evaluate_preset(cfg, mix, {LossSpec::log_loss()}, false);
      const auto c = check_logloss_identity(r, 0, 1e-9);
      crit.require(c.pass, name + ": " + describe(c));
      worst = std::max(worst, std::abs(r.losses[0].gap.total() - r.kl.total()));
    } else {
      // Over N symbols the log-loss prediction is a full distribution, so
      // L_xi - L_mu = E[ln mu(x_1:n) - ln xi(x_1:n)], the path-marginal value.
      const auto r = evaluate_preset(cfg, mix, {}, false);
      const double diff = std::abs(r.kl_direct - r.kl.total());
      crit.require(diff <= 1e-9, name + ": N-ary log-loss gap vs D_n, diff " + fmt(diff));
      worst = std::max(worst, diff);
    }
  }
  crit.info("max deviation " + fmt(worst));
  return crit.report();
}

bool criterion_6() {
  Criterion crit(6, "per-history instantaneous chains on every binary preset, aggregate squared gap <= 2 D_n");
  std::size_t histories = 0;
  for (const auto& name : kExactPresets) {
    const auto cfg = load_config(preset_path(name));
    if (cfg.alphabet_size != 2) continue;
    const auto mix = cfg.mixture();
    const auto losses = bounded_losses(2);
    const auto r = evaluate_preset(cfg, mix, losses, true);
    histories += r.records.size();
    if (name == "three-bernoulli") {
      // fully supported: every history of length < 12
      crit.require(r.records.size() == (std::size_t{1} << cfg.horizon) - 1,
                   name + ": " + std::to_string(r.records.size()) + " histories, expected 4095");
    }
    require_checks(crit, name, check_instant_distances(r, 1e-9));
    for (std::size_t k = 0; k < losses.size(); ++k) {
      const auto checks = check_instant_bounds(r, k, 1e-9);
      require_checks(crit, name, checks);
      crit.require(find_check(checks, "instant-squared[" + losses[k].name() + "]").pass,
                   name + ": aggregate squared gap");
    }
  }
  crit.info(std::to_string(histories) + " histories checked");
  return crit.report();
}

bool criterion_7() {
  Criterion crit(7, "bounded total loss surrogate, deterministic-periodic preset");
  const auto cfg = load_config(preset_path("deterministic-periodic"));
  const auto mix = cfg.mixture();
  std::vector<LossSpec> losses;
  for (const auto& l : cfg.losses) {
    if (l.bounded() && l.has_zero_loss_actions()) losses.push_back(l);
  }
  crit.require(!losses.empty(), "preset has a loss with a zero-loss action per outcome");
  const double bound = 2.0 * mix.log_inverse_weight(cfg.true_component_index);
  double worst_plateau = 0.0;
  for (std::size_t horizon : {cfg.horizon, std::size_t{1024}}) {
    auto c = cfg;
    c.horizon = horizon;
    const auto r = evaluate_preset(c, mix, losses, false);
    for (std::size_t k = 0; k < losses.size(); ++k) {
      require_checks(crit, cfg.name + " n=" + std::to_string(horizon), check_finite_loss_surrogate(r, k, 1e-9));
      const auto& xi = r.losses[k].xi.cumulative;
      for (std::size_t t = 0; t < horizon; ++t) {
        crit.require(xi[t] <= bound + 1e-9, losses[k].name() + ": L_" + std::to_string(t + 1) + " = " +
                                                fmt(xi[t]) + " > 2 ln(1/w_mu)");
      }
      const std::size_t quarter = (horizon + 3) / 4;
      const double plateau = xi.back() - xi[horizon - 1 - quarter];
      worst_plateau = std::max(worst_plateau, plateau);
      crit.require(plateau < 1e-12, losses[k].name() + ": plateau increment " + fmt(plateau));
    }
  }
  crit.info("2 ln(1/w_mu)=" + fmt(bound) + " max final-quarter increment " + fmt(worst_plateau));
  return crit.report();
}

bool criterion_8() {
  Criterion crit(8, "ratio trace on 0^n grows with log-log slope in [0.95, 1.05] over t in [100, 1000]");
  const auto start = Clock::now();
  const auto cfg = load_config(preset_path("counterexample"));
  crit.require(cfg.ratio_trace.has_value(), "preset configures a ratio trace");
  if (!cfg.ratio_trace) return crit.report();
  const auto& rt = *cfg.ratio_trace;
  const auto mix = cfg.mixture();
  const Sequence path = rt.path(cfg.horizon);
  crit.require(std::all_of(path.begin(), path.end(), [](Symbol s) { return s == 0; }), "path is 0^n");
  const auto ratios = ratio_trace(mix, cfg.true_component_index, path, rt.probe);
  const double slope = fit_loglog_slope(ratios, 100, 1000);
  const double elapsed = seconds_since(start);
  crit.require(slope >= 0.95 && slope <= 1.05, "slope " + fmt(slope));
  crit.require(ratios[999] > ratios[99], "ratio grows");
  crit.require(elapsed < 1.0, "runtime " + fmt(elapsed) + " s < 1 s");
  crit.info("slope=" + fmt(slope) + " ratio(1000)=" + fmt(ratios[999]) + " runtime=" + fmt(elapsed) + "s");
  return crit.report();
}

bool criterion_9() {
  Criterion crit(9, "proof inequalities on the 41 x 201 x 201 grid; sub-threshold B fails");
  const auto start = Clock::now();
  GridSpec spec;
  spec.a_values = log_spaced(0.1, 10.0, 41);
  spec.yz_points = 201;
  spec.tolerance = 1e-12;
  spec.workers = 1;
  for (BRule rule : {BRule::kReciprocalPlusOne, BRule::kQuarterPlusReciprocal}) {
    spec.rule = rule;
    const auto v = grid_verify_proof_inequalities(spec);
    crit.require(v.f1.pass, to_string(rule) + ": " + describe(v.f1));
    crit.require(v.f2.pass, to_string(rule) + ": " + describe(v.f2));
    crit.info(to_string(rule) + " min f1=" + fmt(v.f1.slack) + " f2=" + fmt(v.f2.slack));
  }
  spec.rule = BRule::kFixed;
  spec.fixed_b = 0.01;
  const auto bad = grid_verify_proof_inequalities(spec);
  crit.require(!bad.pass(), "B=0.01 must fail");
  const auto& located = bad.f1.pass ? bad.f2 : bad.f1;
  crit.require(located.slack < 0.0 && !located.location.empty(), "negative minimum is located");
  const double elapsed = seconds_since(start);
  crit.require(elapsed < 30.0, "runtime " + fmt(elapsed) + " s < 30 s");
  crit.info("B=0.01 " + located.id + " min=" + fmt(located.slack) + " at " + located.location);
  crit.info("runtime=" + fmt(elapsed) + "s");
  return crit.report();
}

bool criterion_10() {
  Criterion crit(10, "Monte Carlo (1e5 samples) within 3 SE of exact on >= 95% of series points, three-Bernoulli");
  const auto cfg = load_config(preset_path("three-bernoulli"));
  const auto mix = cfg.mixture();
  EvaluationProblem p;
  p.mixture = &mix;
  p.true_index = cfg.true_component_index;
  p.horizon = cfg.horizon;
  p.losses = cfg.losses;
  p.strategies = cfg.strategies;
  EvaluationOptions o;
  o.workers = hardware_workers();
  const auto exact = exact_evaluate(p, o);
  const auto mc = monte_carlo_evaluate(p, 100000, 20240601, hardware_workers());
  std::size_t total = 0;
  std::size_t inside = 0;
  const auto compare = [&](const Series& e, const Series& m) {
    for (std::size_t t = 0; t < e.step.size(); ++t) {
      for (int which = 0; which < 2; ++which) {
        const double ev = which == 0 ? e.step[t] : e.cumulative[t];
        const double mv = which == 0 ? m.step[t] : m.cumulative[t];
        const double se = which == 0 ? m.step_se[t] : m.cumulative_se[t];
        ++total;
        // a point with zero sample variance is deterministic along every path
        if (std::abs(ev - mv) <= 3.0 * se + 1e-12 * std::max(1.0, std::abs(ev))) ++inside;
      }
    }
  };
  compare(exact.absolute, mc.absolute);
  compare(exact.square, mc.square);
  compare(exact.hellinger, mc.hellinger);
  compare(exact.kl, mc.kl);
  compare(exact.abs_log, mc.abs_log);
  compare(exact.ratio, mc.ratio);
  for (std::size_t k = 0; k < exact.losses.size(); ++k) {
    compare(exact.losses[k].xi, mc.losses[k].xi);
    compare(exact.losses[k].mu, mc.losses[k].mu);
    compare(exact.losses[k].gap, mc.losses[k].gap);
    compare(exact.losses[k].gap_squared, mc.losses[k].gap_squared);
    for (std::size_t s = 0; s < exact.losses[k].strategies.size(); ++s) {
      compare(exact.losses[k].strategies[s], mc.losses[k].strategies[s]);
    }
  }
  const double fraction = static_cast<double>(inside) / static_cast<double>(total);
  crit.require(fraction >= 0.95, "fraction within 3 SE " + fmt(fraction));
  crit.info(std::to_string(inside) + "/" + std::to_string(total) + " points = " + fmt(100.0 * fraction) + "%");
  return crit.report();
}

std::string run_bytes(const ExperimentConfig& cfg, unsigned workers) {
  const auto r = run_experiment(cfg, workers);
  std::ostringstream os;
  write_series_csv(os, r.report);
  write_text_report(os, r);
  write_json_report(os, r);
  return os.str();
}

bool criterion_11() {
  Criterion crit(11, "property suite: distance chain, closed-form vs grid actions, determinism");
  gen::Source src(20240611);
  std::size_t chain_fail = 0;
  for (int i = 0; i < 10000; ++i) {
    const std::size_t n = 2 + src.below(5);
    const auto mu = src.simplex(n, src.chance(0.3));
    const auto xi = src.positive_simplex(n);
    const auto d = instant_distances(mu, xi);
    const double tol = 1e-12;
    const bool ok = d.square <= d.kl + tol && d.ratio <= d.hellinger + tol && d.hellinger <= d.kl + tol &&
                    d.abs_log - d.kl <= d.absolute + tol && d.absolute <= std::sqrt(2.0 * d.kl) + tol;
    if (!ok) ++chain_fail;
  }
  crit.require(chain_fail == 0, std::to_string(chain_fail) + " of 10^4 random pairs violate the distance chain");

  const std::vector<LossSpec> losses{LossSpec::quadratic(), LossSpec::hellinger(), LossSpec::log_loss(),
                                     LossSpec::absolute(),  LossSpec::alpha(1.5),  LossSpec::alpha(2.0),
                                     LossSpec::alpha(3.0),  LossSpec::alpha(0.5)};
  double worst_action = 0.0;
  double worst_loss = 0.0;
  // 250 posteriors x 8 losses; each grid search is 1e5 loss evaluations
  for (int i = 0; i < 250; ++i) {
    const double r1 = src.uniform();
    if (std::abs(r1 - 0.5) < 1e-3) continue;  // threshold losses tie at 1/2
    const std::vector<double> post{1.0 - r1, r1};
    for (const auto& loss : losses) {
      const double closed = std::get<double>(bayes_action(loss, post));
      const double grid = std::get<double>(grid_bayes_action(loss, post, 1e-5));
      worst_action = std::max(worst_action, std::abs(closed - grid));
      worst_loss = std::max(worst_loss, expected_loss(loss, post, closed) - expected_loss(loss, post, grid));
    }
  }
  crit.require(worst_action <= 2e-5, "closed-form vs grid action " + fmt(worst_action));
  crit.require(worst_loss <= 1e-9, "closed-form loss excess over grid " + fmt(worst_loss));

  for (const auto& name : {"three-bernoulli", "ternary-markov", "counterexample"}) {
    const auto cfg = load_config(preset_path(name));
    const auto first = run_bytes(cfg, 1);
    crit.require(first == run_bytes(cfg, 1), std::string(name) + ": identical bytes on rerun");
    crit.require(first == run_bytes(cfg, 4), std::string(name) + ": identical bytes with 4 workers");
  }
  crit.info("max action diff " + fmt(worst_action) + ", max loss excess " + fmt(worst_loss));
  return crit.report();
}

}  // namespace

int main() {
  const std::vector<std::function<bool()>> criteria{criterion_1, criterion_2, criterion_3, criterion_4,
                                                    criterion_5, criterion_6, criterion_7, criterion_8,
                                                    criterion_9, criterion_10, criterion_11};
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    try {
      if (!criteria[i]()) ++failed;
    } catch (const std::exception& e) {
      std::printf("FAIL %zu: exception: %s\n", i + 1, e.what());
      ++failed;
    }
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
