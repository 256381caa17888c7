#include <doctest.h>

#include <algorithm>
#include <limits>
#include <sstream>
#include <string>

#include "bayespred/config.hpp"
#include "bayespred/errors.hpp"
#include "bayespred/experiment.hpp"

using namespace bayespred;

namespace {

std::string preset(const std::string& name) { return std::string(BAYESPRED_PRESET_DIR) + "/" + name; }

std::string csv_of(const ExperimentResult& r) {
  std::ostringstream os;
  write_series_csv(os, r.report);
  return os.str();
}

std::string report_of(const ExperimentResult& r) {
  std::ostringstream os;
  write_text_report(os, r);
  return os.str();
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream is(text);
  for (std::string line; std::getline(is, line);) out.push_back(line);
  return out;
}

}  // namespace

TEST_CASE("collapse preset passes and shows tightness") {
  const auto r = run_experiment(load_config(preset("collapse.json")));
  CHECK(r.exit_code() == kExitPass);
  const auto text = report_of(r);
  CHECK(text.find("PASS entropy-bound lhs=0.69314718055994529 rhs=0.69314718055994529 slack=0") !=
        std::string::npos);
}

TEST_CASE("three-Bernoulli preset: n rows plus a summary") {
  const auto config = load_config(preset("three-bernoulli.json"));
  const auto r = run_experiment(config);
  CHECK(r.exit_code() == kExitPass);
  const auto rows = lines(csv_of(r));
  REQUIRE(rows.size() == config.horizon + 2);
  CHECK(rows.front().rfind("t,E_at,E_st,E_ht,E_dt,E_bt,D_cum,A_cum,S_cum,H_cum,B_cum,L_xi_cum_error,L_mu_cum_error,gap_error",
                           0) == 0);
  CHECK(rows.back().rfind("summary,", 0) == 0);
  const std::size_t columns = csv_columns(r.report).size();
  for (const auto& row : rows) CHECK(static_cast<std::size_t>(std::count(row.begin(), row.end(), ',')) == columns - 1);
}

TEST_CASE("identical config gives identical bytes, regardless of workers") {
  const auto config = load_config(preset("ternary-markov.json"));
  const auto a = run_experiment(config, 1);
  const auto b = run_experiment(config, 4);
  CHECK(csv_of(a) == csv_of(b));
  CHECK(report_of(a) == report_of(b));
  std::ostringstream ja, jb;
  write_json_report(ja, a);
  write_json_report(jb, b);
  CHECK(ja.str() == jb.str());

  auto mc = config;
  mc.engine = EngineKind::kMonteCarlo;
  mc.samples = 500;
  mc.seed = 3;
  mc.checks = {CheckKind::kConvergence};
  CHECK(csv_of(run_experiment(mc, 1)) == csv_of(run_experiment(mc, 3)));
}

TEST_CASE("every csv column is documented") {
  const auto doc = describe_columns();
  for (const char* name : {"three-bernoulli.json", "counterexample.json"}) {
    const auto r = run_experiment(load_config(preset(name)));
    for (const auto& col : csv_columns(r.report)) {
      CAPTURE(col);
      std::string pattern = col;
      bool se = false;
      if (pattern.size() > 3 && pattern.compare(pattern.size() - 3, 3, "_se") == 0) {
        pattern.resize(pattern.size() - 3);
        se = true;
      }
      for (const auto& loss : r.report.losses) {
        for (const auto& s : loss.strategy_names) {
          const std::string tail = "_" + loss.name + "_" + s;
          if (pattern.size() > tail.size() && pattern.compare(pattern.size() - tail.size(), tail.size(), tail) == 0) {
            pattern = pattern.substr(0, pattern.size() - tail.size()) + "_<loss>_<s>";
          }
        }
        const std::string tail = "_" + loss.name;
        if (pattern.find('<') == std::string::npos && pattern.size() > tail.size() &&
            pattern.compare(pattern.size() - tail.size(), tail.size(), tail) == 0) {
          pattern = pattern.substr(0, pattern.size() - tail.size()) + "_<loss>";
        }
      }
      CHECK(doc.find(pattern + " ") != std::string::npos);
      if (se) CHECK(doc.find("<column>_se") != std::string::npos);
    }
  }
}

TEST_CASE("counterexample ratio trace") {
  const auto r = run_experiment(load_config(preset("counterexample.json")));
  CHECK(r.exit_code() == kExitPass);
  REQUIRE(r.trace.has_value());
  CHECK(r.trace->slope >= 0.95);
  CHECK(r.trace->slope <= 1.05);
  std::ostringstream os;
  write_trace_csv(os, *r.trace);
  CHECK(lines(os.str()).size() == 1001);
}

TEST_CASE("failing checks give exit code 2") {
  auto config = load_config(preset("three-bernoulli.json"));
  config.checks = {CheckKind::kFiniteLoss};
  const auto r = run_experiment(config);
  CHECK(r.exit_code() == kExitFail);
  CHECK(report_of(r).find("FAIL finite-plateau") != std::string::npos);
}

TEST_CASE("budget overrun surfaces as a resource error") {
  auto config = load_config(preset("three-bernoulli.json"));
  config.work_budget = 1000;
  CHECK_THROWS_AS(run_experiment(config), ResourceError);
}

TEST_CASE("proof grid from config") {
  ProofGridConfig grid;
  grid.a_count = 5;
  grid.yz_points = 21;
  const auto checks = run_proof_grid(grid);
  CHECK(checks.size() == 4);
  CHECK(all_pass(checks));
}

TEST_CASE("number formatting") {
  CHECK(format_double(0.1) == "0.10000000000000001");
  CHECK(format_double(-0.0) == "0");
  CHECK(format_double(std::numeric_limits<double>::infinity()) == "inf");
  CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
}
