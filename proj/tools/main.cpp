#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "bayespred/bounds.hpp"
#include "bayespred/config.hpp"
#include "bayespred/errors.hpp"
#include "bayespred/experiment.hpp"

namespace fs = std::filesystem;
using namespace bayespred;

namespace {

unsigned default_workers() {
  if (const char* env = std::getenv("BAYESPRED_WORKERS")) {
    try {
      const long v = std::stol(env);
      if (v >= 1 && v <= 1024) return static_cast<unsigned>(v);
    } catch (const std::exception&) {
    }
    std::cerr << "warning: ignoring BAYESPRED_WORKERS='" << env << "'\n";
  }
  return 0;
}

// Config paths are used as given; --out-dir keeps only the file name.
std::string resolve(const std::string& configured, const std::string& fallback, const std::string& out_dir) {
  const std::string name = configured.empty() ? fallback : configured;
  if (out_dir.empty()) return name;
  return (fs::path(out_dir) / fs::path(name).filename()).string();
}

template <typename Writer>
void write_file(const std::string& path, Writer&& writer) {
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw ResourceError("cannot write " + path);
  writer(out);
  if (!out) throw ResourceError("write failed for " + path);
}

int run_command(const std::string& config_path, const std::string& out_dir, unsigned workers) {
  try {
    ExperimentConfig config = load_config(config_path);
    const std::string stem = config.name.empty() ? fs::path(config_path).stem().string() : config.name;
    const ExperimentResult result = run_experiment(config, workers);
    write_file(resolve(config.output.csv, stem + ".csv", out_dir),
               [&](std::ostream& o) { write_series_csv(o, result.report); });
    write_file(resolve(config.output.report, stem + ".report.txt", out_dir),
               [&](std::ostream& o) { write_text_report(o, result); });
    write_file(resolve(config.output.json, stem + ".report.json", out_dir),
               [&](std::ostream& o) { write_json_report(o, result); });
    if (result.trace) {
      write_file(resolve(config.output.trace_csv, stem + ".trace.csv", out_dir),
                 [&](std::ostream& o) { write_trace_csv(o, *result.trace); });
    }
    write_text_report(std::cout, result);
    return result.exit_code();
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
  } catch (const ResourceError& e) {
    std::cerr << "resource error: " << e.what() << '\n';
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
  }
  return kExitError;
}

struct InequalityOptions {
  std::string rule = "both";
  double b_value = 0.0;
  std::optional<double> a_value;
  std::size_t grid = 201;
  std::size_t a_count = 41;
  double a_min = 0.1;
  double a_max = 10.0;
  double margin = 1e-4;
};

int check_inequalities(const InequalityOptions& o, unsigned workers) {
  std::vector<BRule> rules;
  if (o.rule == "both") rules = {BRule::kReciprocalPlusOne, BRule::kQuarterPlusReciprocal};
  else if (o.rule == "reciprocal-plus-one") rules = {BRule::kReciprocalPlusOne};
  else if (o.rule == "quarter-plus-reciprocal") rules = {BRule::kQuarterPlusReciprocal};
  else if (o.rule == "fixed") rules = {BRule::kFixed};
  try {
    bool pass = true;
    for (BRule rule : rules) {
      GridSpec spec;
      spec.rule = rule;
      spec.fixed_b = o.b_value;
      spec.a_values = o.a_value ? std::vector<double>{*o.a_value} : log_spaced(o.a_min, o.a_max, o.a_count);
      spec.yz_points = o.grid;
      spec.margin = o.margin;
      spec.workers = std::max(1u, workers);
      const GridVerification v = grid_verify_proof_inequalities(spec);
      std::cout << format_check_line(v.f1) << '\n' << format_check_line(v.f2) << '\n';
      pass = pass && v.pass();
    }
    std::cout << "# result: " << (pass ? "PASS" : "FAIL") << '\n';
    return pass ? kExitPass : kExitFail;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayes mixture prediction bound checker"};
  app.require_subcommand(1);
  unsigned workers = default_workers();
  app.add_option("--workers", workers, "worker threads (default: $BAYESPRED_WORKERS or the config value)")
      ->check(CLI::Range(1u, 1024u));

  std::string config_path;
  std::string out_dir;
  auto* run = app.add_subcommand("run", "run an experiment config and certify its bounds");
  run->add_option("config", config_path, "experiment JSON file")->required();
  run->add_option("--out-dir", out_dir, "directory for CSV and report files");

  InequalityOptions ineq;
  auto* check = app.add_subcommand("check-inequalities", "grid-check the binary loss-bound proof functions");
  check->add_option("--b-rule", ineq.rule, "B as a function of A")
      ->check(CLI::IsMember({"both", "reciprocal-plus-one", "quarter-plus-reciprocal", "fixed"}));
  auto* b_opt = check->add_option("--b-value", ineq.b_value, "B for --b-rule fixed")->check(CLI::PositiveNumber);
  check->add_option("--a-value", ineq.a_value, "single A instead of the log-spaced range");
  check->add_option("--grid", ineq.grid, "points per axis of the (y, z) grid")->check(CLI::Range(3, 100001));
  check->add_option("--a-count", ineq.a_count, "number of log-spaced A values")->check(CLI::Range(1, 100001));
  check->add_option("--a-min", ineq.a_min, "smallest A")->check(CLI::PositiveNumber);
  check->add_option("--a-max", ineq.a_max, "largest A")->check(CLI::PositiveNumber);
  check->add_option("--margin", ineq.margin, "keep y, z in [margin, 1 - margin]")->check(CLI::Range(1e-15, 0.49));

  auto* describe = app.add_subcommand("describe-columns", "document the series CSV columns");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitError;
  }

  if (*run) return run_command(config_path, out_dir, workers);
  if (*check) {
    if (ineq.rule == "fixed" && b_opt->count() == 0) {
      std::cerr << "error: --b-rule fixed needs --b-value\n";
      return kExitError;
    }
    if (ineq.a_min > ineq.a_max) {
      std::cerr << "error: --a-min exceeds --a-max\n";
      return kExitError;
    }
    return check_inequalities(ineq, workers);
  }
  if (*describe) {
    std::cout << describe_columns();
    return kExitPass;
  }
  return kExitError;
}
