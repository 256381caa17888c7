#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bayespred/bounds.hpp"
#include "bayespred/engine.hpp"
#include "bayespred/losses.hpp"
#include "bayespred/measure.hpp"
#include "bayespred/mixture.hpp"

namespace bayespred {

enum class CheckKind { kConvergence, kLoss, kInstant, kLogLoss, kFiniteLoss, kRatioTrace, kProofInequalities };

std::string to_string(CheckKind kind);

struct RatioTraceConfig {
  Sequence prefix;
  Sequence cycle{0};
  std::optional<Symbol> probe;
  std::size_t fit_first = 100;
  std::size_t fit_last = 1000;
  double slope_min = 0.95;
  double slope_max = 1.05;

  Sequence path(std::size_t length) const;
};

struct ProofGridConfig {
  double a_min = 0.1;
  double a_max = 10.0;
  std::size_t a_count = 41;
  std::size_t yz_points = 201;
  double margin = 1e-4;
  std::vector<BRule> rules{BRule::kReciprocalPlusOne, BRule::kQuarterPlusReciprocal};
};

struct OutputPaths {
  std::string csv;
  std::string report;
  std::string json;
  std::string trace_csv;
};

struct ExperimentConfig {
  std::string name;
  std::size_t alphabet_size = 2;
  std::vector<SequenceMeasure> components;
  std::vector<double> weights;
  std::size_t true_component_index = 0;
  std::vector<LossSpec> losses;
  std::vector<Strategy> strategies;
  std::size_t horizon = 1;
  EngineKind engine = EngineKind::kExact;
  std::uint64_t work_budget = kDefaultWorkBudget;
  std::size_t samples = 0;
  std::uint64_t seed = 0;
  unsigned workers = 1;
  std::vector<CheckKind> checks{CheckKind::kConvergence, CheckKind::kLoss};
  double epsilon = 0.1;
  std::optional<RatioTraceConfig> ratio_trace;
  ProofGridConfig proof_grid;
  OutputPaths output;

  MixtureModel mixture() const { return MixtureModel(components, weights); }
  bool has_check(CheckKind kind) const;
};

// Parses and validates a JSON experiment description. Unknown fields are
// rejected. Throws ConfigError with a line number (syntax errors) or the
// JSON path of the offending field.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);

}  // namespace bayespred
