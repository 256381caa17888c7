#include "bayespred/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>

#include <json.hpp>

#include "bayespred/errors.hpp"

namespace bayespred {

namespace {

using json = nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& message) {
  throw ConfigError(path + ": " + message);
}

std::string child(const std::string& path, const std::string& key) { return path + "/" + key; }
std::string child(const std::string& path, std::size_t index) { return path + "/" + std::to_string(index); }

void require_object(const json& j, const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object");
}

// Rejects keys outside `allowed` and reports missing `required` keys.
void check_keys(const json& j, const std::string& path, std::initializer_list<const char*> required,
                std::initializer_list<const char*> optional = {}) {
  require_object(j, path);
  std::set<std::string> allowed;
  for (const char* k : required) allowed.insert(k);
  for (const char* k : optional) allowed.insert(k);
  for (const auto& [key, value] : j.items()) {
    if (!allowed.contains(key)) fail(child(path, key), "unknown field");
  }
  for (const char* k : required) {
    if (!j.contains(k)) fail(child(path, k), "missing required field");
  }
}

double get_number(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) fail(path, "expected a finite number");
  return v;
}

std::uint64_t get_unsigned(const json& j, const std::string& path) {
  if (j.is_number_unsigned()) return j.get<std::uint64_t>();
  if (j.is_number_integer()) {
    if (j.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(j.get<std::int64_t>());
    fail(path, "expected a non-negative integer");
  }
  fail(path, "expected a non-negative integer");
}

std::string get_string(const json& j, const std::string& path) {
  if (!j.is_string()) fail(path, "expected a string");
  return j.get<std::string>();
}

std::vector<double> get_numbers(const json& j, const std::string& path) {
  if (!j.is_array()) fail(path, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(get_number(j[i], child(path, i)));
  return out;
}

std::vector<std::vector<double>> get_matrix(const json& j, const std::string& path) {
  if (!j.is_array()) fail(path, "expected an array of rows");
  std::vector<std::vector<double>> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(get_numbers(j[i], child(path, i)));
  return out;
}

Sequence get_sequence(const json& j, const std::string& path, std::size_t alphabet_size) {
  if (!j.is_array()) fail(path, "expected an array of symbols");
  Sequence out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::uint64_t s = get_unsigned(j[i], child(path, i));
    if (s >= alphabet_size) fail(child(path, i), "symbol outside alphabet of size " + std::to_string(alphabet_size));
    out.push_back(static_cast<Symbol>(s));
  }
  return out;
}

// Runs a library constructor and rewrites its DomainError with the JSON path.
template <typename F>
auto at_path(const std::string& path, F&& build) {
  try {
    return build();
  } catch (const DomainError& e) {
    fail(path, e.what());
  } catch (const DegenerateLoss& e) {
    fail(path, e.what());
  }
}

SequenceMeasure parse_measure(const json& j, const std::string& path, std::size_t alphabet_size) {
  require_object(j, path);
  if (!j.contains("kind")) fail(child(path, "kind"), "missing required field");
  const std::string kind = get_string(j["kind"], child(path, "kind"));
  const auto binary_only = [&] {
    if (alphabet_size != 2) fail(child(path, "kind"), "'" + kind + "' requires alphabet_size 2");
  };
  if (kind == "bernoulli") {
    check_keys(j, path, {"kind", "theta"});
    binary_only();
    const double theta = get_number(j["theta"], child(path, "theta"));
    return at_path(child(path, "theta"), [&] { return SequenceMeasure::bernoulli(theta); });
  }
  if (kind == "categorical") {
    check_keys(j, path, {"kind", "probs"});
    auto probs = get_numbers(j["probs"], child(path, "probs"));
    if (probs.size() != alphabet_size) fail(child(path, "probs"), "length must equal alphabet_size");
    return at_path(child(path, "probs"), [&] { return SequenceMeasure::categorical(probs); });
  }
  if (kind == "markov") {
    check_keys(j, path, {"kind", "order", "transitions"}, {"initial"});
    const std::size_t order = get_unsigned(j["order"], child(path, "order"));
    std::vector<double> initial;
    if (j.contains("initial")) initial = get_numbers(j["initial"], child(path, "initial"));
    else if (order > 0) fail(child(path, "initial"), "required when order > 0");
    auto transitions = get_matrix(j["transitions"], child(path, "transitions"));
    return at_path(path, [&] { return SequenceMeasure::markov(alphabet_size, order, initial, transitions); });
  }
  if (kind == "periodic" || kind == "deterministic") {
    check_keys(j, path, {"kind", "cycle"}, {"prefix"});
    Sequence prefix;
    if (j.contains("prefix")) prefix = get_sequence(j["prefix"], child(path, "prefix"), alphabet_size);
    Sequence cycle = get_sequence(j["cycle"], child(path, "cycle"), alphabet_size);
    return at_path(path, [&] { return SequenceMeasure::periodic(alphabet_size, prefix, cycle); });
  }
  if (kind == "power-law") {
    check_keys(j, path, {"kind", "scale", "exponent"});
    binary_only();
    const double scale = get_number(j["scale"], child(path, "scale"));
    const double exponent = get_number(j["exponent"], child(path, "exponent"));
    return at_path(path, [&] { return SequenceMeasure::power_law_binary(scale, exponent); });
  }
  if (kind == "explicit-table") {
    check_keys(j, path, {"kind", "horizon", "rows", "fallback"});
    const std::size_t horizon = get_unsigned(j["horizon"], child(path, "horizon"));
    const json& rows = j["rows"];
    const std::string rows_path = child(path, "rows");
    if (!rows.is_array()) fail(rows_path, "expected an array");
    std::map<Sequence, std::vector<double>> table;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const std::string row_path = child(rows_path, i);
      check_keys(rows[i], row_path, {"history", "probs"});
      Sequence h = get_sequence(rows[i]["history"], child(row_path, "history"), alphabet_size);
      if (table.contains(h)) fail(child(row_path, "history"), "duplicate history");
      table.emplace(std::move(h), get_numbers(rows[i]["probs"], child(row_path, "probs")));
    }
    auto fallback = get_numbers(j["fallback"], child(path, "fallback"));
    return at_path(path, [&] { return SequenceMeasure::explicit_table(alphabet_size, horizon, table, fallback); });
  }
  fail(child(path, "kind"), "unknown measure kind '" + kind + "'");
}

LossSpec parse_loss(const json& j, const std::string& path, std::size_t alphabet_size) {
  require_object(j, path);
  if (!j.contains("kind")) fail(child(path, "kind"), "missing required field");
  const std::string kind = get_string(j["kind"], child(path, "kind"));
  const auto continuous = [&](std::initializer_list<const char*> required, auto make) {
    check_keys(j, path, required, {"id", "grid_resolution"});
    if (alphabet_size != 2) fail(child(path, "kind"), "'" + kind + "' loss requires alphabet_size 2");
    LossSpec spec = at_path(path, make);
    if (j.contains("grid_resolution")) {
      const double r = get_number(j["grid_resolution"], child(path, "grid_resolution"));
      spec = at_path(child(path, "grid_resolution"), [&] { return spec.with_grid_search(r); });
    }
    return spec;
  };
  LossSpec spec = [&] {
    if (kind == "error") {
      check_keys(j, path, {"kind"}, {"id"});
      return LossSpec::error(alphabet_size);
    }
    if (kind == "matrix") {
      check_keys(j, path, {"kind", "rows"}, {"id"});
      auto rows = get_matrix(j["rows"], child(path, "rows"));
      if (rows.size() != alphabet_size) fail(child(path, "rows"), "need one row per outcome symbol");
      return at_path(child(path, "rows"), [&] { return LossSpec::matrix(rows); });
    }
    if (kind == "absolute") return continuous({"kind"}, [] { return LossSpec::absolute(); });
    if (kind == "quadratic") return continuous({"kind"}, [] { return LossSpec::quadratic(); });
    if (kind == "hellinger") return continuous({"kind"}, [] { return LossSpec::hellinger(); });
    if (kind == "log") return continuous({"kind"}, [] { return LossSpec::log_loss(); });
    if (kind == "alpha") {
      return continuous({"kind", "alpha"}, [&] { return LossSpec::alpha(get_number(j["alpha"], child(path, "alpha"))); });
    }
    fail(child(path, "kind"), "unknown loss kind '" + kind + "'");
  }();
  if (j.contains("id")) {
    const std::string id = get_string(j["id"], child(path, "id"));
    if (id.empty() || id.find_first_of(",\" \n") != std::string::npos) {
      fail(child(path, "id"), "must be non-empty without commas, quotes or spaces");
    }
    spec = spec.with_name(id);
  }
  return spec;
}

Strategy parse_strategy(const json& j, const std::string& path) {
  require_object(j, path);
  if (!j.contains("kind")) fail(child(path, "kind"), "missing required field");
  const std::string kind = get_string(j["kind"], child(path, "kind"));
  if (kind == "constant") {
    check_keys(j, path, {"kind", "action"});
    return Strategy::constant(get_number(j["action"], child(path, "action")));
  }
  if (kind == "majority") {
    check_keys(j, path, {"kind"});
    return Strategy::majority();
  }
  if (kind == "laplace") {
    check_keys(j, path, {"kind"});
    return Strategy::laplace();
  }
  fail(child(path, "kind"), "unknown strategy kind '" + kind + "'");
}

CheckKind parse_check(const json& j, const std::string& path) {
  const std::string s = get_string(j, path);
  for (CheckKind k : {CheckKind::kConvergence, CheckKind::kLoss, CheckKind::kInstant, CheckKind::kLogLoss,
                      CheckKind::kFiniteLoss, CheckKind::kRatioTrace, CheckKind::kProofInequalities}) {
    if (to_string(k) == s) return k;
  }
  fail(path, "unknown check '" + s + "'");
}

BRule parse_rule(const json& j, const std::string& path) {
  const std::string s = get_string(j, path);
  if (s == "reciprocal-plus-one") return BRule::kReciprocalPlusOne;
  if (s == "quarter-plus-reciprocal") return BRule::kQuarterPlusReciprocal;
  fail(path, "unknown B rule '" + s + "'");
}

void parse_engine(const json& j, const std::string& path, ExperimentConfig& config) {
  require_object(j, path);
  if (!j.contains("kind")) fail(child(path, "kind"), "missing required field");
  const std::string kind = get_string(j["kind"], child(path, "kind"));
  if (kind == "exact") {
    check_keys(j, path, {"kind"}, {"work_budget"});
    config.engine = EngineKind::kExact;
    if (j.contains("work_budget")) {
      config.work_budget = get_unsigned(j["work_budget"], child(path, "work_budget"));
      if (config.work_budget == 0) fail(child(path, "work_budget"), "must be positive");
    }
  } else if (kind == "monte-carlo") {
    check_keys(j, path, {"kind", "samples", "seed"});
    config.engine = EngineKind::kMonteCarlo;
    config.samples = get_unsigned(j["samples"], child(path, "samples"));
    if (config.samples < 100) fail(child(path, "samples"), "need at least 100 samples");
    config.seed = get_unsigned(j["seed"], child(path, "seed"));
  } else {
    fail(child(path, "kind"), "unknown engine '" + kind + "'");
  }
}

RatioTraceConfig parse_ratio_trace(const json& j, const std::string& path, std::size_t alphabet_size) {
  check_keys(j, path, {}, {"prefix", "cycle", "probe", "fit_first", "fit_last", "slope_min", "slope_max"});
  RatioTraceConfig rt;
  if (j.contains("prefix")) rt.prefix = get_sequence(j["prefix"], child(path, "prefix"), alphabet_size);
  if (j.contains("cycle")) rt.cycle = get_sequence(j["cycle"], child(path, "cycle"), alphabet_size);
  if (rt.cycle.empty()) fail(child(path, "cycle"), "must be non-empty");
  if (j.contains("probe")) {
    const std::uint64_t p = get_unsigned(j["probe"], child(path, "probe"));
    if (p >= alphabet_size) fail(child(path, "probe"), "symbol outside alphabet");
    rt.probe = static_cast<Symbol>(p);
  }
  if (j.contains("fit_first")) rt.fit_first = get_unsigned(j["fit_first"], child(path, "fit_first"));
  if (j.contains("fit_last")) rt.fit_last = get_unsigned(j["fit_last"], child(path, "fit_last"));
  if (j.contains("slope_min")) rt.slope_min = get_number(j["slope_min"], child(path, "slope_min"));
  if (j.contains("slope_max")) rt.slope_max = get_number(j["slope_max"], child(path, "slope_max"));
  if (rt.fit_first < 1 || rt.fit_last <= rt.fit_first) fail(path, "need 1 <= fit_first < fit_last");
  if (rt.slope_min > rt.slope_max) fail(path, "slope_min exceeds slope_max");
  return rt;
}

ProofGridConfig parse_proof_grid(const json& j, const std::string& path) {
  check_keys(j, path, {}, {"a_min", "a_max", "a_count", "yz_points", "margin", "rules"});
  ProofGridConfig g;
  if (j.contains("a_min")) g.a_min = get_number(j["a_min"], child(path, "a_min"));
  if (j.contains("a_max")) g.a_max = get_number(j["a_max"], child(path, "a_max"));
  if (j.contains("a_count")) g.a_count = get_unsigned(j["a_count"], child(path, "a_count"));
  if (j.contains("yz_points")) g.yz_points = get_unsigned(j["yz_points"], child(path, "yz_points"));
  if (j.contains("margin")) g.margin = get_number(j["margin"], child(path, "margin"));
  if (j.contains("rules")) {
    const json& rules = j["rules"];
    if (!rules.is_array() || rules.empty()) fail(child(path, "rules"), "expected a non-empty array");
    g.rules.clear();
    for (std::size_t i = 0; i < rules.size(); ++i) g.rules.push_back(parse_rule(rules[i], child(child(path, "rules"), i)));
  }
  if (!(g.a_min > 0.0 && g.a_max >= g.a_min)) fail(path, "need 0 < a_min <= a_max");
  if (g.a_count < 1) fail(child(path, "a_count"), "must be positive");
  if (g.yz_points < 3) fail(child(path, "yz_points"), "need at least 3 points");
  if (!(g.margin > 0.0 && g.margin < 0.5)) fail(child(path, "margin"), "must lie in (0, 0.5)");
  return g;
}

std::size_t line_of(const std::string& text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(byte), '\n'));
}

}  // namespace

std::string to_string(CheckKind kind) {
  switch (kind) {
    case CheckKind::kConvergence:
      return "convergence";
    case CheckKind::kLoss:
      return "loss";
    case CheckKind::kInstant:
      return "instant";
    case CheckKind::kLogLoss:
      return "logloss";
    case CheckKind::kFiniteLoss:
      return "finite-loss";
    case CheckKind::kRatioTrace:
      return "ratio-trace";
    case CheckKind::kProofInequalities:
      return "proof-inequalities";
  }
  return "?";
}

Sequence RatioTraceConfig::path(std::size_t length) const {
  Sequence out;
  out.reserve(length);
  for (std::size_t i = 0; i < length; ++i) {
    out.push_back(i < prefix.size() ? prefix[i] : cycle[(i - prefix.size()) % cycle.size()]);
  }
  return out;
}

bool ExperimentConfig::has_check(CheckKind kind) const {
  return std::find(checks.begin(), checks.end(), kind) != checks.end();
}

ExperimentConfig parse_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError("line " + std::to_string(line_of(json_text, e.byte == 0 ? 0 : e.byte - 1)) +
                      ": JSON syntax error: " + e.what());
  }
  check_keys(root, "", {"alphabet_size", "mixture", "horizon"},
             {"name", "losses", "strategies", "engine", "workers", "checks", "epsilon", "ratio_trace", "proof_grid",
              "output", "$schema"});

  ExperimentConfig config;
  if (root.contains("name")) config.name = get_string(root["name"], "/name");
  config.alphabet_size = get_unsigned(root["alphabet_size"], "/alphabet_size");
  if (config.alphabet_size < 2) fail("/alphabet_size", "must be at least 2");
  config.horizon = get_unsigned(root["horizon"], "/horizon");
  if (config.horizon < 1) fail("/horizon", "must be at least 1");

  const json& mix = root["mixture"];
  check_keys(mix, "/mixture", {"components", "true_component_index"});
  const json& comps = mix["components"];
  if (!comps.is_array() || comps.empty()) fail("/mixture/components", "expected a non-empty array");
  double weight_sum = 0.0;
  for (std::size_t i = 0; i < comps.size(); ++i) {
    const std::string cp = child("/mixture/components", i);
    check_keys(comps[i], cp, {"component", "weight"});
    config.components.push_back(parse_measure(comps[i]["component"], child(cp, "component"), config.alphabet_size));
    const double w = get_number(comps[i]["weight"], child(cp, "weight"));
    if (!(w > 0.0 && w <= 1.0)) fail(child(cp, "weight"), "weight must lie in (0, 1]");
    config.weights.push_back(w);
    weight_sum += w;
  }
  if (std::abs(weight_sum - 1.0) > 1e-12) {
    std::ostringstream os;
    os.precision(17);
    os << "weights sum to " << weight_sum << ", must equal 1 within 1e-12";
    fail("/mixture/components/*/weight", os.str());
  }
  config.true_component_index = get_unsigned(mix["true_component_index"], "/mixture/true_component_index");
  if (config.true_component_index >= config.components.size()) {
    fail("/mixture/true_component_index", "index outside the component list");
  }
  for (std::size_t i = 0; i < config.components.size(); ++i) {
    if (config.components[i].max_length() < config.horizon) {
      fail(child("/mixture/components", i), "component is defined only up to length " +
                                                std::to_string(config.components[i].max_length()));
    }
  }

  if (root.contains("losses")) {
    const json& losses = root["losses"];
    if (!losses.is_array()) fail("/losses", "expected an array");
    std::set<std::string> names;
    for (std::size_t i = 0; i < losses.size(); ++i) {
      config.losses.push_back(parse_loss(losses[i], child("/losses", i), config.alphabet_size));
      if (!names.insert(config.losses.back().name()).second) {
        fail(child("/losses", i), "duplicate loss name '" + config.losses.back().name() + "'; set an id");
      }
    }
  }
  if (root.contains("strategies")) {
    const json& s = root["strategies"];
    if (!s.is_array()) fail("/strategies", "expected an array");
    for (std::size_t i = 0; i < s.size(); ++i) config.strategies.push_back(parse_strategy(s[i], child("/strategies", i)));
  }
  if (root.contains("engine")) parse_engine(root["engine"], "/engine", config);
  if (root.contains("workers")) {
    const std::uint64_t w = get_unsigned(root["workers"], "/workers");
    if (w < 1 || w > 1024) fail("/workers", "must lie in [1, 1024]");
    config.workers = static_cast<unsigned>(w);
  }
  if (root.contains("checks")) {
    const json& c = root["checks"];
    if (!c.is_array()) fail("/checks", "expected an array");
    config.checks.clear();
    for (std::size_t i = 0; i < c.size(); ++i) {
      const CheckKind k = parse_check(c[i], child("/checks", i));
      if (config.has_check(k)) fail(child("/checks", i), "duplicate check");
      config.checks.push_back(k);
    }
  }
  if (root.contains("epsilon")) {
    config.epsilon = get_number(root["epsilon"], "/epsilon");
    if (!(config.epsilon > 0.0)) fail("/epsilon", "must be positive");
  }
  if (root.contains("ratio_trace")) {
    config.ratio_trace = parse_ratio_trace(root["ratio_trace"], "/ratio_trace", config.alphabet_size);
  }
  if (config.has_check(CheckKind::kRatioTrace)) {
    if (!config.ratio_trace) config.ratio_trace = RatioTraceConfig{};
    if (config.ratio_trace->fit_last > config.horizon) fail("/ratio_trace/fit_last", "exceeds horizon");
  }
  if (config.has_check(CheckKind::kInstant) && config.engine != EngineKind::kExact) {
    fail("/checks", "'instant' needs the exact engine (per-history records)");
  }
  if (config.has_check(CheckKind::kLogLoss) &&
      std::none_of(config.losses.begin(), config.losses.end(), [](const LossSpec& l) { return !l.bounded(); })) {
    fail("/checks", "'logloss' requested but no log loss is configured");
  }
  if (root.contains("proof_grid")) config.proof_grid = parse_proof_grid(root["proof_grid"], "/proof_grid");
  if (root.contains("output")) {
    const json& o = root["output"];
    check_keys(o, "/output", {}, {"csv", "report", "json", "trace_csv"});
    if (o.contains("csv")) config.output.csv = get_string(o["csv"], "/output/csv");
    if (o.contains("report")) config.output.report = get_string(o["report"], "/output/report");
    if (o.contains("json")) config.output.json = get_string(o["json"], "/output/json");
    if (o.contains("trace_csv")) config.output.trace_csv = get_string(o["trace_csv"], "/output/trace_csv");
  }
  return config;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path + ": cannot open config file");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  try {
    return parse_config(buffer.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

}  // namespace bayespred
