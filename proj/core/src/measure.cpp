#include "bayespred/measure.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "bayespred/errors.hpp"
#include "bayespred/log_prob.hpp"
#include "bayespred/random.hpp"

namespace bayespred {

namespace {

constexpr double kNormalizationTolerance = 1e-12;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::string format_probability(double p) {
  std::ostringstream os;
  os.precision(6);
  os << p;
  return os.str();
}

}  // namespace

Alphabet::Alphabet(std::size_t size) : size_(size) {
  if (size < 2) throw DomainError("alphabet needs at least two symbols");
}

void Alphabet::validate(History symbols) const {
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    if (!contains(symbols[i])) {
      throw DomainError("symbol " + std::to_string(symbols[i]) + " at position " + std::to_string(i + 1) +
                        " outside alphabet of size " + std::to_string(size_));
    }
  }
}

std::string to_string(History symbols) {
  std::string out;
  bool wide = false;
  for (Symbol s : symbols) wide = wide || s >= 10;
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    if (wide && i > 0) out += '.';
    out += std::to_string(symbols[i]);
  }
  return out;
}

void validate_distribution(std::span<const double> probs, double tolerance, const std::string& what) {
  double total = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0 && p <= 1.0)) throw DomainError(what + ": probability " + format_probability(p) + " outside [0,1]");
    total += p;
  }
  if (std::abs(total - 1.0) > tolerance) {
    throw DomainError(what + ": probabilities sum to " + format_probability(total) + ", expected 1");
  }
}

SequenceMeasure::SequenceMeasure(Alphabet alphabet, Model model, std::string description)
    : alphabet_(alphabet), model_(std::move(model)), description_(std::move(description)) {}

SequenceMeasure SequenceMeasure::bernoulli(double theta) {
  if (!(theta >= 0.0 && theta <= 1.0)) throw DomainError("bernoulli: theta outside [0,1]");
  return SequenceMeasure(Alphabet(2), Bernoulli{theta}, "bernoulli(" + format_probability(theta) + ")");
}

SequenceMeasure SequenceMeasure::markov(std::size_t alphabet_size, std::size_t order, std::vector<double> initial,
                                        std::vector<std::vector<double>> transitions) {
  Alphabet alphabet(alphabet_size);
  std::size_t rows = 1;
  for (std::size_t i = 0; i < order; ++i) {
    if (rows > (std::size_t{1} << 24) / alphabet_size) throw DomainError("markov: transition table too large");
    rows *= alphabet_size;
  }
  if (transitions.size() != rows) {
    throw DomainError("markov: expected " + std::to_string(rows) + " transition rows, got " +
                      std::to_string(transitions.size()));
  }
  for (std::size_t r = 0; r < rows; ++r) {
    if (transitions[r].size() != alphabet_size) throw DomainError("markov: transition row has wrong length");
    validate_distribution(transitions[r], kNormalizationTolerance, "markov transition row " + std::to_string(r));
  }
  if (order > 0) {
    if (initial.size() != alphabet_size) throw DomainError("markov: initial distribution has wrong length");
    validate_distribution(initial, kNormalizationTolerance, "markov initial distribution");
  } else {
    initial.clear();
  }
  std::string description = order == 0 ? "categorical" : "markov(order " + std::to_string(order) + ")";
  return SequenceMeasure(alphabet, Markov{order, std::move(initial), std::move(transitions)}, std::move(description));
}

SequenceMeasure SequenceMeasure::categorical(std::vector<double> probs) {
  const std::size_t n = probs.size();
  return markov(n, 0, {}, {std::move(probs)});
}

SequenceMeasure SequenceMeasure::deterministic(std::size_t alphabet_size, std::function<Symbol(std::size_t)> generator,
                                               std::string description) {
  if (!generator) throw DomainError("deterministic: empty generator");
  return SequenceMeasure(Alphabet(alphabet_size), Deterministic{std::move(generator)}, std::move(description));
}

SequenceMeasure SequenceMeasure::periodic(std::size_t alphabet_size, Sequence prefix, Sequence cycle) {
  Alphabet alphabet(alphabet_size);
  if (cycle.empty()) throw DomainError("deterministic: cycle must be non-empty");
  alphabet.validate(prefix);
  alphabet.validate(cycle);
  std::string description = "deterministic(" + to_string(prefix) + "(" + to_string(cycle) + ")^inf)";
  return deterministic(
      alphabet_size,
      [prefix = std::move(prefix), cycle = std::move(cycle)](std::size_t index) {
        if (index < prefix.size()) return prefix[index];
        return cycle[(index - prefix.size()) % cycle.size()];
      },
      std::move(description));
}

SequenceMeasure SequenceMeasure::time_varying_binary(std::function<double(std::size_t)> p_one,
                                                     std::string description) {
  if (!p_one) throw DomainError("time-varying-binary: empty rule");
  return SequenceMeasure(Alphabet(2), TimeVarying{std::move(p_one)}, std::move(description));
}

SequenceMeasure SequenceMeasure::power_law_binary(double scale, double exponent) {
  if (!(scale >= 0.0 && scale <= 1.0)) throw DomainError("time-varying-binary: scale outside [0,1]");
  if (!(exponent <= 0.0)) throw DomainError("time-varying-binary: exponent must be <= 0");
  std::ostringstream os;
  os.precision(6);
  os << "time-varying-binary(" << scale << "*t^" << exponent << ")";
  return time_varying_binary(
      [scale, exponent](std::size_t t) { return scale * std::pow(static_cast<double>(t), exponent); }, os.str());
}

SequenceMeasure SequenceMeasure::explicit_table(std::size_t alphabet_size, std::size_t horizon,
                                                std::map<Sequence, std::vector<double>> conditionals,
                                                std::vector<double> fallback) {
  Alphabet alphabet(alphabet_size);
  if (horizon == 0) throw DomainError("explicit-table: horizon must be positive");
  for (const auto& [history, probs] : conditionals) {
    alphabet.validate(history);
    if (history.size() >= horizon) throw DomainError("explicit-table: history longer than horizon");
    if (probs.size() != alphabet_size) throw DomainError("explicit-table: row has wrong length");
    validate_distribution(probs, kNormalizationTolerance, "explicit-table row '" + to_string(history) + "'");
  }
  if (fallback.size() != alphabet_size) throw DomainError("explicit-table: fallback has wrong length");
  validate_distribution(fallback, kNormalizationTolerance, "explicit-table fallback");
  return SequenceMeasure(alphabet, Table{horizon, std::move(conditionals), std::move(fallback)},
                         "explicit-table(horizon " + std::to_string(horizon) + ")");
}

SequenceMeasure::Kind SequenceMeasure::kind() const {
  return std::visit(Overloaded{[](const Bernoulli&) { return Kind::kBernoulli; },
                               [](const Markov&) { return Kind::kMarkov; },
                               [](const Deterministic&) { return Kind::kDeterministic; },
                               [](const TimeVarying&) { return Kind::kTimeVaryingBinary; },
                               [](const Table&) { return Kind::kExplicitTable; }},
                    model_);
}

std::size_t SequenceMeasure::max_length() const {
  if (const auto* table = std::get_if<Table>(&model_)) return table->horizon;
  return std::numeric_limits<std::size_t>::max();
}

void SequenceMeasure::log_conditionals(History history, std::span<double> out) const {
  const std::size_t n = alphabet_.size();
  std::visit(Overloaded{
                 [&](const Bernoulli& m) {
                   out[0] = safe_log(1.0 - m.theta);
                   out[1] = safe_log(m.theta);
                 },
                 [&](const Markov& m) {
                   const std::vector<double>* row = &m.transitions[0];
                   if (m.order > 0) {
                     if (history.size() < m.order) {
                       row = &m.initial;
                     } else {
                       std::size_t index = 0;
                       for (std::size_t j = history.size() - m.order; j < history.size(); ++j) {
                         index = index * n + history[j];
                       }
                       row = &m.transitions[index];
                     }
                   }
                   for (std::size_t x = 0; x < n; ++x) out[x] = safe_log((*row)[x]);
                 },
                 [&](const Deterministic& m) {
                   const Symbol next = m.generator(history.size());
                   if (!alphabet_.contains(next)) throw DomainError("deterministic generator produced invalid symbol");
                   for (std::size_t x = 0; x < n; ++x) out[x] = x == next ? 0.0 : kLogZero;
                 },
                 [&](const TimeVarying& m) {
                   const double p = m.p_one(history.size() + 1);
                   if (!(p >= 0.0 && p <= 1.0)) {
                     throw DomainError("time-varying-binary rule left [0,1] at t=" + std::to_string(history.size() + 1));
                   }
                   out[0] = p == 1.0 ? kLogZero : std::log1p(-p);
                   out[1] = safe_log(p);
                 },
                 [&](const Table& m) {
                   if (history.size() >= m.horizon) {
                     throw DomainError("explicit-table: history length " + std::to_string(history.size()) +
                                       " reaches table horizon " + std::to_string(m.horizon));
                   }
                   const auto it = m.conditionals.find(Sequence(history.begin(), history.end()));
                   const std::vector<double>& row = it == m.conditionals.end() ? m.fallback : it->second;
                   for (std::size_t x = 0; x < n; ++x) out[x] = safe_log(row[x]);
                 }},
             model_);
}

void SequenceMeasure::conditionals(History history, std::span<double> out) const {
  log_conditionals(history, out);
  for (double& v : out) v = std::exp(v);
}

double SequenceMeasure::log_marginal(History x) const {
  alphabet_.validate(x);
  std::vector<double> logs(alphabet_.size());
  double total = 0.0;
  for (std::size_t t = 0; t < x.size(); ++t) {
    log_conditionals(x.first(t), logs);
    total += logs[x[t]];
    if (is_log_zero(total)) return kLogZero;
  }
  return total;
}

void SequenceMeasure::check_history(History history) const {
  if (is_log_zero(log_marginal(history))) {
    throw UndefinedConditional("conditioning on zero-probability history '" + to_string(history) + "' under " +
                               description_);
  }
}

double SequenceMeasure::conditional(History history, Symbol x) const {
  if (!alphabet_.contains(x)) throw DomainError("symbol " + std::to_string(x) + " outside alphabet");
  check_history(history);
  std::vector<double> probs(alphabet_.size());
  conditionals(history, probs);
  return probs[x];
}

std::vector<double> SequenceMeasure::conditional_distribution(History history) const {
  check_history(history);
  std::vector<double> probs(alphabet_.size());
  conditionals(history, probs);
  return probs;
}

Sequence SequenceMeasure::sample(std::size_t length, std::uint64_t seed) const {
  if (length == 0) throw DomainError("sample length must be positive");
  if (length > max_length()) throw DomainError("sample length exceeds measure horizon");
  Rng rng(seed);
  Sequence out;
  out.reserve(length);
  std::vector<double> probs(alphabet_.size());
  for (std::size_t t = 0; t < length; ++t) {
    conditionals(out, probs);
    out.push_back(draw_symbol(probs, rng.uniform()));
  }
  return out;
}

}  // namespace bayespred
