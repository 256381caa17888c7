#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace bayespred {

using Symbol = std::uint32_t;
using Sequence = std::vector<Symbol>;
// x_{<t}: a read-only view of the symbols observed so far.
using History = std::span<const Symbol>;

class Alphabet {
 public:
  explicit Alphabet(std::size_t size);
  std::size_t size() const { return size_; }
  bool contains(Symbol s) const { return s < size_; }
  // Throws DomainError naming the offending position.
  void validate(History symbols) const;

 private:
  std::size_t size_;
};

// Renders a sequence as a compact string; digits for N <= 10.
std::string to_string(History symbols);

// Probability measure over sequences, defined through its one-step
// conditionals. All public probabilities are natural logs unless the name
// says otherwise. Immutable after construction.
class SequenceMeasure {
 public:
  enum class Kind { kBernoulli, kMarkov, kDeterministic, kTimeVaryingBinary, kExplicitTable };

  // P(x_t = 1) = theta, i.i.d. over the binary alphabet.
  static SequenceMeasure bernoulli(double theta);

  // Order-k Markov chain over `alphabet_size` symbols. `transitions` has
  // N^k rows of N entries; the row for context (x_{t-k}, ..., x_{t-1}) is
  // sum_j x_{t-k+j} * N^(k-1-j), oldest symbol most significant. While
  // fewer than k symbols are observed, x_t is drawn from `initial`.
  // Order 0 is an i.i.d. categorical measure and ignores `initial`.
  static SequenceMeasure markov(std::size_t alphabet_size, std::size_t order,
                                std::vector<double> initial,
                                std::vector<std::vector<double>> transitions);

  static SequenceMeasure categorical(std::vector<double> probs);

  // Point mass on the infinite sequence generator(0), generator(1), ...
  static SequenceMeasure deterministic(std::size_t alphabet_size,
                                       std::function<Symbol(std::size_t)> generator,
                                       std::string description);
  // prefix followed by cycle repeated forever.
  static SequenceMeasure periodic(std::size_t alphabet_size, Sequence prefix, Sequence cycle);

  // Binary measure with P(x_t = 1 | x_{<t}) = p_one(t), t = 1, 2, ...
  static SequenceMeasure time_varying_binary(std::function<double(std::size_t)> p_one,
                                             std::string description);
  // p_one(t) = scale * t^exponent, requires scale in [0,1] and exponent <= 0.
  static SequenceMeasure power_law_binary(double scale, double exponent);

  // History-indexed conditional table valid for histories shorter than
  // `horizon`. Histories not listed use `fallback`.
  static SequenceMeasure explicit_table(std::size_t alphabet_size, std::size_t horizon,
                                        std::map<Sequence, std::vector<double>> conditionals,
                                        std::vector<double> fallback);

  Kind kind() const;
  std::size_t alphabet_size() const { return alphabet_.size(); }
  const Alphabet& alphabet() const { return alphabet_; }
  const std::string& description() const { return description_; }
  // Largest supported sequence length; SIZE_MAX when unbounded.
  std::size_t max_length() const;

  // Writes log rho(x | history) for every symbol x into `out` (size N).
  // Unchecked: histories are assumed valid; used by the evaluation engines.
  void log_conditionals(History history, std::span<double> out) const;
  void conditionals(History history, std::span<double> out) const;

  // log rho(x_{1:t}); exact -inf for impossible strings.
  double log_marginal(History x) const;
  // rho(x | history). Throws UndefinedConditional if rho(history) = 0.
  double conditional(History history, Symbol x) const;
  std::vector<double> conditional_distribution(History history) const;

  // Deterministic given seed.
  Sequence sample(std::size_t length, std::uint64_t seed) const;

 private:
  struct Bernoulli {
    double theta;
  };
  struct Markov {
    std::size_t order;
    std::vector<double> initial;
    std::vector<std::vector<double>> transitions;
  };
  struct Deterministic {
    std::function<Symbol(std::size_t)> generator;
  };
  struct TimeVarying {
    std::function<double(std::size_t)> p_one;
  };
  struct Table {
    std::size_t horizon;
    std::map<Sequence, std::vector<double>> conditionals;
    std::vector<double> fallback;
  };
  using Model = std::variant<Bernoulli, Markov, Deterministic, TimeVarying, Table>;

  SequenceMeasure(Alphabet alphabet, Model model, std::string description);
  void check_history(History history) const;

  Alphabet alphabet_;
  Model model_;
  std::string description_;
};

// Validates that `probs` is a probability vector (entries in [0,1], sum
// within `tolerance` of 1). Throws DomainError mentioning `what`.
void validate_distribution(std::span<const double> probs, double tolerance, const std::string& what);

}  // namespace bayespred
