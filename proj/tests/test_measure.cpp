#include <doctest.h>

#include <cmath>
#include <numeric>

#include "bayespred/errors.hpp"
#include "bayespred/log_prob.hpp"
#include "bayespred/measure.hpp"
#include "oracle/brute_force.hpp"

using namespace bayespred;

namespace {

Sequence seq(std::initializer_list<Symbol> s) { return Sequence(s); }

SequenceMeasure sample_markov() {
  // P(1|0) = 0.3, P(1|1) = 0.9, initial P(1) = 0.5
  return SequenceMeasure::markov(2, 1, {0.5, 0.5}, {{0.7, 0.3}, {0.1, 0.9}});
}

std::vector<SequenceMeasure> measure_zoo() {
  std::vector<SequenceMeasure> zoo;
  zoo.push_back(SequenceMeasure::bernoulli(0.3));
  zoo.push_back(sample_markov());
  zoo.push_back(SequenceMeasure::markov(3, 2, {0.2, 0.5, 0.3},
                                        {{0.1, 0.2, 0.7}, {0.3, 0.3, 0.4}, {0.5, 0.25, 0.25},
                                         {0.6, 0.3, 0.1}, {0.2, 0.2, 0.6}, {0.9, 0.05, 0.05},
                                         {0.4, 0.4, 0.2}, {0.0, 0.5, 0.5}, {1.0, 0.0, 0.0}}));
  zoo.push_back(SequenceMeasure::categorical({0.25, 0.5, 0.25}));
  zoo.push_back(SequenceMeasure::periodic(3, {2}, {0, 1}));
  zoo.push_back(SequenceMeasure::power_law_binary(0.5, -1.0));
  zoo.push_back(SequenceMeasure::explicit_table(2, 8, {{{}, {0.4, 0.6}}, {{1}, {0.9, 0.1}}, {{1, 0}, {0.0, 1.0}}},
                                                {0.5, 0.5}));
  return zoo;
}

}  // namespace

TEST_CASE("bernoulli marginals") {
  const auto m = SequenceMeasure::bernoulli(0.5);
  CHECK(m.log_marginal(seq({0, 1, 1, 0})) == doctest::Approx(std::log(1.0 / 16)).epsilon(1e-15));
  CHECK(m.log_marginal({}) == 0.0);
  CHECK(SequenceMeasure::bernoulli(0.2).conditional(seq({1, 1, 0}), 1) == doctest::Approx(0.2));
}

TEST_CASE("deterministic measure is a point mass") {
  const auto zeros = SequenceMeasure::deterministic(2, [](std::size_t) { return Symbol{0}; }, "0^inf");
  CHECK(zeros.log_marginal(seq({0, 0})) == 0.0);
  CHECK(is_log_zero(zeros.log_marginal(seq({0, 1}))));
  CHECK(zeros.conditional(seq({0, 0}), 0) == 1.0);
  CHECK(zeros.sample(3, 7) == seq({0, 0, 0}));
  CHECK_THROWS_AS(zeros.conditional(seq({1}), 0), UndefinedConditional);
}

TEST_CASE("markov chain-rule product") {
  const auto m = sample_markov();
  CHECK(m.log_marginal(seq({0, 1, 1})) == doctest::Approx(std::log(0.5 * 0.3 * 0.9)).epsilon(1e-14));
  double total = 0.0;
  oracle::for_each_string(2, 3, [&](const oracle::Seq& x) { total += std::exp(m.log_marginal(x)); });
  CHECK(total == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("markov context indexing puts the oldest symbol first") {
  // Order 2 over {0,1}: rows for contexts 00, 01, 10, 11.
  const auto m = SequenceMeasure::markov(2, 2, {0.5, 0.5}, {{0.9, 0.1}, {0.8, 0.2}, {0.3, 0.7}, {0.4, 0.6}});
  CHECK(m.conditional(seq({0, 1}), 1) == doctest::Approx(0.2));
  CHECK(m.conditional(seq({1, 0}), 1) == doctest::Approx(0.7));
  CHECK(m.conditional(seq({0, 1, 0}), 1) == doctest::Approx(0.7));
  // fewer than k symbols: initial distribution
  CHECK(m.conditional(seq({1}), 1) == doctest::Approx(0.5));
}

TEST_CASE("time-varying counterexample measure") {
  const auto mu = SequenceMeasure::power_law_binary(0.5, -3.0);
  CHECK(mu.conditional(seq({0}), 1) == doctest::Approx(1.0 / 16));
  CHECK(mu.conditional({}, 1) == doctest::Approx(0.5));
  CHECK_THROWS_AS(SequenceMeasure::power_law_binary(1.5, -1.0), DomainError);
  CHECK_THROWS_AS(SequenceMeasure::power_law_binary(0.5, 0.5), DomainError);
}

TEST_CASE("sampling") {
  CHECK(SequenceMeasure::bernoulli(1.0).sample(5, 123) == seq({1, 1, 1, 1, 1}));
  const auto fair = SequenceMeasure::bernoulli(0.5);
  const Sequence s = fair.sample(10000, 42);
  const double ones = static_cast<double>(std::accumulate(s.begin(), s.end(), 0u));
  CHECK(ones / 10000.0 >= 0.48);
  CHECK(ones / 10000.0 <= 0.52);
  CHECK(fair.sample(10000, 42) == s);
  CHECK(fair.sample(100, 43) != fair.sample(100, 42));
}

TEST_CASE("sampling frequencies agree with conditionals") {
  const auto m = sample_markov();
  // Transition counts out of state 0 on one long path.
  const Sequence s = m.sample(10000, 99);
  double from0 = 0, to1 = 0;
  for (std::size_t i = 1; i < s.size(); ++i) {
    if (s[i - 1] != 0) continue;
    from0 += 1;
    to1 += s[i];
  }
  const double p = 0.3;
  const double se = std::sqrt(p * (1 - p) / from0);
  CHECK(std::abs(to1 / from0 - p) <= 4 * se);
}

TEST_CASE("invalid parameters") {
  CHECK_THROWS_AS(SequenceMeasure::bernoulli(1.2), DomainError);
  CHECK_THROWS_AS(SequenceMeasure::categorical({0.5, 0.6}), DomainError);
  CHECK_THROWS_AS(SequenceMeasure::markov(2, 1, {0.5, 0.5}, {{0.5, 0.5}}), DomainError);
  CHECK_THROWS_AS(SequenceMeasure::bernoulli(0.5).log_marginal(seq({0, 2})), DomainError);
  CHECK_THROWS_AS(Alphabet(1), DomainError);
}

TEST_CASE("explicit table is limited to its horizon") {
  const auto m = SequenceMeasure::explicit_table(2, 2, {{{}, {0.4, 0.6}}}, {0.5, 0.5});
  CHECK(m.max_length() == 2);
  CHECK(m.conditional(seq({1}), 1) == doctest::Approx(0.5));
  CHECK_THROWS(m.log_marginal(seq({0, 0, 0})));
}

TEST_CASE("chain rule and normalization for every measure kind") {
  for (const auto& m : measure_zoo()) {
    CAPTURE(m.description());
    const std::size_t n_max = m.alphabet_size() == 2 ? 8 : 6;
    for (std::size_t n = 1; n <= n_max; ++n) {
      double total = 0.0;
      oracle::for_each_string(m.alphabet_size(), n, [&](const oracle::Seq& x) {
        const double lm = m.log_marginal(x);
        total += std::exp(lm);
        // product of conditionals along the path
        double lp = 0.0;
        bool zero = false;
        for (std::size_t t = 0; t < x.size() && !zero; ++t) {
          std::vector<double> c(m.alphabet_size());
          m.conditionals(History(x.data(), t), c);
          if (c[x[t]] == 0.0) zero = true;
          else lp += std::log(c[x[t]]);
        }
        if (zero) {
          CHECK(is_log_zero(lm));
        } else {
          CHECK(std::abs(lp - lm) <= 1e-12);
        }
      });
      CHECK(std::abs(total - 1.0) <= 1e-9);
    }
  }
}
