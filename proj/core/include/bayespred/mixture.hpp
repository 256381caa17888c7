#pragma once

#include <cstddef>
#include <vector>

#include "bayespred/measure.hpp"

namespace bayespred {

// Bayes mixture xi(x) = sum_nu w_nu * nu(x) over a finite class. Behaves as
// a SequenceMeasure itself (same conditional/marginal surface).
class MixtureModel {
 public:
  // Weights must be positive and sum to 1 within 1e-12.
  MixtureModel(std::vector<SequenceMeasure> components, std::vector<double> weights);
  static MixtureModel uniform(std::vector<SequenceMeasure> components);

  std::size_t size() const { return components_.size(); }
  std::size_t alphabet_size() const { return alphabet_.size(); }
  const Alphabet& alphabet() const { return alphabet_; }
  const std::vector<SequenceMeasure>& components() const { return components_; }
  const SequenceMeasure& component(std::size_t i) const { return components_.at(i); }
  const std::vector<double>& weights() const { return weights_; }
  const std::vector<double>& log_weights() const { return log_weights_; }
  // ln(1 / w_i): the entropy bound for component i as the true measure.
  double log_inverse_weight(std::size_t i) const { return -log_weights_.at(i); }
  std::size_t max_length() const;

  // log xi(x_{1:n}), by log-sum-exp over components.
  double log_marginal(History x) const;
  // xi(x | history) as the ratio xi(history x) / xi(history).
  double conditional(History history, Symbol x) const;
  std::vector<double> conditional_distribution(History history) const;
  // w_nu(history) = w_nu nu(history) / xi(history).
  std::vector<double> posterior_weights(History history) const;

  // Unchecked fast path: log xi(x | history) for every x.
  void log_conditionals(History history, std::span<double> out) const;
  void conditionals(History history, std::span<double> out) const;

  Sequence sample(std::size_t length, std::uint64_t seed) const;

 private:
  // log(w_nu) + log nu(history) per component.
  std::vector<double> joint_log_weights(History history) const;
  void check_history(History history, const std::vector<double>& joint) const;

  std::vector<SequenceMeasure> components_;
  std::vector<double> weights_;
  std::vector<double> log_weights_;
  Alphabet alphabet_;
};

}  // namespace bayespred
