#include "bayespred/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "bayespred/errors.hpp"
#include "bayespred/log_prob.hpp"
#include "bayespred/random.hpp"

namespace bayespred {

namespace {

Alphabet common_alphabet(const std::vector<SequenceMeasure>& components) {
  if (components.empty()) throw DomainError("mixture: component list is empty");
  const std::size_t n = components.front().alphabet_size();
  for (const auto& c : components) {
    if (c.alphabet_size() != n) throw DomainError("mixture: components disagree on alphabet size");
  }
  return Alphabet(n);
}

}  // namespace

MixtureModel::MixtureModel(std::vector<SequenceMeasure> components, std::vector<double> weights)
    : components_(std::move(components)), weights_(std::move(weights)), alphabet_(common_alphabet(components_)) {
  if (weights_.size() != components_.size()) throw DomainError("mixture: one weight per component required");
  double total = 0.0;
  for (double w : weights_) {
    if (!(w > 0.0 && w <= 1.0)) throw DomainError("mixture: weights must lie in (0,1]");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12) throw DomainError("mixture: weights must sum to 1");
  log_weights_.reserve(weights_.size());
  for (double w : weights_) log_weights_.push_back(std::log(w));
}

MixtureModel MixtureModel::uniform(std::vector<SequenceMeasure> components) {
  const std::size_t k = components.size();
  std::vector<double> weights(k, k == 0 ? 0.0 : 1.0 / static_cast<double>(k));
  return MixtureModel(std::move(components), std::move(weights));
}

std::size_t MixtureModel::max_length() const {
  std::size_t limit = std::numeric_limits<std::size_t>::max();
  for (const auto& c : components_) limit = std::min(limit, c.max_length());
  return limit;
}

std::vector<double> MixtureModel::joint_log_weights(History history) const {
  std::vector<double> joint(components_.size());
  for (std::size_t i = 0; i < components_.size(); ++i) {
    joint[i] = log_weights_[i] + components_[i].log_marginal(history);
  }
  return joint;
}

double MixtureModel::log_marginal(History x) const {
  alphabet_.validate(x);
  return log_sum_exp(joint_log_weights(x));
}

void MixtureModel::check_history(History history, const std::vector<double>& joint) const {
  if (is_log_zero(log_sum_exp(joint))) {
    throw UndefinedConditional("mixture: conditioning on zero-probability history '" + to_string(history) + "'");
  }
}

void MixtureModel::log_conditionals(History history, std::span<double> out) const {
  const std::size_t n = alphabet_.size();
  std::vector<double> joint = joint_log_weights(history);
  const double log_denominator = log_sum_exp(joint);
  std::vector<double> component_logs(n);
  std::vector<std::vector<double>> per_component(components_.size(), std::vector<double>(n));
  for (std::size_t i = 0; i < components_.size(); ++i) {
    if (is_log_zero(joint[i])) continue;
    components_[i].log_conditionals(history, per_component[i]);
  }
  std::vector<double> terms(components_.size());
  for (std::size_t x = 0; x < n; ++x) {
    for (std::size_t i = 0; i < components_.size(); ++i) {
      terms[i] = is_log_zero(joint[i]) ? kLogZero : joint[i] + per_component[i][x];
    }
    out[x] = log_sum_exp(terms) - log_denominator;
  }
}

void MixtureModel::conditionals(History history, std::span<double> out) const {
  log_conditionals(history, out);
  for (double& v : out) v = std::exp(v);
}

double MixtureModel::conditional(History history, Symbol x) const {
  if (!alphabet_.contains(x)) throw DomainError("symbol " + std::to_string(x) + " outside alphabet");
  return conditional_distribution(history)[x];
}

std::vector<double> MixtureModel::conditional_distribution(History history) const {
  alphabet_.validate(history);
  check_history(history, joint_log_weights(history));
  std::vector<double> probs(alphabet_.size());
  conditionals(history, probs);
  return probs;
}

std::vector<double> MixtureModel::posterior_weights(History history) const {
  alphabet_.validate(history);
  std::vector<double> joint = joint_log_weights(history);
  check_history(history, joint);
  const double log_total = log_sum_exp(joint);
  for (double& v : joint) v = std::exp(v - log_total);
  return joint;
}

Sequence MixtureModel::sample(std::size_t length, std::uint64_t seed) const {
  if (length == 0) throw DomainError("sample length must be positive");
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
