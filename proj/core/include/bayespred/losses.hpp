#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "bayespred/measure.hpp"

namespace bayespred {

// Finite action sets use an index; continuous ones a real in [0,1].
using Action = std::variant<std::size_t, double>;

std::string to_string(const Action& action);

enum class LossKind { kMatrix, kError, kAbsolute, kAlpha, kQuadratic, kHellinger, kLog, kCustom };

// Loss l(x, y) for outcome x and action y.
//
// Matrix and error losses have a finite action set. The named continuous
// losses (absolute, alpha, quadratic, hellinger, log) are defined for the
// binary alphabet with actions in [0,1]. Matrix entries outside [0,1] are
// rescaled affinely at construction; scale() and offset() recover the
// original units as offset + scale * value.
class LossSpec {
 public:
  static constexpr double kDefaultGridResolution = 1e-5;

  // rows[x][y]; every row must have the same length |Y| >= 1.
  static LossSpec matrix(std::vector<std::vector<double>> rows);
  // 1 - delta_xy with Y = X.
  static LossSpec error(std::size_t alphabet_size = 2);
  static LossSpec absolute();
  // |x - y|^alpha, alpha > 0.
  static LossSpec alpha(double alpha);
  static LossSpec quadratic();
  // 1 - sqrt(|1 - x - y|)
  static LossSpec hellinger();
  // -ln|1 - x - y|; unbounded.
  static LossSpec log_loss();
  // Binary continuous loss without a closed-form action; actions are found
  // by grid search at `grid_resolution`.
  static LossSpec custom(std::string name, std::function<double(Symbol, double)> loss,
                         double grid_resolution = kDefaultGridResolution);

  // Copy whose Bayes action is found by grid search instead of the closed
  // form; continuous losses only.
  LossSpec with_grid_search(double resolution) const;
  bool uses_grid_search() const { return grid_search_; }
  LossSpec with_name(std::string name) const;

  LossKind kind() const { return kind_; }
  const std::string& name() const { return name_; }
  std::size_t alphabet_size() const { return alphabet_size_; }
  bool bounded() const { return kind_ != LossKind::kLog; }
  bool finite_actions() const { return kind_ == LossKind::kMatrix || kind_ == LossKind::kError; }
  std::size_t action_count() const;  // finite action sets only
  double alpha_exponent() const { return alpha_; }
  double grid_resolution() const { return grid_resolution_; }
  double scale() const { return scale_; }
  double offset() const { return offset_; }
  const std::vector<std::vector<double>>& matrix_rows() const { return rows_; }

  // Throws DomainError if the action does not belong to Y.
  void validate(const Action& action) const;
  double value(Symbol outcome, const Action& action) const;
  // For every outcome some action has zero loss.
  bool has_zero_loss_actions() const;

 private:
  LossSpec(LossKind kind, std::string name, std::size_t alphabet_size);

  LossKind kind_;
  std::string name_;
  std::size_t alphabet_size_;
  std::vector<std::vector<double>> rows_;
  double alpha_ = 1.0;
  double grid_resolution_ = kDefaultGridResolution;
  double scale_ = 1.0;
  double offset_ = 0.0;
  bool grid_search_ = false;
  std::function<double(Symbol, double)> custom_;
};

// gamma = (l01 - l00) / (l01 - l00 + l10 - l11) for a 2x2 matrix rows[x][y].
// The Bayes action is 0 for rho_1 < gamma and 1 for rho_1 > gamma.
// Throws DegenerateLoss when the denominator is not positive.
double threshold_gamma(const std::vector<std::vector<double>>& rows);

// argmin_y sum_x posterior[x] * l(x, y). Ties go to the lowest index or the
// smallest real action. Throws DomainError unless posterior sums to 1
// within 1e-9.
Action bayes_action(const LossSpec& loss, std::span<const double> posterior);

// Exhaustive minimization over {0, r, 2r, ..., 1}; continuous losses only.
Action grid_bayes_action(const LossSpec& loss, std::span<const double> posterior, double resolution);

// sum_x true_posterior[x] * l(x, action), skipping outcomes of probability 0.
double expected_loss(const LossSpec& loss, std::span<const double> true_posterior, const Action& action);

// A causal prediction scheme used as a comparison baseline.
class Strategy {
 public:
  // Always plays `action` (an index for finite Y, a real otherwise).
  static Strategy constant(double action);
  // Predicts the most frequent symbol so far; ties and the empty history go
  // to the lowest symbol.
  static Strategy majority();
  // Bayes action under the Laplace rule-of-succession estimate.
  static Strategy laplace();

  const std::string& name() const { return name_; }
  Action act(const LossSpec& loss, History history) const;

 private:
  enum class Kind { kConstant, kMajority, kLaplace };
  Strategy(Kind kind, double action, std::string name) : kind_(kind), action_(action), name_(std::move(name)) {}

  Kind kind_;
  double action_;
  std::string name_;
};

}  // namespace bayespred
