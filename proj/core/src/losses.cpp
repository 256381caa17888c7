#include "bayespred/losses.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "bayespred/errors.hpp"
#include "bayespred/log_prob.hpp"

namespace bayespred {

namespace {

void check_posterior(std::span<const double> posterior, std::size_t alphabet_size) {
  if (posterior.size() != alphabet_size) {
    throw DomainError("posterior has " + std::to_string(posterior.size()) + " entries, loss expects " +
                      std::to_string(alphabet_size));
  }
  validate_distribution(posterior, 1e-9, "posterior");
}

double real_action(const Action& action) {
  if (const double* y = std::get_if<double>(&action)) return *y;
  throw DomainError("continuous loss requires a real-valued action");
}

std::size_t index_action(const Action& action) {
  if (const std::size_t* y = std::get_if<std::size_t>(&action)) return *y;
  throw DomainError("finite-action loss requires an action index");
}

std::string format_number(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

}  // namespace

std::string to_string(const Action& action) {
  if (const std::size_t* y = std::get_if<std::size_t>(&action)) return std::to_string(*y);
  return format_number(std::get<double>(action));
}

LossSpec::LossSpec(LossKind kind, std::string name, std::size_t alphabet_size)
    : kind_(kind), name_(std::move(name)), alphabet_size_(alphabet_size) {}

LossSpec LossSpec::matrix(std::vector<std::vector<double>> rows) {
  if (rows.size() < 2) throw DomainError("matrix loss: need at least two outcome rows");
  const std::size_t actions = rows.front().size();
  if (actions == 0) throw DomainError("matrix loss: empty action set");
  double lo = rows[0][0];
  double hi = rows[0][0];
  for (const auto& row : rows) {
    if (row.size() != actions) throw DomainError("matrix loss: ragged rows");
    for (double v : row) {
      if (!std::isfinite(v)) throw DomainError("matrix loss: entries must be finite");
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  LossSpec spec(LossKind::kMatrix, "matrix", rows.size());
  if (lo < 0.0 || hi > 1.0) {
    spec.offset_ = lo;
    spec.scale_ = hi - lo;
    for (auto& row : rows) {
      for (double& v : row) v = (v - lo) / spec.scale_;
    }
  }
  spec.rows_ = std::move(rows);
  return spec;
}

LossSpec LossSpec::error(std::size_t alphabet_size) {
  if (alphabet_size < 2) throw DomainError("error loss: alphabet must have at least two symbols");
  LossSpec spec(LossKind::kError, "error", alphabet_size);
  spec.rows_.assign(alphabet_size, std::vector<double>(alphabet_size, 1.0));
  for (std::size_t i = 0; i < alphabet_size; ++i) spec.rows_[i][i] = 0.0;
  return spec;
}

LossSpec LossSpec::absolute() {
  LossSpec spec(LossKind::kAbsolute, "absolute", 2);
  return spec;
}

LossSpec LossSpec::alpha(double alpha) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw DomainError("alpha loss: alpha must be positive");
  LossSpec spec(LossKind::kAlpha, "alpha(" + format_number(alpha) + ")", 2);
  spec.alpha_ = alpha;
  return spec;
}

LossSpec LossSpec::quadratic() { return LossSpec(LossKind::kQuadratic, "quadratic", 2); }

LossSpec LossSpec::hellinger() { return LossSpec(LossKind::kHellinger, "hellinger", 2); }

LossSpec LossSpec::log_loss() { return LossSpec(LossKind::kLog, "log", 2); }

LossSpec LossSpec::custom(std::string name, std::function<double(Symbol, double)> loss, double grid_resolution) {
  if (!loss) throw DomainError("custom loss: empty function");
  if (!(grid_resolution > 0.0 && grid_resolution <= 0.5)) throw DomainError("custom loss: bad grid resolution");
  LossSpec spec(LossKind::kCustom, std::move(name), 2);
  spec.custom_ = std::move(loss);
  spec.grid_resolution_ = grid_resolution;
  return spec;
}

LossSpec LossSpec::with_grid_search(double resolution) const {
  if (finite_actions()) throw DomainError("grid search applies to continuous action sets");
  if (!(resolution > 0.0 && resolution <= 0.5)) throw DomainError("grid resolution must lie in (0, 0.5]");
  LossSpec copy = *this;
  copy.grid_search_ = true;
  copy.grid_resolution_ = resolution;
  return copy;
}

LossSpec LossSpec::with_name(std::string name) const {
  LossSpec copy = *this;
  copy.name_ = std::move(name);
  return copy;
}

std::size_t LossSpec::action_count() const {
  if (!finite_actions()) throw DomainError("loss '" + name_ + "' has a continuous action set");
  return rows_.front().size();
}

void LossSpec::validate(const Action& action) const {
  if (finite_actions()) {
    const std::size_t y = index_action(action);
    if (y >= action_count()) throw DomainError("action index " + std::to_string(y) + " outside action set");
  } else {
    const double y = real_action(action);
    if (!(y >= 0.0 && y <= 1.0)) throw DomainError("action " + format_number(y) + " outside [0,1]");
  }
}

double LossSpec::value(Symbol outcome, const Action& action) const {
  if (outcome >= alphabet_size_) throw DomainError("outcome outside alphabet");
  if (finite_actions()) return rows_[outcome][index_action(action)];
  const double y = real_action(action);
  const double x = static_cast<double>(outcome);
  switch (kind_) {
    case LossKind::kAbsolute:
      return std::abs(x - y);
    case LossKind::kAlpha:
      return std::pow(std::abs(x - y), alpha_);
    case LossKind::kQuadratic:
      return (x - y) * (x - y);
    case LossKind::kHellinger:
      return 1.0 - std::sqrt(std::abs(1.0 - x - y));
    case LossKind::kLog: {
      const double p = std::abs(1.0 - x - y);
      return p > 0.0 ? -std::log(p) : std::numeric_limits<double>::infinity();
    }
    case LossKind::kCustom:
      return custom_(outcome, y);
    default:
      break;
  }
  throw DomainError("unhandled loss kind");
}

bool LossSpec::has_zero_loss_actions() const {
  if (finite_actions()) {
    return std::all_of(rows_.begin(), rows_.end(), [](const std::vector<double>& row) {
      return std::any_of(row.begin(), row.end(), [](double v) { return v == 0.0; });
    });
  }
  // Named binary losses vanish at y = x.
  return value(0, 0.0) == 0.0 && value(1, 1.0) == 0.0;
}

double threshold_gamma(const std::vector<std::vector<double>>& rows) {
  if (rows.size() != 2 || rows[0].size() != 2 || rows[1].size() != 2) {
    throw DegenerateLoss("threshold: loss must be a 2x2 matrix");
  }
  const double up = rows[0][1] - rows[0][0];
  const double denominator = up + rows[1][0] - rows[1][1];
  if (!(denominator > 0.0)) throw DegenerateLoss("threshold: denominator l01 - l00 + l10 - l11 is not positive");
  return up / denominator;
}

Action bayes_action(const LossSpec& loss, std::span<const double> posterior) {
  check_posterior(posterior, loss.alphabet_size());
  if (loss.finite_actions()) {
    const auto& rows = loss.matrix_rows();
    std::size_t best = 0;
    double best_value = std::numeric_limits<double>::infinity();
    for (std::size_t y = 0; y < rows.front().size(); ++y) {
      double v = 0.0;
      for (std::size_t x = 0; x < rows.size(); ++x) v += posterior[x] * rows[x][y];
      if (v < best_value) {
        best_value = v;
        best = y;
      }
    }
    return best;
  }
  if (loss.uses_grid_search()) return grid_bayes_action(loss, posterior, loss.grid_resolution());
  const double p0 = posterior[0];
  const double p1 = posterior[1];
  switch (loss.kind()) {
    case LossKind::kAbsolute:
      return p1 > p0 ? 1.0 : 0.0;
    case LossKind::kAlpha: {
      const double alpha = loss.alpha_exponent();
      if (alpha <= 1.0) return p1 > p0 ? 1.0 : 0.0;
      if (p1 == 0.0) return 0.0;
      if (p0 == 0.0) return 1.0;
      // (1 + (p0/p1)^(1/(alpha-1)))^-1 as a logistic in log space, which
      // saturates to 0 or 1 instead of overflowing as alpha -> 1.
      const double u = (std::log(p0) - std::log(p1)) / (alpha - 1.0);
      return u > 0.0 ? std::exp(-u) / (1.0 + std::exp(-u)) : 1.0 / (1.0 + std::exp(u));
    }
    case LossKind::kQuadratic:
    case LossKind::kLog:
      return p1;
    case LossKind::kHellinger:
      return p1 * p1 / (p0 * p0 + p1 * p1);
    case LossKind::kCustom:
      return grid_bayes_action(loss, posterior, loss.grid_resolution());
    default:
      break;
  }
  throw DomainError("unhandled loss kind");
}

Action grid_bayes_action(const LossSpec& loss, std::span<const double> posterior, double resolution) {
  if (loss.finite_actions()) throw DomainError("grid search applies to continuous action sets");
  check_posterior(posterior, loss.alphabet_size());
  if (!(resolution > 0.0 && resolution <= 0.5)) throw DomainError("grid resolution must lie in (0, 0.5]");
  const auto steps = static_cast<std::size_t>(std::llround(1.0 / resolution));
  double best = 0.0;
  double best_value = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k <= steps; ++k) {
    const double y = static_cast<double>(k) / static_cast<double>(steps);
    const double v = expected_loss(loss, posterior, y);
    if (v < best_value) {
      best_value = v;
      best = y;
    }
  }
  return best;
}

double expected_loss(const LossSpec& loss, std::span<const double> true_posterior, const Action& action) {
  if (true_posterior.size() != loss.alphabet_size()) throw DomainError("posterior size does not match loss alphabet");
  loss.validate(action);
  double total = 0.0;
  for (std::size_t x = 0; x < true_posterior.size(); ++x) {
    if (true_posterior[x] == 0.0) continue;
    total += true_posterior[x] * loss.value(static_cast<Symbol>(x), action);
  }
  return total;
}

Strategy Strategy::constant(double action) {
  return Strategy(Kind::kConstant, action, "constant(" + format_number(action) + ")");
}

Strategy Strategy::majority() { return Strategy(Kind::kMajority, 0.0, "majority"); }

Strategy Strategy::laplace() { return Strategy(Kind::kLaplace, 0.0, "laplace"); }

Action Strategy::act(const LossSpec& loss, History history) const {
  const std::size_t n = loss.alphabet_size();
  switch (kind_) {
    case Kind::kConstant: {
      Action a = loss.finite_actions() ? Action{static_cast<std::size_t>(action_)} : Action{action_};
      if (loss.finite_actions() && action_ != std::floor(action_)) {
        throw DomainError("constant strategy: finite action set needs an integral action");
      }
      loss.validate(a);
      return a;
    }
    case Kind::kMajority: {
      std::vector<std::size_t> counts(n, 0);
      for (Symbol s : history) ++counts.at(s);
      const auto winner =
          static_cast<std::size_t>(std::max_element(counts.begin(), counts.end()) - counts.begin());
      Action a = loss.finite_actions() ? Action{winner} : Action{static_cast<double>(winner)};
      loss.validate(a);
      return a;
    }
    case Kind::kLaplace: {
      std::vector<double> estimate(n, 1.0);
      for (Symbol s : history) estimate.at(s) += 1.0;
      const double total = static_cast<double>(history.size() + n);
      for (double& p : estimate) p /= total;
      return bayes_action(loss, estimate);
    }
  }
  throw DomainError("unhandled strategy");
}

}  // namespace bayespred
