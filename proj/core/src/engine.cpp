#include "bayespred/engine.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <memory>
#include <mutex>
#include <thread>

#include "bayespred/errors.hpp"
#include "bayespred/log_prob.hpp"
#include "bayespred/random.hpp"

namespace bayespred {

namespace {

constexpr std::size_t kDistanceSeries = 6;
constexpr std::size_t kMonteCarloChunk = 256;

void validate_problem(const EvaluationProblem& problem) {
  if (problem.mixture == nullptr) throw DomainError("evaluation: mixture not set");
  const MixtureModel& mix = *problem.mixture;
  if (problem.true_index >= mix.size()) throw DomainError("evaluation: true component index out of range");
  if (problem.horizon == 0) throw DomainError("evaluation: horizon must be at least 1");
  if (problem.horizon > mix.max_length()) throw DomainError("evaluation: horizon exceeds a component's table horizon");
  for (const auto& loss : problem.losses) {
    if (loss.alphabet_size() != mix.alphabet_size()) {
      throw DomainError("evaluation: loss '" + loss.name() + "' expects alphabet size " +
                        std::to_string(loss.alphabet_size()) + ", mixture has " +
                        std::to_string(mix.alphabet_size()));
    }
  }
}

// Everything computed at one history x_{<t}.
struct NodeState {
  std::vector<std::vector<double>> component_log_cond;  // log nu(x | h)
  std::vector<double> log_mu;                           // log mu(x | h)
  std::vector<double> log_xi;                           // log xi(x | h)
  std::vector<double> mu;
  std::vector<double> xi;
  double log_xi_history = 0.0;  // log xi(h)
  StepDistances distances;
  std::vector<double> loss_xi;
  std::vector<double> loss_mu;
  std::vector<double> values;  // one entry per series slot
};

class NodeEvaluator {
 public:
  explicit NodeEvaluator(const EvaluationProblem& problem)
      : problem_(problem),
        mix_(*problem.mixture),
        alphabet_size_(mix_.alphabet_size()),
        per_loss_(4 + problem.strategies.size()) {}

  std::size_t series_count() const { return kDistanceSeries + problem_.losses.size() * per_loss_; }
  std::size_t loss_base(std::size_t l) const { return kDistanceSeries + l * per_loss_; }

  NodeState make_state() const {
    NodeState s;
    s.component_log_cond.assign(mix_.size(), std::vector<double>(alphabet_size_));
    s.log_mu.resize(alphabet_size_);
    s.log_xi.resize(alphabet_size_);
    s.mu.resize(alphabet_size_);
    s.xi.resize(alphabet_size_);
    s.loss_xi.resize(problem_.losses.size());
    s.loss_mu.resize(problem_.losses.size());
    s.values.resize(series_count());
    return s;
  }

  // component_log holds log nu(history) per component.
  void evaluate(History history, std::span<const double> component_log, NodeState& s) const {
    const std::size_t k = mix_.size();
    std::vector<double> joint(k);
    for (std::size_t i = 0; i < k; ++i) {
      joint[i] = is_log_zero(component_log[i]) ? kLogZero : mix_.log_weights()[i] + component_log[i];
      if (is_log_zero(joint[i])) {
        std::fill(s.component_log_cond[i].begin(), s.component_log_cond[i].end(), kLogZero);
      } else {
        mix_.component(i).log_conditionals(history, s.component_log_cond[i]);
      }
    }
    s.log_xi_history = log_sum_exp(joint);
    std::vector<double> terms(k);
    for (std::size_t x = 0; x < alphabet_size_; ++x) {
      for (std::size_t i = 0; i < k; ++i) {
        terms[i] = is_log_zero(joint[i]) ? kLogZero : joint[i] + s.component_log_cond[i][x];
      }
      s.log_xi[x] = log_sum_exp(terms) - s.log_xi_history;
      s.log_mu[x] = s.component_log_cond[problem_.true_index][x];
      s.xi[x] = std::exp(s.log_xi[x]);
      s.mu[x] = std::exp(s.log_mu[x]);
    }
    s.distances = instant_distances(s.mu, s.xi);
    s.values[0] = s.distances.absolute;
    s.values[1] = s.distances.square;
    s.values[2] = s.distances.hellinger;
    s.values[3] = s.distances.kl;
    s.values[4] = s.distances.abs_log;
    s.values[5] = s.distances.ratio;
    for (std::size_t l = 0; l < problem_.losses.size(); ++l) {
      const LossSpec& loss = problem_.losses[l];
      const double l_xi = expected_loss(loss, s.mu, bayes_action(loss, s.xi));
      const double l_mu = expected_loss(loss, s.mu, bayes_action(loss, s.mu));
      s.loss_xi[l] = l_xi;
      s.loss_mu[l] = l_mu;
      const std::size_t base = loss_base(l);
      s.values[base] = l_xi;
      s.values[base + 1] = l_mu;
      s.values[base + 2] = l_xi - l_mu;
      s.values[base + 3] = (l_xi - l_mu) * (l_xi - l_mu);
      for (std::size_t j = 0; j < problem_.strategies.size(); ++j) {
        s.values[base + 4 + j] = expected_loss(loss, s.mu, problem_.strategies[j].act(loss, history));
      }
    }
  }

 private:
  const EvaluationProblem& problem_;
  const MixtureModel& mix_;
  std::size_t alphabet_size_;
  std::size_t per_loss_;
};

// Per-time-slot compensated accumulators plus the direct KL term.
struct Accumulators {
  Accumulators(std::size_t horizon, std::size_t series)
      : slots(horizon, std::vector<CompensatedSum>(series)) {}
  void merge(const Accumulators& other) {
    for (std::size_t t = 0; t < slots.size(); ++t) {
      for (std::size_t k = 0; k < slots[t].size(); ++k) slots[t][k].merge(other.slots[t][k]);
    }
    kl_direct.merge(other.kl_direct);
  }
  std::vector<std::vector<CompensatedSum>> slots;
  CompensatedSum kl_direct;
};

class ExactWalker {
 public:
  ExactWalker(const EvaluationProblem& problem, const NodeEvaluator& evaluator, const EvaluationOptions& options,
              std::atomic<std::uint64_t>& visits)
      : problem_(problem),
        evaluator_(evaluator),
        options_(options),
        visits_(visits),
        acc_(problem.horizon, evaluator.series_count()) {}

  // Processes the node at `prefix` and, when `descend`, its whole subtree.
  void walk(const Sequence& prefix, bool descend) {
    const MixtureModel& mix = *problem_.mixture;
    const std::size_t n = problem_.horizon;
    const std::size_t start = prefix.size();
    levels_.assign(n, evaluator_.make_state());
    component_log_.assign(n, std::vector<double>(mix.size()));
    next_.assign(n, 0);
    history_ = prefix;
    for (std::size_t i = 0; i < mix.size(); ++i) component_log_[start][i] = mix.component(i).log_marginal(prefix);
    if (is_log_zero(component_log_[start][problem_.true_index])) return;
    process(start);
    if (!descend) return;
    std::size_t depth = start;
    while (true) {
      const NodeState& node = levels_[depth];
      std::size_t x = next_[depth];
      if (depth + 1 < n) {
        while (x < node.mu.size() && node.mu[x] == 0.0) ++x;
      } else {
        x = node.mu.size();
      }
      if (x < node.mu.size()) {
        next_[depth] = x + 1;
        history_.push_back(static_cast<Symbol>(x));
        for (std::size_t i = 0; i < mix.size(); ++i) {
          component_log_[depth + 1][i] = component_log_[depth][i] + node.component_log_cond[i][x];
        }
        ++depth;
        next_[depth] = 0;
        process(depth);
      } else {
        if (depth == start) break;
        history_.pop_back();
        --depth;
      }
    }
  }

  const Accumulators& accumulators() const { return acc_; }
  std::vector<HistoryRecord>& records() { return records_; }

 private:
  void process(std::size_t depth) {
    if (visits_.fetch_add(1) + 1 > options_.work_budget) {
      throw ResourceError("exact evaluation exceeded the work budget of " + std::to_string(options_.work_budget) +
                          " node visits; raise work_budget or use the monte-carlo engine (100000 samples gives "
                          "standard errors near 0.3% of the series spread)");
    }
    NodeState& node = levels_[depth];
    const std::vector<double>& comp = component_log_[depth];
    evaluator_.evaluate(history_, comp, node);
    const double log_weight = comp[problem_.true_index];
    const double weight = std::exp(log_weight);
    auto& slot = acc_.slots[depth];
    for (std::size_t k = 0; k < node.values.size(); ++k) slot[k].add(weight * node.values[k]);
    if (depth + 1 == problem_.horizon) {
      for (std::size_t x = 0; x < node.mu.size(); ++x) {
        if (node.mu[x] == 0.0) continue;
        const double log_mu_path = log_weight + node.log_mu[x];
        const double log_xi_path = node.log_xi_history + node.log_xi[x];
        acc_.kl_direct.add(std::exp(log_mu_path) * (log_mu_path - log_xi_path));
      }
    }
    if (options_.keep_records) {
      if (++record_count_ > options_.record_budget) {
        throw ResourceError("per-history records exceeded the record budget of " +
                            std::to_string(options_.record_budget) +
                            " histories; drop the 'instant' check or shorten the horizon");
      }
      HistoryRecord r;
      r.t = depth + 1;
      r.history = history_;
      r.weight = weight;
      r.mu_posterior = node.mu;
      r.xi_posterior = node.xi;
      r.distances = node.distances;
      r.loss_xi = node.loss_xi;
      r.loss_mu = node.loss_mu;
      records_.push_back(std::move(r));
    }
  }

  const EvaluationProblem& problem_;
  const NodeEvaluator& evaluator_;
  const EvaluationOptions& options_;
  std::atomic<std::uint64_t>& visits_;
  Accumulators acc_;
  std::vector<NodeState> levels_;
  std::vector<std::vector<double>> component_log_;
  std::vector<std::size_t> next_;
  Sequence history_;
  std::vector<HistoryRecord> records_;
  std::uint64_t record_count_ = 0;
};

// Runs task(i) for i in [0, count) on up to `workers` threads.
template <class Task>
void run_tasks(std::size_t count, unsigned workers, Task task) {
  const std::size_t threads = std::min<std::size_t>(std::max(1u, workers), count);
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (std::size_t w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      try {
        for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) task(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(count);
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

Series make_series(std::vector<double> step) {
  Series s;
  s.cumulative.resize(step.size());
  double running = 0.0;
  for (std::size_t t = 0; t < step.size(); ++t) {
    running += step[t];
    s.cumulative[t] = running;
  }
  s.step = std::move(step);
  return s;
}

// Assigns series slot k to the named report fields.
template <class Fill>
void assemble(TotalsReport& report, const EvaluationProblem& problem, const NodeEvaluator& evaluator, Fill fill) {
  fill(0, report.absolute);
  fill(1, report.square);
  fill(2, report.hellinger);
  fill(3, report.kl);
  fill(4, report.abs_log);
  fill(5, report.ratio);
  report.losses.clear();
  for (std::size_t l = 0; l < problem.losses.size(); ++l) {
    LossTotals totals;
    totals.name = problem.losses[l].name();
    totals.bounded = problem.losses[l].bounded();
    const std::size_t base = evaluator.loss_base(l);
    fill(base, totals.xi);
    fill(base + 1, totals.mu);
    fill(base + 2, totals.gap);
    fill(base + 3, totals.gap_squared);
    for (std::size_t j = 0; j < problem.strategies.size(); ++j) {
      totals.strategy_names.push_back(problem.strategies[j].name());
      totals.strategies.emplace_back();
      fill(base + 4 + j, totals.strategies.back());
    }
    report.losses.push_back(std::move(totals));
  }
}

// Mean and centered second moment (Welford / Chan).
struct Moments {
  explicit Moments(std::size_t size) : mean(size, 0.0), m2(size, 0.0) {}
  void add(std::span<const double> values) {
    ++count;
    const double c = static_cast<double>(count);
    for (std::size_t k = 0; k < values.size(); ++k) {
      const double delta = values[k] - mean[k];
      mean[k] += delta / c;
      m2[k] += delta * (values[k] - mean[k]);
    }
  }
  void merge(const Moments& other) {
    if (other.count == 0) return;
    const double na = static_cast<double>(count);
    const double nb = static_cast<double>(other.count);
    const double total = na + nb;
    for (std::size_t k = 0; k < mean.size(); ++k) {
      const double delta = other.mean[k] - mean[k];
      mean[k] += delta * nb / total;
      m2[k] += other.m2[k] + delta * delta * na * nb / total;
    }
    count += other.count;
  }
  double standard_error(std::size_t k) const {
    if (count < 2) return 0.0;
    const double c = static_cast<double>(count);
    return std::sqrt(std::max(0.0, m2[k]) / (c - 1.0) / c);
  }
  std::size_t count = 0;
  std::vector<double> mean;
  std::vector<double> m2;
};

// Number of mu-positive histories of length < horizon, stopping once it
// exceeds `limit`.
std::uint64_t count_support_nodes(const SequenceMeasure& mu, std::size_t horizon, std::uint64_t limit) {
  const std::size_t n = mu.alphabet_size();
  std::uint64_t full = 0;
  std::uint64_t level = 1;
  for (std::size_t t = 0; t < horizon && full <= limit; ++t) {
    full += level;
    level = level > limit ? limit + 1 : level * n;
  }
  if (full <= limit) return full;

  // Iterative DFS; nodes at depth d are histories of length d < horizon.
  std::uint64_t count = 1;
  if (horizon == 1) return count;
  Sequence history;
  std::vector<std::vector<double>> probs(horizon, std::vector<double>(n));
  std::vector<std::size_t> next(horizon, 0);
  std::size_t depth = 0;
  mu.conditionals(history, probs[0]);
  while (true) {
    if (next[depth] == n) {
      if (depth == 0) break;
      history.pop_back();
      --depth;
      continue;
    }
    const std::size_t x = next[depth]++;
    if (probs[depth][x] == 0.0) continue;
    if (++count > limit) return count;
    if (depth + 2 < horizon) {
      history.push_back(static_cast<Symbol>(x));
      ++depth;
      next[depth] = 0;
      mu.conditionals(history, probs[depth]);
    }
  }
  return count;
}

}  // namespace

TotalsReport exact_evaluate(const EvaluationProblem& problem, const EvaluationOptions& options) {
  validate_problem(problem);
  const MixtureModel& mix = *problem.mixture;
  const NodeEvaluator evaluator(problem);
  const std::uint64_t limit =
      options.keep_records ? std::min(options.work_budget, options.record_budget) : options.work_budget;
  if (count_support_nodes(mix.component(problem.true_index), problem.horizon, limit) > limit) {
    if (limit < options.work_budget) {
      throw ResourceError("per-history records would exceed the record budget of " +
                          std::to_string(options.record_budget) +
                          " histories; drop the 'instant' check or shorten the horizon");
    }
    throw ResourceError("exact evaluation would exceed the work budget of " + std::to_string(options.work_budget) +
                        " node visits; raise work_budget or use the monte-carlo engine");
  }
  std::atomic<std::uint64_t> visits{0};

  ExactWalker root(problem, evaluator, options, visits);
  root.walk({}, false);
  const std::vector<double> mu_first = mix.component(problem.true_index).conditional_distribution({});

  std::vector<Symbol> first_symbols;
  if (problem.horizon > 1) {
    for (std::size_t x = 0; x < mu_first.size(); ++x) {
      if (mu_first[x] > 0.0) first_symbols.push_back(static_cast<Symbol>(x));
    }
  }
  std::vector<std::unique_ptr<ExactWalker>> subtrees;
  for (std::size_t i = 0; i < first_symbols.size(); ++i) {
    subtrees.push_back(std::make_unique<ExactWalker>(problem, evaluator, options, visits));
  }
  run_tasks(first_symbols.size(), options.workers,
            [&](std::size_t i) { subtrees[i]->walk(Sequence{first_symbols[i]}, true); });

  Accumulators total(problem.horizon, evaluator.series_count());
  total.merge(root.accumulators());
  for (const auto& s : subtrees) total.merge(s->accumulators());

  TotalsReport report;
  report.engine = EngineKind::kExact;
  report.horizon = problem.horizon;
  report.true_index = problem.true_index;
  report.log_inverse_weight = mix.log_inverse_weight(problem.true_index);
  report.node_visits = visits.load();
  report.kl_direct = total.kl_direct.value();
  assemble(report, problem, evaluator, [&](std::size_t k, Series& out) {
    std::vector<double> step(problem.horizon);
    for (std::size_t t = 0; t < problem.horizon; ++t) step[t] = total.slots[t][k].value();
    out = make_series(std::move(step));
  });
  if (options.keep_records) {
    report.records = std::move(root.records());
    for (auto& s : subtrees) {
      auto& r = s->records();
      report.records.insert(report.records.end(), std::make_move_iterator(r.begin()), std::make_move_iterator(r.end()));
    }
  }
  return report;
}

TotalsReport monte_carlo_evaluate(const EvaluationProblem& problem, std::size_t samples, std::uint64_t seed,
                                  unsigned workers) {
  validate_problem(problem);
  if (samples < 100) throw DomainError("monte-carlo: at least 100 samples required");
  const MixtureModel& mix = *problem.mixture;
  const NodeEvaluator evaluator(problem);
  const std::size_t n = problem.horizon;
  const std::size_t series = evaluator.series_count();
  // Layout per path: [step values (n*series)] [cumulative (n*series)] [kl_direct]
  const std::size_t width = 2 * n * series + 1;
  const std::size_t chunks = (samples + kMonteCarloChunk - 1) / kMonteCarloChunk;
  std::vector<Moments> chunk_moments(chunks, Moments(width));

  run_tasks(chunks, workers, [&](std::size_t c) {
    Rng rng(derive_seed(seed, c));
    const std::size_t begin = c * kMonteCarloChunk;
    const std::size_t end = std::min(samples, begin + kMonteCarloChunk);
    NodeState node = evaluator.make_state();
    std::vector<double> path_values(width);
    std::vector<double> component_log(mix.size());
    Sequence path;
    path.reserve(n);
    for (std::size_t sample = begin; sample < end; ++sample) {
      path.clear();
      std::fill(component_log.begin(), component_log.end(), 0.0);
      std::vector<double> running(series, 0.0);
      for (std::size_t t = 0; t < n; ++t) {
        evaluator.evaluate(path, component_log, node);
        for (std::size_t k = 0; k < series; ++k) {
          running[k] += node.values[k];
          path_values[t * series + k] = node.values[k];
          path_values[n * series + t * series + k] = running[k];
        }
        const Symbol x = draw_symbol(node.mu, rng.uniform());
        for (std::size_t i = 0; i < mix.size(); ++i) component_log[i] += node.component_log_cond[i][x];
        path.push_back(x);
      }
      std::vector<double> joint(mix.size());
      for (std::size_t i = 0; i < mix.size(); ++i) joint[i] = mix.log_weights()[i] + component_log[i];
      path_values[width - 1] = component_log[problem.true_index] - log_sum_exp(joint);
      chunk_moments[c].add(path_values);
    }
  });

  Moments total(width);
  for (const auto& m : chunk_moments) total.merge(m);

  TotalsReport report;
  report.engine = EngineKind::kMonteCarlo;
  report.horizon = n;
  report.samples = samples;
  report.seed = seed;
  report.true_index = problem.true_index;
  report.log_inverse_weight = mix.log_inverse_weight(problem.true_index);
  report.node_visits = static_cast<std::uint64_t>(samples) * n;
  report.kl_direct = total.mean[width - 1];
  report.kl_direct_se = total.standard_error(width - 1);
  assemble(report, problem, evaluator, [&](std::size_t k, Series& out) {
    out.step.resize(n);
    out.cumulative.resize(n);
    out.step_se.resize(n);
    out.cumulative_se.resize(n);
    for (std::size_t t = 0; t < n; ++t) {
      out.step[t] = total.mean[t * series + k];
      out.step_se[t] = total.standard_error(t * series + k);
      out.cumulative[t] = total.mean[n * series + t * series + k];
      out.cumulative_se[t] = total.standard_error(n * series + t * series + k);
    }
  });
  return report;
}

std::vector<double> ratio_trace(const MixtureModel& mixture, std::size_t true_index, History path,
                                std::optional<Symbol> probe) {
  if (true_index >= mixture.size()) throw DomainError("ratio trace: true component index out of range");
  mixture.alphabet().validate(path);
  if (probe && !mixture.alphabet().contains(*probe)) throw DomainError("ratio trace: probe symbol outside alphabet");
  const std::size_t n_symbols = mixture.alphabet_size();
  const std::size_t k = mixture.size();
  std::vector<double> component_log(k, 0.0);
  std::vector<std::vector<double>> cond(k, std::vector<double>(n_symbols));
  std::vector<double> joint(k);
  std::vector<double> terms(k);
  std::vector<double> ratios;
  ratios.reserve(path.size());
  for (std::size_t t = 0; t < path.size(); ++t) {
    const History history = path.first(t);
    for (std::size_t i = 0; i < k; ++i) {
      joint[i] = mixture.log_weights()[i] + component_log[i];
      if (is_log_zero(joint[i])) {
        std::fill(cond[i].begin(), cond[i].end(), kLogZero);
      } else {
        mixture.component(i).log_conditionals(history, cond[i]);
      }
    }
    const Symbol target = probe.value_or(path[t]);
    const double log_mu = cond[true_index][target];
    if (is_log_zero(log_mu)) {
      throw DomainError("ratio trace: mu assigns probability 0 to symbol " + std::to_string(target) + " at t=" +
                        std::to_string(t + 1));
    }
    for (std::size_t i = 0; i < k; ++i) terms[i] = is_log_zero(joint[i]) ? kLogZero : joint[i] + cond[i][target];
    const double log_xi = log_sum_exp(terms) - log_sum_exp(joint);
    ratios.push_back(std::exp(log_xi - log_mu));
    if (is_log_zero(cond[true_index][path[t]])) {
      throw DomainError("ratio trace: path leaves the mu-support at t=" + std::to_string(t + 1));
    }
    for (std::size_t i = 0; i < k; ++i) component_log[i] += cond[i][path[t]];
  }
  return ratios;
}

double fit_loglog_slope(const std::vector<double>& values, std::size_t first, std::size_t last) {
  if (first < 1 || last > values.size() || last <= first) throw DomainError("slope fit: invalid range");
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  const double count = static_cast<double>(last - first + 1);
  for (std::size_t t = first; t <= last; ++t) {
    const double lx = std::log(static_cast<double>(t));
    const double ly = std::log(values[t - 1]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (count * sxy - sx * sy) / (count * sxx - sx * sx);
}

}  // namespace bayespred
