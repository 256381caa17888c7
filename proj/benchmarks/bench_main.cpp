#include <benchmark/benchmark.h>

#include <vector>

#include "bayespred/bounds.hpp"
#include "bayespred/engine.hpp"
#include "bayespred/losses.hpp"
#include "bayespred/metrics.hpp"
#include "bayespred/mixture.hpp"

using namespace bayespred;

namespace {

MixtureModel three_bernoulli() {
  return MixtureModel::uniform(
      {SequenceMeasure::bernoulli(0.2), SequenceMeasure::bernoulli(0.5), SequenceMeasure::bernoulli(0.8)});
}

EvaluationProblem problem(const MixtureModel& mix, std::size_t n) {
  EvaluationProblem p;
  p.mixture = &mix;
  p.horizon = n;
  p.losses = {LossSpec::error(), LossSpec::quadratic(), LossSpec::hellinger(), LossSpec::log_loss()};
  return p;
}

// Full binary tree, 2^n - 1 histories.
void BM_ExactEngine(benchmark::State& state) {
  const auto mix = three_bernoulli();
  const auto p = problem(mix, static_cast<std::size_t>(state.range(0)));
  EvaluationOptions o;
  o.workers = static_cast<unsigned>(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(exact_evaluate(p, o));
  state.SetItemsProcessed(state.iterations() * ((std::int64_t{1} << state.range(0)) - 1));
}
BENCHMARK(BM_ExactEngine)->Args({12, 1})->Args({16, 1})->Args({16, 4})->UseRealTime()->Unit(benchmark::kMillisecond);

void BM_MonteCarlo(benchmark::State& state) {
  const auto mix = three_bernoulli();
  const auto p = problem(mix, 12);
  for (auto _ : state) {
    benchmark::DoNotOptimize(monte_carlo_evaluate(p, static_cast<std::size_t>(state.range(0)), 7,
                                                  static_cast<unsigned>(state.range(1))));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_MonteCarlo)->Args({10000, 1})->Args({100000, 4})->UseRealTime()->Unit(benchmark::kMillisecond);

void BM_GridVerify(benchmark::State& state) {
  GridSpec spec;
  spec.a_values = log_spaced(0.1, 10.0, 41);
  spec.yz_points = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(grid_verify_proof_inequalities(spec));
}
BENCHMARK(BM_GridVerify)->Arg(101)->Arg(201)->Unit(benchmark::kMillisecond);

void BM_BayesAction(benchmark::State& state) {
  const std::vector<LossSpec> losses{LossSpec::error(), LossSpec::quadratic(), LossSpec::hellinger(),
                                     LossSpec::alpha(3.0)};
  const auto& loss = losses[static_cast<std::size_t>(state.range(0))];
  std::vector<double> p{0.3, 0.7};
  for (auto _ : state) {
    benchmark::DoNotOptimize(bayes_action(loss, p));
    p[0] = p[0] < 0.9 ? p[0] + 1e-6 : 0.1;
    p[1] = 1.0 - p[0];
  }
}
BENCHMARK(BM_BayesAction)->DenseRange(0, 3);

void BM_InstantDistances(benchmark::State& state) {
  const std::vector<double> mu{0.1, 0.2, 0.3, 0.4};
  const std::vector<double> xi{0.25, 0.25, 0.25, 0.25};
  for (auto _ : state) benchmark::DoNotOptimize(instant_distances(mu, xi));
}
BENCHMARK(BM_InstantDistances);

void BM_MixtureConditionals(benchmark::State& state) {
  const auto mix = three_bernoulli();
  const Sequence history(static_cast<std::size_t>(state.range(0)), 1);
  std::vector<double> out(2);
  for (auto _ : state) {
    mix.conditionals(history, out);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_MixtureConditionals)->Arg(10)->Arg(1000);

}  // namespace

BENCHMARK_MAIN();
