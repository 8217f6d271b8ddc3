// Serial reference against the OpenMP path for the three parallel units:
// chains within a fit, replicate fits within a study, observations in WAIC.

#include <random>

#include <benchmark/benchmark.h>

#include "arealmix/diagnostics.hpp"
#include "arealmix/graph.hpp"
#include "arealmix/models.hpp"
#include "arealmix/rng.hpp"
#include "arealmix/sampler.hpp"
#include "arealmix/simgen.hpp"

namespace {

using namespace arealmix;

Model lattice_model(ModelKind kind) {
  const AdjacencyGraph g = lattice_graph(10, 10);
  Rng rng = make_stream(7);
  std::uniform_real_distribution<double> offset(50.0, 500.0);
  Eigen::VectorXd e(g.size());
  std::vector<int> y(static_cast<std::size_t>(g.size()));
  for (int i = 0; i < g.size(); ++i) {
    e[i] = std::round(offset(rng));
    y[static_cast<std::size_t>(i)] = std::poisson_distribution<int>(0.9 * e[i])(rng);
  }
  return Model(default_model_spec(kind), make_observed_data(g, y, e));
}

Execution policy(const benchmark::State& state) { return state.range(0) ? Execution::parallel : Execution::serial; }

void BM_Chains(benchmark::State& state) {
  const Model model = lattice_model(ModelKind::bym2_gamma);
  SamplerConfig cfg;
  cfg.chains = 4;
  cfg.iterations = 1000;
  cfg.warmup = 500;
  cfg.thin = 1;
  cfg.execution = policy(state);
  for (auto _ : state) benchmark::DoNotOptimize(hmc_run(model, cfg));
}
BENCHMARK(BM_Chains)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMillisecond)->UseRealTime();

void BM_StudyReplicates(benchmark::State& state) {
  StudyConfig cfg = default_study_config(Protocol::no_outliers);
  cfg.replicates = 4;
  cfg.models = {ModelKind::bym2_gamma};
  cfg.sampler.iterations = 600;
  cfg.sampler.warmup = 300;
  cfg.sampler.thin = 1;
  for (auto _ : state) benchmark::DoNotOptimize(run_study(cfg, policy(state)));
}
BENCHMARK(BM_StudyReplicates)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMillisecond)->UseRealTime();

void BM_Waic(benchmark::State& state) {
  Rng rng = make_stream(11);
  std::normal_distribution<double> normal(-3.0, 0.5);
  Eigen::MatrixXd ll(4000, 160);
  for (Eigen::Index j = 0; j < ll.cols(); ++j)
    for (Eigen::Index i = 0; i < ll.rows(); ++i) ll(i, j) = normal(rng);
  for (auto _ : state) benchmark::DoNotOptimize(waic(ll, policy(state)));
}
BENCHMARK(BM_Waic)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMicrosecond)->UseRealTime();

}  // namespace

BENCHMARK_MAIN();
