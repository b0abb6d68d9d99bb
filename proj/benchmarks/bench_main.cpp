#include "condcop/copulas.hpp"
#include "condcop/local_likelihood.hpp"
#include "condcop/simulation.hpp"
#include "condcop/tuning.hpp"

#include <benchmark/benchmark.h>

using namespace condcop;

namespace {

FitConfig
frank(double h, int p)
{
  FitConfig cfg;
  cfg.family = make_family(FamilyId::Frank);
  cfg.link = LinkFunction::scaled_logistic(1.0, 5.0);
  cfg.degree = p;
  cfg.bandwidth = h;
  return cfg;
}

Dataset
m1_data(std::size_t N)
{
  DgpSpec dgp;
  dgp.N = N;
  dgp.seed = 42;
  return generate(dgp);
}

} // namespace

static void
BM_log_density_derivatives(benchmark::State& state)
{
  const auto family = make_family(static_cast<FamilyId>(state.range(0)));
  const double theta = state.range(0) == static_cast<int>(FamilyId::Gaussian) ? 0.4 : 3.0;
  double u = 0.013;
  for (auto _ : state) {
    u = u > 0.98 ? 0.013 : u + 0.0173;
    benchmark::DoNotOptimize(family->log_density_derivatives(u, 1.0 - u * 0.7, theta));
  }
  state.SetLabel(std::string(family->name()));
}
BENCHMARK(BM_log_density_derivatives)
  ->Arg(static_cast<int>(FamilyId::Frank))
  ->Arg(static_cast<int>(FamilyId::Clayton))
  ->Arg(static_cast<int>(FamilyId::Gaussian));

static void
BM_evaluate(benchmark::State& state)
{
  const auto data = m1_data(static_cast<std::size_t>(state.range(0)));
  const LocalLikelihood model(data, frank(0.5, 1));
  Eigen::VectorXd y(1);
  y << 0.3;
  Eigen::VectorXd gamma(2);
  gamma << 1.0, -0.2;
  for (auto _ : state) {
    benchmark::DoNotOptimize(model.evaluate(y, gamma, 2));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_evaluate)->Arg(500)->Arg(2000)->Arg(10000);

static void
BM_fit_point(benchmark::State& state)
{
  const auto data = m1_data(static_cast<std::size_t>(state.range(0)));
  const auto cfg = frank(0.5, static_cast<int>(state.range(1)));
  Eigen::VectorXd y(1);
  y << 0.3;
  for (auto _ : state) {
    benchmark::DoNotOptimize(fit_point(data, cfg, y));
  }
}
BENCHMARK(BM_fit_point)->Args({ 500, 1 })->Args({ 2000, 1 })->Args({ 2000, 2 })->Unit(benchmark::kMicrosecond);

static void
BM_fit_curve(benchmark::State& state)
{
  const auto data = m1_data(2000);
  const auto cfg = frank(0.5, 1);
  const auto grid = linear_grid(-1.8, 1.8, 101);
  CurveOptions opts;
  opts.warm_start = state.range(0) != 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(fit_curve(data, cfg, grid, opts));
  }
}
BENCHMARK(BM_fit_curve)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

static void
BM_cvl(benchmark::State& state)
{
  const auto data = m1_data(static_cast<std::size_t>(state.range(0)));
  const auto cfg = frank(0.7, 1);
  CvOptions opts;
  opts.mode = state.range(1) != 0 ? CvOptions::Mode::KFold : CvOptions::Mode::Exact;
  for (auto _ : state) {
    benchmark::DoNotOptimize(cvl(data, cfg, 0.7, opts));
  }
}
BENCHMARK(BM_cvl)->Args({ 500, 0 })->Args({ 500, 1 })->Args({ 2000, 1 })->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
