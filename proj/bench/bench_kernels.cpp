// Serial references against the OpenMP kernels. Set OMP_NUM_THREADS to compare.

#include <benchmark/benchmark.h>

#include "tempcal/datasets.hpp"
#include "tempcal/harness.hpp"
#include "tempcal/linreg_unknown.hpp"

using namespace tempcal;

namespace {

struct Fixture {
    Dataset data = gen_linreg(200, 10, draw_theta_star(10, 1), 2.0, 1).data;
    KnownVarModel model{2.0, GaussianPrior::isotropic(10)};
    NigModel nig{NigPrior::standard(10)};
};

const Fixture& fixture() {
    static const Fixture f;
    return f;
}

template <bool Serial>
void covariance_gradient(benchmark::State& state) {
    const auto& f = fixture();
    const auto sampler = gaussian_sampler(fit(f.model, f.data, 200.0));
    const auto risk = squared_error_draw_risk(2.0, RegressionStats::of(f.data));
    const Index mc = state.range(0);
    for (auto _ : state)
        benchmark::DoNotOptimize(Serial ? reference::covariance_gradient_mc_se(sampler, risk, risk, mc, 3)
                                        : covariance_gradient_mc_se(sampler, risk, risk, mc, 3));
}

template <bool Serial>
void bootstrap_psi(benchmark::State& state) {
    const auto& f = fixture();
    const Index boot = state.range(0);
    for (auto _ : state)
        benchmark::DoNotOptimize(Serial ? reference::bootstrap_gradient_psi(f.model, f.data, 200.0, boot, 5)
                                        : bootstrap_gradient_psi(f.model, f.data, 200.0, boot, 5));
}

template <bool Serial>
void safebayes_known(benchmark::State& state) {
    const auto& f = fixture();
    for (auto _ : state)
        benchmark::DoNotOptimize(Serial ? reference::safebayes_peprl(f.model, f.data, 150.0)
                                        : safebayes_peprl(f.model, f.data, 150.0));
}

template <bool Serial>
void safebayes_nig(benchmark::State& state) {
    const auto& f = fixture();
    for (auto _ : state)
        benchmark::DoNotOptimize(Serial ? reference::safebayes_peprl_nig(f.nig, f.data, 150.0)
                                        : safebayes_peprl_nig(f.nig, f.data, 150.0));
}

template <bool Serial>
void experiment(benchmark::State& state) {
    const auto cfg = parse_experiment_config(R"({
      "model": "linreg_known", "dataset": {"setting": "linreg", "n": 30, "d": 10, "sigma2": 4},
      "repetitions": 4, "grid_points": 10, "strategy_cfg": {"boot": 50, "sgd": {"max_iters": 30}}})");
    for (auto _ : state) benchmark::DoNotOptimize(Serial ? reference::run_experiment(cfg) : run_experiment(cfg));
}

}  // namespace

BENCHMARK(covariance_gradient<true>)->Name("covariance_gradient/serial")->Arg(20000)->Unit(benchmark::kMillisecond);
BENCHMARK(covariance_gradient<false>)->Name("covariance_gradient/omp")->Arg(20000)->Unit(benchmark::kMillisecond);
BENCHMARK(bootstrap_psi<true>)->Name("bootstrap_psi/serial")->Arg(500)->Unit(benchmark::kMillisecond);
BENCHMARK(bootstrap_psi<false>)->Name("bootstrap_psi/omp")->Arg(500)->Unit(benchmark::kMillisecond);
BENCHMARK(safebayes_known<true>)->Name("safebayes_peprl/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(safebayes_known<false>)->Name("safebayes_peprl/omp")->Unit(benchmark::kMillisecond);
BENCHMARK(safebayes_nig<true>)->Name("safebayes_peprl_nig/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(safebayes_nig<false>)->Name("safebayes_peprl_nig/omp")->Unit(benchmark::kMillisecond);
BENCHMARK(experiment<true>)->Name("run_experiment/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(experiment<false>)->Name("run_experiment/omp")->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
