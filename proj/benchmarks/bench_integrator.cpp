#include <benchmark/benchmark.h>

#include "spde/integrator.hpp"
#include "spde/problems.hpp"

namespace {

void BM_ExplicitPathOU(benchmark::State& state) {
    const spde::Problem problem =
        spde::make_ou(1, 1.0, 1.0, Eigen::VectorXd::Ones(1), 1.0);
    spde::SolverConfig config;
    config.dt = 1.0 / static_cast<double>(state.range(0));
    config.seed = 3;
    for (auto _ : state) {
        benchmark::DoNotOptimize(spde::solve_path(problem, config));
    }
}

void BM_ImplicitPathPLaplacian(benchmark::State& state) {
    const spde::Grid1D grid{static_cast<int>(state.range(0)), 1.0};
    const spde::NoiseModel noise = spde::NoiseModel::zero(grid.n, 1);
    Eigen::VectorXd u0(grid.n);
    const Eigen::VectorXd x = grid.nodes();
    for (int i = 0; i < grid.n; ++i) {
        u0(i) = std::sin(M_PI * x(i));
    }
    const spde::Problem problem = spde::make_degenerate_plaplacian(
        grid, 3.0, [](double) { return 1.0; }, noise, u0, 1.0);
    spde::SolverConfig config;
    config.scheme = spde::Scheme::implicit_resolvent;
    config.epsilon = 1e-2;
    config.dt = 1e-2;
    for (auto _ : state) {
        benchmark::DoNotOptimize(spde::solve_path(problem, config));
    }
}

void BM_SampleIncrements(benchmark::State& state) {
    const spde::NoiseModel noise = spde::NoiseModel::constant(
        4, Eigen::MatrixXd::Identity(4, 4), Eigen::MatrixXd::Identity(4, 4));
    const spde::Partition grid =
        spde::uniform_partition(1.0, state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(spde::sample_increments(noise, grid, 5));
    }
}

}  // namespace

BENCHMARK(BM_ExplicitPathOU)->Arg(1000);
BENCHMARK(BM_ImplicitPathPLaplacian)->Arg(32);
BENCHMARK(BM_SampleIncrements)->Arg(1024);

BENCHMARK_MAIN();
