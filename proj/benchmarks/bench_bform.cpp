#include <benchmark/benchmark.h>

#include <Eigen/Dense>

#include "spde/bform.hpp"
#include "spde/rng.hpp"

namespace {

Eigen::MatrixXd bench_psd(Eigen::Index dim, std::uint64_t seed) {
    Eigen::MatrixXd m(dim, dim);
    for (Eigen::Index i = 0; i < dim; ++i) {
        for (Eigen::Index j = 0; j < dim; ++j) {
            m(i, j) = spde::counter_normal(seed, static_cast<std::uint64_t>(i),
                                           static_cast<std::uint64_t>(j), 0);
        }
    }
    return m * m.transpose();
}

void BM_GramSchmidt(benchmark::State& state) {
    const auto dim = static_cast<Eigen::Index>(state.range(0));
    const spde::BForm form(bench_psd(dim, 7));
    std::vector<Eigen::VectorXd> candidates;
    for (Eigen::Index k = 0; k < dim; ++k) {
        Eigen::VectorXd v(dim);
        for (Eigen::Index i = 0; i < dim; ++i) {
            v(i) = spde::counter_normal(11, static_cast<std::uint64_t>(k),
                                        static_cast<std::uint64_t>(i), 1);
        }
        candidates.push_back(v);
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(spde::b_gram_schmidt(form, candidates));
    }
}

void BM_Parseval(benchmark::State& state) {
    const auto dim = static_cast<Eigen::Index>(state.range(0));
    const spde::BForm form(bench_psd(dim, 7));
    std::vector<Eigen::VectorXd> candidates;
    for (Eigen::Index k = 0; k < dim; ++k) {
        candidates.push_back(Eigen::VectorXd::Unit(dim, k));
    }
    const auto basis = spde::b_gram_schmidt(form, candidates);
    const Eigen::VectorXd x = Eigen::VectorXd::Ones(dim);
    for (auto _ : state) {
        benchmark::DoNotOptimize(spde::b_parseval(form, basis, x));
    }
}

}  // namespace

BENCHMARK(BM_GramSchmidt)->Arg(16)->Arg(50);
BENCHMARK(BM_Parseval)->Arg(50);
