// Microbenchmarks for the hot paths: attention retrieval, one sampler step,
// the PCA fit, and the mutual-information matrix.

#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "hopgen/alphabet.hpp"
#include "hopgen/embed.hpp"
#include "hopgen/energy.hpp"
#include "hopgen/metrics.hpp"
#include "hopgen/rng.hpp"
#include "hopgen/sampler.hpp"

using namespace hopgen;

namespace {

Eigen::MatrixXd random_memory(int d, int K, std::uint64_t seed) {
    RandomStream rng(seed, 0);
    Eigen::MatrixXd M(d, K);
    for (int k = 0; k < K; ++k) M.col(k) = rng.unit_sphere(d);
    return M;
}

std::vector<std::string> random_rows(int K, int L, std::uint64_t seed) {
    RandomStream rng(seed, 1);
    std::vector<std::string> rows;
    rows.reserve(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k) {
        std::string row(static_cast<std::size_t>(L), 'A');
        for (int j = 0; j < L; ++j)
            row[static_cast<std::size_t>(j)] =
                kAlphabet[rng.uniform_int(kNumResidues)];
        rows.push_back(row);
    }
    return rows;
}

void bm_attention(benchmark::State& state) {
    const int d = static_cast<int>(state.range(0));
    const int K = static_cast<int>(state.range(1));
    const auto M = random_memory(d, K, 7);
    RandomStream rng(7, 2);
    const Eigen::VectorXd xi = rng.unit_sphere(d);
    for (auto _ : state) {
        auto r = energy::attention(M, 8.0, xi);
        benchmark::DoNotOptimize(r.retrieved);
    }
}
BENCHMARK(bm_attention)->Args({60, 70})->Args({186, 420});

void bm_energy(benchmark::State& state) {
    const int d = static_cast<int>(state.range(0));
    const int K = static_cast<int>(state.range(1));
    const auto M = random_memory(d, K, 7);
    RandomStream rng(7, 2);
    const Eigen::VectorXd xi = rng.unit_sphere(d);
    for (auto _ : state) {
        double e = energy::energy_value(M, 8.0, xi);
        benchmark::DoNotOptimize(e);
    }
}
BENCHMARK(bm_energy)->Args({60, 70})->Args({186, 420});

void bm_ula_step(benchmark::State& state) {
    const int d = static_cast<int>(state.range(0));
    const int K = static_cast<int>(state.range(1));
    const auto M = random_memory(d, K, 7);
    RandomStream rng(7, 3);
    Eigen::VectorXd xi = rng.unit_sphere(d);
    for (auto _ : state) {
        xi = sampler::ula_step(M, 8.0, 0.01, xi, rng.normal_vector(d));
        benchmark::DoNotOptimize(xi);
    }
}
BENCHMARK(bm_ula_step)->Args({60, 70})->Args({186, 420});

void bm_mala_step(benchmark::State& state) {
    const int d = static_cast<int>(state.range(0));
    const int K = static_cast<int>(state.range(1));
    const auto M = random_memory(d, K, 7);
    RandomStream rng(7, 4);
    Eigen::VectorXd xi = rng.unit_sphere(d);
    for (auto _ : state) {
        auto step = sampler::mala_step(M, 8.0, 0.01, xi, rng);
        xi = step.next;
        benchmark::DoNotOptimize(xi);
    }
}
BENCHMARK(bm_mala_step)->Args({60, 70})->Args({186, 420});

void bm_fit_pca(benchmark::State& state) {
    const int K = static_cast<int>(state.range(0));
    const int L = static_cast<int>(state.range(1));
    const auto rows = random_rows(K, L, 11);
    const auto X = embed::one_hot_encode(rows);
    for (auto _ : state) {
        auto pca = embed::fit_pca(X, 0.95, static_cast<std::size_t>(L));
        benchmark::DoNotOptimize(pca.basis);
    }
}
BENCHMARK(bm_fit_pca)->Args({70, 70})->Args({150, 100});

void bm_mi_matrix(benchmark::State& state) {
    const int K = static_cast<int>(state.range(0));
    const int L = static_cast<int>(state.range(1));
    const auto rows = random_rows(K, L, 13);
    for (auto _ : state) {
        auto mi = metrics::mi_matrix(rows);
        benchmark::DoNotOptimize(mi);
    }
}
BENCHMARK(bm_mi_matrix)->Args({70, 70})->Args({150, 100});

} // namespace

BENCHMARK_MAIN();
