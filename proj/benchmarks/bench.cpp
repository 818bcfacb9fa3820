#include <benchmark/benchmark.h>

#include <cmath>
#include <random>

#include "crossdiff/dual.hpp"
#include "crossdiff/grid.hpp"
#include "crossdiff/model.hpp"
#include "crossdiff/rothe.hpp"

namespace {

using namespace crossdiff;

Field noise_field(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    Field f(n);
    for (double& v : f)
        v = 2.0 * (static_cast<double>(rng() >> 11) * 0x1.0p-53) - 1.0;
    return f;
}

void bm_laplacian_apply(benchmark::State& state) {
    const Grid grid = build_grid(static_cast<int>(state.range(0)),
                                 static_cast<int>(state.range(1)), 1.0);
    const Field f = noise_field(grid.node_count(), 7);
    for (auto _ : state) {
        Field out = apply_laplacian(grid, f);
        benchmark::DoNotOptimize(out.data());
    }
}
BENCHMARK(bm_laplacian_apply)->Args({1, 1024})->Args({2, 64});

void bm_helmholtz_solve(benchmark::State& state) {
    const Grid grid = build_grid(static_cast<int>(state.range(0)),
                                 static_cast<int>(state.range(1)), 1.0);
    const Field rhs = noise_field(grid.node_count(), 11);
    const Field coeff(grid.node_count(), 1.5);
    const double tau = 1.0 / 64.0;
    for (auto _ : state) {
        Field psi = solve_dual_helmholtz(grid, coeff, tau, rhs);
        benchmark::DoNotOptimize(psi.data());
    }
}
BENCHMARK(bm_helmholtz_solve)->Args({1, 1024})->Args({2, 64});

void bm_rothe_step(benchmark::State& state) {
    const Grid grid = build_grid(1, static_cast<int>(state.range(0)), 1.0);
    const ModelSpec model = builtin_model("bounded_quadratic", {});
    SpeciesState prev(2, Field(grid.node_count(), 0.5));
    for (std::size_t j = 0; j < grid.node_count(); ++j)
        prev[0][j] += 0.1 * std::sin(6.28 * j / grid.node_count());
    const double tau = 1.0 / 64.0;
    for (auto _ : state) {
        StepResult r = rothe_step(grid, model, tau, prev);
        benchmark::DoNotOptimize(r.state.data());
    }
}
BENCHMARK(bm_rothe_step)->Arg(64)->Arg(256);

void bm_dual_solve(benchmark::State& state) {
    const Grid grid = build_grid(1, 128, 1.0);
    const int steps = static_cast<int>(state.range(0));
    std::vector<Field> forcing(steps);
    for (int k = 0; k < steps; ++k)
        forcing[k] = noise_field(grid.node_count(), 100 + k);
    const DualProblem problem =
        make_constant_coefficient_problem(grid, 1.0, 1.0 / steps, forcing);
    for (auto _ : state) {
        DualSolution sol = solve_dual(problem);
        benchmark::DoNotOptimize(sol.psi.data());
    }
}
BENCHMARK(bm_dual_solve)->Arg(16)->Arg(64);

void bm_power_estimate(benchmark::State& state) {
    const Grid grid = build_grid(1, 32, 1.0);
    for (auto _ : state) {
        RegularityEstimate est =
            estimate_K(grid, 1.0, 2.5, 1.0 / 8.0, 8, "power");
        benchmark::DoNotOptimize(est.k_hat);
    }
}
BENCHMARK(bm_power_estimate);

}  // namespace

BENCHMARK_MAIN();
