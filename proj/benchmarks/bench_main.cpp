#include <benchmark/benchmark.h>

#include "memheat/kernel.hpp"
#include "memheat/solver.hpp"
#include "memheat/special_functions.hpp"

namespace {

using namespace memheat;

void BM_MittagLeffler(benchmark::State& state) {
    const double alpha = 0.5;
    double x = -0.1;
    for (auto _ : state) {
        benchmark::DoNotOptimize(special::mittag_leffler({alpha, alpha}, x));
        x = x < -200.0 ? -0.1 : x * 1.07;
    }
}
BENCHMARK(BM_MittagLeffler);

void BM_BuildProfile(benchmark::State& state) {
    const FractionalParams params{1, 0.5, Rational{1, static_cast<std::int64_t>(state.range(0))}};
    for (auto _ : state) benchmark::DoNotOptimize(build_profile(params, {}, 1e-6, 1));
}
BENCHMARK(BM_BuildProfile)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);

void BM_MildSolution(benchmark::State& state) {
    static const ProfileTable profile = build_profile(FractionalParams{1, 0.5, Rational{1, 2}}, {}, 1e-6, 1);
    const Solver solver(profile, Forcing{1.0, 1.0, 1.0});
    double r = 0.3;
    for (auto _ : state) {
        benchmark::DoNotOptimize(solver.mild_solution(r, 100.0));
        r = r > 50.0 ? 0.3 : r * 1.3;
    }
}
BENCHMARK(BM_MildSolution)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
