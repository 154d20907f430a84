#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "trackjam/control.hpp"
#include "trackjam/filter.hpp"
#include "trackjam/poisson_binomial.hpp"

using namespace trackjam;

static void BM_PoissonBinomialAtLeast(benchmark::State& state) {
    std::mt19937_64 gen(1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> p(static_cast<std::size_t>(state.range(0)));
    for (double& x : p) {
        x = u(gen);
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(objective_at_least_n(p, p.size() / 2));
    }
}
BENCHMARK(BM_PoissonBinomialAtLeast)->Arg(3)->Arg(12)->Arg(64);

static void BM_GraspSolveToy(benchmark::State& state) {
    Rng instance_rng(5);
    const ControlProblem prob = random_toy_problem(ToyProblemParams{}, instance_rng);
    const auto samples = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) {
        Rng rng(7);
        benchmark::DoNotOptimize(grasp_solve(prob, samples, 100, rng));
    }
}
BENCHMARK(BM_GraspSolveToy)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

static void BM_FilterPredictUpdate(benchmark::State& state) {
    FilterParams p;
    p.n_particles = static_cast<std::size_t>(state.range(0));
    Rng rng(3);
    GaussianEstimate prior;
    prior.mean << 20, 20, 20, 1, 1, 1;
    const BernoulliBelief start = make_belief(0.9, prior, p.n_particles, rng);
    const Vec3 agent(10, 10, 10);
    const SensingCone cone = p.sensing.cone(agent, aim_axis(agent, Vec3(20, 20, 20)));
    const std::vector<Measurement> scan{measure(Vec3(20.5, 19.5, 20.2), agent)};
    for (auto _ : state) {
        BernoulliBelief b = predict(start, p, rng);
        benchmark::DoNotOptimize(update(b, scan, agent, PowerLevel::dbw(0.5), cone, p, rng));
    }
}
BENCHMARK(BM_FilterPredictUpdate)->Arg(1000)->Arg(5000)->Unit(benchmark::kMicrosecond);
BENCHMARK_MAIN();
