// Microbenchmarks for the dense kernels and the Monte-Carlo layers.

#include <benchmark/benchmark.h>

#include "singlet/cluster.hpp"
#include "singlet/j_measurement.hpp"
#include "singlet/protocols.hpp"

using namespace singlet;

static void BM_JOutcomeProbabilities(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    Rng rng(1);
    const StateVector psi = random_state_vector(n, rng);
    for (auto _ : state) {
        auto p = j_outcome_probabilities(psi, {0, n - 1});
        benchmark::DoNotOptimize(p);
    }
    state.SetItemsProcessed(state.iterations() * (1LL << n));
}
BENCHMARK(BM_JOutcomeProbabilities)->Arg(12)->Arg(16)->Arg(20);

static void BM_MeasureJ(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    Rng rng(2);
    const StateVector psi = random_state_vector(n, rng);
    for (auto _ : state) {
        JMeasurement m = measure_j(psi, {0, n - 1}, rng);
        benchmark::DoNotOptimize(m.post);
    }
    state.SetItemsProcessed(state.iterations() * (1LL << n));
}
BENCHMARK(BM_MeasureJ)->Arg(12)->Arg(16)->Arg(20);

static void BM_PurifyStep(benchmark::State& state) {
    const DensityMatrix rho = density_from_bloch({0.2, 0.1, 0.4});
    for (auto _ : state) {
        PurifyStepOutcome out = purify_step(rho);
        benchmark::DoNotOptimize(out.post);
    }
}
BENCHMARK(BM_PurifyStep);

static void BM_ProgrammableMeasurementExact(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const StateVector phi = ket("0");
    for (auto _ : state) {
        double p = programmable_error_probability(phi, n);
        benchmark::DoNotOptimize(p);
    }
}
BENCHMARK(BM_ProgrammableMeasurementExact)->Arg(2)->Arg(3)->Arg(4);

static void BM_FuseSampled(benchmark::State& state) {
    Rng rng(3);
    for (auto _ : state) {
        const ClusterState a = ClusterState::ideal(2, {{0, 1}}, {1, 2});
        const ClusterState b = ClusterState::ideal(2, {{0, 1}}, {1, 2});
        FusionOutcome fo = fuse(a, 1, b, 1, rng);
        benchmark::DoNotOptimize(fo.tag);
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_FuseSampled);

static void BM_WalkerTrials(benchmark::State& state) {
    Rng rng(4);
    const GrowthPolicy pol;
    for (auto _ : state) {
        GrowthStats st = grow_abstract(20, 4, pol, rng, 100);
        benchmark::DoNotOptimize(st.success_fraction);
    }
    state.SetItemsProcessed(state.iterations() * 100);
}
BENCHMARK(BM_WalkerTrials);

static void BM_PauliWitness(benchmark::State& state) {
    const ClusterState c = ClusterState::ideal(3, {{0, 1}, {1, 2}}, {2, 2, 2});
    const StateVector ideal = c.ideal_encoded_state();
    const StateVector moved = apply_single_qubit_unitary(
        apply_single_qubit_unitary(ideal, kPauliZ, 0), kPauliX, 3);
    for (auto _ : state) {
        auto w = pauli_equivalent(ideal, moved);
        benchmark::DoNotOptimize(w);
    }
}
BENCHMARK(BM_PauliWitness);

BENCHMARK_MAIN();
