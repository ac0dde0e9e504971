#include <benchmark/benchmark.h>

#include "cvkerr/decomposition.hpp"
#include "cvkerr/teleport.hpp"

using namespace cvkerr;

static void BM_QuadratureOperators(benchmark::State& state) {
    for (auto _ : state) benchmark::DoNotOptimize(quadrature_operators(int(state.range(0))));
}
BENCHMARK(BM_QuadratureOperators)->Arg(60)->Arg(120);

static void BM_KerrTarget(benchmark::State& state) {
    for (auto _ : state) benchmark::DoNotOptimize(kerr_target_unitary(1e-3, int(state.range(0))));
}
BENCHMARK(BM_KerrTarget)->Arg(60);

static void BM_CompileThirdOrder(benchmark::State& state) {
    GateSequence seq = third_order(1e-3);
    for (auto _ : state) benchmark::DoNotOptimize(compile_sequence(seq, int(state.range(0))));
}
BENCHMARK(BM_CompileThirdOrder)->Arg(60);

static void BM_FourierGate(benchmark::State& state) {
    GridSpec g = GridSpec::self_dual_grid(int(state.range(0)));
    GridState psi = fock_to_position(FockState::coherent(1.0, 40), g);
    for (auto _ : state) benchmark::DoNotOptimize(fourier_gate(psi, FourierDirection::forward));
}
BENCHMARK(BM_FourierGate)->Arg(1024)->Arg(4096);

static void BM_ApplySequenceGrid(benchmark::State& state) {
    GridSpec g = GridSpec::self_dual_grid(1024);
    GridState psi = fock_to_position(FockState::coherent(1.0, 40), g);
    GateSequence seq = third_order(1e-3);
    for (auto _ : state) benchmark::DoNotOptimize(apply_sequence(seq, psi));
}
BENCHMARK(BM_ApplySequenceGrid);

static void BM_TeleportStep(benchmark::State& state) {
    GridSpec g = GridSpec::self_dual_grid(1024);
    GridState psi = fock_to_position(FockState::coherent(1.0, 40), g);
    AncillaSpec spec;
    spec.kind = AncillaKind::ideal;
    spec.t3 = 1e-3;
    GridState anc = make_ancilla(spec, g);
    for (auto _ : state) benchmark::DoNotOptimize(teleport_step(psi, anc, 0.1));
}
BENCHMARK(BM_TeleportStep);

static void BM_StrongKerrRepetition(benchmark::State& state) {
    int dim = 60;
    FockOperator u = compile_sequence(third_order(1e-3), dim);
    FockState psi = FockState::coherent(1.0, dim);
    for (auto _ : state) {
        psi = apply(u, psi);
        benchmark::ClobberMemory();
    }
}
BENCHMARK(BM_StrongKerrRepetition);

BENCHMARK_MAIN();
