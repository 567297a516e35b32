#include <benchmark/benchmark.h>

#include "nvsense/compensation.hpp"
#include "nvsense/dynamics.hpp"
#include "nvsense/protocols.hpp"
#include "nvsense/readout.hpp"

using namespace nvsense;

namespace {

const PhysicalConstants kConstants{};
const EnsembleParams kParams = EnsembleParams::homogeneous({0.02, 0.01, 1e6, 1e6});

void run_populations(benchmark::State& state, EvolutionMode mode, bool echo) {
  const double t = 2.5e-7;
  const auto seq = echo ? PulseSequence::echo(t) : PulseSequence::ramsey(t);
  const auto drive = echo ? FieldDrive::ac(Vec3(1e-6, -5e-7, 2e-7), 23.3e6) : FieldDrive::dc(Vec3(1e-6, -5e-7, 2e-7));
  for (auto _ : state) {
    benchmark::DoNotOptimize(run_sequence(seq, drive, AxisId(2), kParams, kConstants, mode));
  }
}

void BM_RamseyClosedForm(benchmark::State& s) { run_populations(s, EvolutionMode::closed_form, false); }
void BM_RamseyOde(benchmark::State& s) { run_populations(s, EvolutionMode::ode_oracle, false); }
void BM_EchoClosedForm(benchmark::State& s) { run_populations(s, EvolutionMode::closed_form, true); }
void BM_EchoOde(benchmark::State& s) { run_populations(s, EvolutionMode::ode_oracle, true); }

void BM_SampleSummary(benchmark::State& state) {
  const auto conv = state.range(1) != 0;
  const auto plan = ProtocolPlan::optimal(conv ? ProtocolKind::conv_dc : ProtocolKind::mf_dc, Component::x, kParams);
  const auto layout = shot_layout(plan, Vec3(3e-8, -2e-8, 1e-8), kParams, kConstants);
  const auto n = static_cast<std::size_t>(state.range(0));
  std::uint64_t seed = 1;
  for (auto _ : state) benchmark::DoNotOptimize(sample_summary(seed++, layout, n, 1));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_SampleShots(benchmark::State& state) {
  const auto plan = ProtocolPlan::optimal(ProtocolKind::mf_dc, Component::x, kParams);
  const auto layout = shot_layout(plan, Vec3::Zero(), kParams, kConstants);
  const auto n = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(sample_shots(3, layout, n, plan.kind));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_SolveSchedule(benchmark::State& state) {
  const auto draws = draw_inhomogeneous(6, static_cast<std::size_t>(state.range(0)), {});
  const auto mode = state.range(1) ? CompensationMode::ac : CompensationMode::dc;
  for (auto _ : state) benchmark::DoNotOptimize(solve_schedule(draws, mode));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_OptimizeTheta(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(optimize_theta());
}

}  // namespace

BENCHMARK(BM_RamseyClosedForm);
BENCHMARK(BM_RamseyOde);
BENCHMARK(BM_EchoClosedForm);
BENCHMARK(BM_EchoOde);
BENCHMARK(BM_SampleSummary)->Args({1 << 20, 0})->Args({1 << 20, 1});
BENCHMARK(BM_SampleShots)->Arg(1 << 20);
BENCHMARK(BM_SolveSchedule)->Args({200, 0})->Args({200, 1});
BENCHMARK(BM_OptimizeTheta);

BENCHMARK_MAIN();
