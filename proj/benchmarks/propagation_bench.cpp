#include <random>

#include <benchmark/benchmark.h>

#include "crgate/model.hpp"
#include "crgate/open_system.hpp"
#include "crgate/propagation.hpp"

using namespace crgate;

namespace {

struct Device {
  model::DeviceParams params;
  model::HilbertLayout layout{params.levels};
  model::HamiltonianSet hams = model::build_hamiltonians(params, layout);
  propagation::GoalSpec goal = propagation::GoalSpec::from(model::make_target(layout));
};

controls::PwcPulse random_pulse(double duration, int slices, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  auto p = controls::PwcPulse::uniform(duration, slices, 4);
  for (Eigen::Index i = 0; i < p.amplitudes.size(); ++i) p.amplitudes.data()[i] = u(rng);
  return p;
}

void BM_ExpmSlice(benchmark::State& state) {
  const Device dev;
  Mat h = dev.hams.drift;
  for (const auto& c : dev.hams.controls) h += 0.5 * c;
  for (auto _ : state) benchmark::DoNotOptimize(propagation::expm_slice(h, 0.05));
}
BENCHMARK(BM_ExpmSlice);

// One GRAPE objective and gradient evaluation; the argument is the slice count.
void BM_GrapeEvaluate(benchmark::State& state) {
  const Device dev;
  const auto slices = static_cast<int>(state.range(0));
  const auto pulse = random_pulse(0.05 * slices, slices, 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(propagation::grape_evaluate(dev.hams, pulse, dev.goal));
  }
  state.SetItemsProcessed(state.iterations() * slices);
}
BENCHMARK(BM_GrapeEvaluate)->Arg(100)->Arg(540)->Unit(benchmark::kMillisecond);

// GOAT propagation of the computational columns with one Fourier component per control.
void BM_GoatPropagate(benchmark::State& state) {
  const Device dev;
  const controls::FourierAnsatz f({{{0.5, 1.0, 0.0}}, {{0.2, 2.0, 1.0}}, {{0.9, 0.3, 0.0}}, {{0.1, 1.5, 0.5}}},
                                  2.0, static_cast<double>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(propagation::goat_propagate(dev.hams, f, {}, &dev.goal.projector));
  }
}
BENCHMARK(BM_GoatPropagate)->Arg(5)->Arg(20)->Unit(benchmark::kMillisecond);

// Average gate fidelity under T1 = T2 = 100 us; the argument is the pulse length in ns.
void BM_AvgGateFidelity(benchmark::State& state) {
  const Device dev;
  const double t = static_cast<double>(state.range(0));
  const auto pulse = random_pulse(t, static_cast<int>(t / 0.05), 2);
  const auto chans = open_system::channels(dev.layout, open_system::DissipationSpec::equal(1e5));
  for (auto _ : state) {
    benchmark::DoNotOptimize(open_system::avg_gate_fidelity(dev.hams, pulse, dev.goal, chans));
  }
}
BENCHMARK(BM_AvgGateFidelity)->Arg(1)->Unit(benchmark::kSecond)->Iterations(1);

}  // namespace
BENCHMARK_MAIN();
