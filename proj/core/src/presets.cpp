#include "crgate/presets.hpp"

#include <algorithm>
#include <random>

#include "crgate/errors.hpp"

namespace crgate::presets {

System make_system(const model::DeviceParams& device, int control_qubit, bool local_phases) {
  model::HilbertLayout layout(device.levels);
  auto hams = model::build_hamiltonians(device, layout);
  auto goal = propagation::GoalSpec::from(
      model::make_target(layout, model::GateKind::Cnot, control_qubit), local_phases);
  return {device, std::move(layout), std::move(hams), std::move(goal)};
}

controls::PixelChannel BandwidthSpec::channel() const {
  return controls::PixelChannel(duration, pixel, dt_fine, buffer, buffer, sigma);
}

BandwidthSpec single_carrier_spec() { return {70.0, 1.0, 0.2, 4.0, 0.4}; }
BandwidthSpec two_carrier_spec() { return {27.0, 1.0, 0.05, 4.0, 0.4}; }

double default_bound() { return ghz_to_angular(0.4); }

std::array<double, 2> guess_offsets() { return {0.0, ghz_to_angular(0.1)}; }

RVec GrapeExperiment::init(std::uint64_t seed) const {
  RVec x = guess;
  if (noise > 0.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-noise, noise);
    for (auto& v : x) v += dist(rng);
  }
  if (problem.bound) x = x.cwiseMax(-*problem.bound).cwiseMin(*problem.bound);
  return x;
}

optimizer::OptimizationResult GrapeExperiment::run(std::uint64_t seed) const {
  return optimizer::grape_optimize(problem, *map, init(seed), seed);
}

optimizer::SeededRun GrapeExperiment::runner() const {
  return [exp = *this](std::uint64_t seed) { return exp.run(seed); };
}

namespace {

/// Cross-resonance guess at pixel centres, written into the blocks of the
/// X2 and Y2 envelopes of a control-major parameter vector.
void write_guess(const controls::PixelChannel& ch, double duration, double delta2, int x2_block,
                 int y2_block, RVec& params) {
  const int np = ch.n_pixels();
  for (int i = 0; i < np; ++i) {
    const double t = ch.pixel_center(i);
    params[x2_block * np + i] = controls::cr_guess_x2(t, duration);
    params[y2_block * np + i] = controls::cr_guess_y2(t, duration, delta2);
  }
}

optimizer::OptimizationProblem constrained_problem(const System& sys, double duration,
                                                   std::optional<double> bound,
                                                   const optimizer::StopCriteria& stop,
                                                   std::array<double, 2> offsets) {
  optimizer::OptimizationProblem p;
  p.hams = sys.hams.with_offsets(offsets);
  p.goal = sys.goal;
  p.duration = duration;
  p.bound = bound;
  p.optimize_offsets = true;
  p.stop = stop;
  return p;
}

}  // namespace

GrapeExperiment single_carrier(const System& sys, const BandwidthSpec& spec,
                               std::optional<double> bound, double noise,
                               const optimizer::StopCriteria& stop,
                               std::array<double, 2> offsets) {
  GrapeExperiment e;
  e.problem = constrained_problem(sys, spec.duration, bound, stop, offsets);
  auto map = std::make_shared<controls::FilteredPwcMap>(spec.channel(), 4);
  e.guess = RVec::Zero(map->n_params());
  write_guess(map->channel(), spec.duration, sys.device.delta_q[1], 2, 3, e.guess);
  e.map = map;
  e.noise = noise;
  return e;
}

GrapeExperiment two_carrier(const System& sys, const BandwidthSpec& spec,
                            std::optional<double> bound, double noise,
                            const optimizer::StopCriteria& stop,
                            std::array<double, 2> offsets) {
  GrapeExperiment e;
  e.problem = constrained_problem(sys, spec.duration, bound, stop, offsets);
  model::DeviceParams shifted = sys.device;
  shifted.f = offsets;
  auto map = std::make_shared<controls::TwoCarrierMap>(spec.channel(),
                                                       controls::two_carrier_frequencies(shifted));
  e.guess = RVec::Zero(map->n_params());
  // Envelope order x'1 x''1 y'1 y''1 x'2 x''2 y'2 y''2: blocks 4 and 6.
  write_guess(map->channel(), spec.duration, sys.device.delta_q[1], 4, 6, e.guess);
  e.map = map;
  e.noise = noise;
  return e;
}

GrapeExperiment unconstrained(const System& sys, double duration, int slices, double init_range,
                              const optimizer::StopCriteria& stop) {
  GrapeExperiment e;
  e.problem.hams = sys.hams;
  e.problem.goal = sys.goal;
  e.problem.duration = duration;
  e.problem.stop = stop;
  e.map = std::make_shared<controls::DirectMap>(duration, slices, 4);
  e.guess = RVec::Zero(e.map->n_params());
  e.noise = init_range;
  return e;
}

}  // namespace crgate::presets
