#pragma once

#include <memory>
#include <optional>

#include "crgate/controls.hpp"
#include "crgate/model.hpp"
#include "crgate/optimizer.hpp"
#include "crgate/propagation.hpp"

namespace crgate::presets {

/// Device, layout, operators and goal built together.
struct System {
  model::DeviceParams device;
  model::HilbertLayout layout;
  model::HamiltonianSet hams;
  propagation::GoalSpec goal;
};

System make_system(const model::DeviceParams& device, int control_qubit = 1,
                   bool local_phases = false);

/// AWG constraints: coarse pixels, fine propagation step, zero buffers, filter.
struct BandwidthSpec {
  double duration = 70.0;
  double pixel = 1.0;
  double dt_fine = 0.2;
  double buffer = 4.0;
  double sigma = 0.4;

  controls::PixelChannel channel() const;
};

BandwidthSpec single_carrier_spec();  // 70 ns, 0.2-ns fine step
BandwidthSpec two_carrier_spec();     // 27 ns, 0.05-ns fine step

/// A GRAPE problem plus its control map and a seeded initial guess
/// (guess + uniform noise in [-noise, noise], clipped to the bound).
struct GrapeExperiment {
  optimizer::OptimizationProblem problem;
  std::shared_ptr<const controls::ControlMap> map;
  RVec guess;
  double noise = 0.0;

  RVec init(std::uint64_t seed) const;
  optimizer::OptimizationResult run(std::uint64_t seed) const;
  optimizer::SeededRun runner() const;
  /// Fine-grid controls for physical parameters.
  controls::PwcPulse pulse(const RVec& params) const { return map->to_pulse(params); }
};

/// Initial offsets of the cross-resonance guess.
std::array<double, 2> guess_offsets();

/// Default bound for constrained runs: 2 pi 0.4 rad/ns.
double default_bound();

/// Filtered PWC with a single carrier, started from the cross-resonance guess
/// (Gaussian on X2 with a DRAG Y2, f = (0, 2 pi 0.1) unless given); offsets
/// are optimized.
GrapeExperiment single_carrier(const System& sys, const BandwidthSpec& spec,
                               std::optional<double> bound, double noise,
                               const optimizer::StopCriteria& stop,
                               std::array<double, 2> offsets = guess_offsets());

/// Two-carrier filtered ansatz with carriers fixed by the initial f_2; the
/// guess drives x'2 and y'2 like the single-carrier guess.
GrapeExperiment two_carrier(const System& sys, const BandwidthSpec& spec,
                            std::optional<double> bound, double noise,
                            const optimizer::StopCriteria& stop,
                            std::array<double, 2> offsets = guess_offsets());

/// Unconstrained PWC with `slices` equal slices and uniform random
/// amplitudes in [-init_range, init_range].
GrapeExperiment unconstrained(const System& sys, double duration, int slices, double init_range,
                              const optimizer::StopCriteria& stop);

}  // namespace crgate::presets
