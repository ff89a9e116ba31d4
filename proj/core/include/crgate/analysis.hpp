#pragma once

#include <array>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "crgate/controls.hpp"
#include "crgate/model.hpp"
#include "crgate/ode.hpp"
#include "crgate/optimizer.hpp"
#include "crgate/propagation.hpp"

namespace crgate::analysis {

/// Restart statistics of one sweep point. Failed restarts are counted but do
/// not enter the infidelity statistics.
struct SweepRecord {
  double duration = 0.0;
  std::vector<double> infidelities;  // successful restarts, seed order
  double mean = 0.0;
  double log_mean = 0.0;  // 10^(mean of log10 infidelity)
  double median = 0.0;
  double best = 0.0;
  double max = 0.0;
  std::map<std::string, int> status_counts;  // includes "error"
  int restarts = 0;
  optimizer::OptimizationResult best_run;
};

SweepRecord summarize(double duration, const std::vector<optimizer::OptimizationResult>& runs);

/// Builds the seeded optimization for one duration.
using RunFactory = std::function<optimizer::SeededRun(double duration)>;

/// Multistart optimization at every duration.
std::vector<SweepRecord> qsl_sweep(const std::vector<double>& durations, const RunFactory& factory,
                                   const optimizer::MultistartOptions& opts);

struct MiscalibrationPoint {
  double eps1 = 0.0;  // rad/ns
  double eps2 = 0.0;
  double infidelity = 1.0;
};

/// Evaluates the fixed pulse with offsets f_k + eps_k (no reoptimization).
std::vector<MiscalibrationPoint> miscalibration_sweep(
    const model::HamiltonianSet& hams, const controls::PwcPulse& pulse,
    const propagation::GoalSpec& goal, const std::vector<std::array<double, 2>>& grid);

/// Per-level maxima over time, computational input states and (for the
/// transmons) both transmons. Index i holds level i + 1 in 1-based labels, so
/// index 2 is the "third level".
struct LeakageReport {
  std::vector<double> resonator_max;
  std::vector<double> transmon_max;
  /// Largest |sum of populations - 1| seen at any recorded time.
  double normalization_error = 0.0;
  /// Gate infidelity of the enlarged-space propagation on the computational subspace.
  double infidelity = 1.0;
  long samples = 0;
};

/// Propagates the four computational states under `pulse` on a layout with
/// `levels` (typically 6, 6, 6) using the device parameters and offsets.
LeakageReport leakage_probe(model::DeviceParams device, const model::Levels& levels,
                            const controls::PwcPulse& pulse, const Mat& target,
                            const ode::Tolerances& tol = {1e-11, 1e-14});

struct Spectrum {
  std::vector<double> freq_ghz;  // one-sided, 0 .. Nyquist
  RMat magnitude;                // rows: frequencies, columns: controls
  /// Parseval sides per control: sum |x|^2 dt and sum |X|^2 df over the full
  /// two-sided, dt-scaled transform.
  std::vector<double> time_energy;
  std::vector<double> freq_energy;
};

/// DFT magnitude of each control on a uniform grid, zero-padded to `pad`
/// times the length. Normalized so a unit sampled cosine on a frequency bin
/// peaks at 1. Throws DomainError for non-uniform slices.
Spectrum pulse_spectrum(const controls::PwcPulse& pulse, int pad = 8);

}  // namespace crgate::analysis
