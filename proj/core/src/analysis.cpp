#include "crgate/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>

#include <unsupported/Eigen/FFT>

#include "crgate/errors.hpp"

namespace crgate::analysis {

SweepRecord summarize(double duration, const std::vector<optimizer::OptimizationResult>& runs) {
  SweepRecord rec;
  rec.duration = duration;
  rec.restarts = static_cast<int>(runs.size());
  const optimizer::OptimizationResult* best = nullptr;
  for (const auto& r : runs) {
    if (r.error) {
      ++rec.status_counts["error"];
      continue;
    }
    ++rec.status_counts[optim::to_string(r.status)];
    rec.infidelities.push_back(r.infidelity);
    if (!best || r.infidelity < best->infidelity) best = &r;
  }
  if (rec.infidelities.empty()) return rec;
  rec.best_run = *best;

  std::vector<double> v = rec.infidelities;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  rec.best = v.front();
  rec.max = v.back();
  rec.median = n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
  rec.mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double logs = 0.0;
  for (double x : v) logs += std::log10(std::max(x, 1e-300));
  rec.log_mean = std::pow(10.0, logs / n);
  return rec;
}

std::vector<SweepRecord> qsl_sweep(const std::vector<double>& durations, const RunFactory& factory,
                                   const optimizer::MultistartOptions& opts) {
  std::vector<SweepRecord> out;
  for (double t : durations) {
    if (!(t > 0.0)) throw DomainError("sweep durations must be positive");
    std::vector<optimizer::OptimizationResult> runs;
    try {
      runs = optimizer::multistart(factory(t), opts).runs;
    } catch (const std::exception& e) {
      optimizer::OptimizationResult failed;
      failed.error = e.what();
      runs.push_back(failed);
    }
    out.push_back(summarize(t, runs));
  }
  return out;
}

std::vector<MiscalibrationPoint> miscalibration_sweep(
    const model::HamiltonianSet& hams, const controls::PwcPulse& pulse,
    const propagation::GoalSpec& goal, const std::vector<std::array<double, 2>>& grid) {
  std::vector<MiscalibrationPoint> out;
  out.reserve(grid.size());
  for (const auto& eps : grid) {
    const auto shifted = hams.with_offsets({hams.offsets[0] + eps[0], hams.offsets[1] + eps[1]});
    const auto ev = propagation::grape_evaluate(shifted, pulse, goal,
                                                propagation::GradientMode::Exact, false);
    out.push_back({eps[0], eps[1], ev.infidelity});
  }
  return out;
}

LeakageReport leakage_probe(model::DeviceParams device, const model::Levels& levels,
                            const controls::PwcPulse& pulse, const Mat& target,
                            const ode::Tolerances& tol) {
  device.levels = levels;
  const model::HilbertLayout layout(levels);
  const auto hams = model::build_hamiltonians(device, layout);
  const Mat p = model::computational_projector(layout);
  const int n = layout.dim();

  std::vector<std::array<int, 3>> occ(n);
  for (int i = 0; i < n; ++i) occ[i] = layout.occupation(i);

  LeakageReport rep;
  rep.resonator_max.assign(levels.resonator, 0.0);
  rep.transmon_max.assign(std::max(levels.transmon1, levels.transmon2), 0.0);
  RVec r_pop(levels.resonator), t1_pop(levels.transmon1), t2_pop(levels.transmon2);
  auto observe = [&](double, const Mat& psi) {
    ++rep.samples;
    for (int c = 0; c < psi.cols(); ++c) {
      r_pop.setZero();
      t1_pop.setZero();
      t2_pop.setZero();
      for (int i = 0; i < n; ++i) {
        const double w = std::norm(psi(i, c));
        t1_pop[occ[i][0]] += w;
        t2_pop[occ[i][1]] += w;
        r_pop[occ[i][2]] += w;
      }
      rep.normalization_error = std::max(rep.normalization_error, std::abs(r_pop.sum() - 1.0));
      for (int l = 0; l < levels.resonator; ++l) {
        rep.resonator_max[l] = std::max(rep.resonator_max[l], r_pop[l]);
      }
      for (int l = 0; l < levels.transmon1; ++l) {
        rep.transmon_max[l] = std::max(rep.transmon_max[l], t1_pop[l]);
      }
      for (int l = 0; l < levels.transmon2; ++l) {
        rep.transmon_max[l] = std::max(rep.transmon_max[l], t2_pop[l]);
      }
    }
  };
  const Mat final_states = propagation::evolve_states(hams, pulse, p, tol, observe);
  const Mat m = p.adjoint() * final_states;
  rep.infidelity = 1.0 - std::abs((target.adjoint() * m).trace()) / target.rows();
  return rep;
}

Spectrum pulse_spectrum(const controls::PwcPulse& pulse, int pad) {
  if (pulse.n_slices() < 2) throw DomainError("spectrum needs at least two samples");
  if (!pulse.is_uniform()) throw DomainError("spectrum needs a uniform time grid");
  if (pad < 4) throw DomainError("zero padding must be at least 4x");
  const int n = pulse.n_slices();
  const int len = n * pad;
  const double dt = pulse.durations.front();
  const double df = 1.0 / (len * dt);
  const int half = len / 2;

  Spectrum s;
  s.freq_ghz.resize(half + 1);
  for (int k = 0; k <= half; ++k) s.freq_ghz[k] = k * df;
  s.magnitude.resize(half + 1, pulse.n_controls());

  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> in(len), out;
  for (int c = 0; c < pulse.n_controls(); ++c) {
    std::fill(in.begin(), in.end(), std::complex<double>{});
    double energy_t = 0.0;
    for (int j = 0; j < n; ++j) {
      in[j] = pulse.amplitudes(j, c);
      energy_t += pulse.amplitudes(j, c) * pulse.amplitudes(j, c) * dt;
    }
    fft.fwd(out, in);
    double energy_f = 0.0;
    for (const auto& x : out) energy_f += std::norm(x * dt) * df;
    for (int k = 0; k <= half; ++k) {
      const double scale = (k == 0 || (len % 2 == 0 && k == half)) ? 1.0 : 2.0;
      s.magnitude(k, c) = scale * std::abs(out[k]) / n;
    }
    s.time_energy.push_back(energy_t);
    s.freq_energy.push_back(energy_f);
  }
  return s;
}

}  // namespace crgate::analysis
