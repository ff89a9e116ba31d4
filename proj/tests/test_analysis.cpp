#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "crgate/analysis.hpp"
#include "crgate/errors.hpp"
#include "support.hpp"

using namespace crgate;
using namespace crgate::analysis;
using controls::PwcPulse;
using optimizer::OptimizationResult;
using optimizer::Status;

namespace {

struct Device {
  model::DeviceParams params;
  model::HilbertLayout layout{params.levels};
  model::HamiltonianSet hams = model::build_hamiltonians(params, layout);
  propagation::GoalSpec goal = propagation::GoalSpec::from(model::make_target(layout));
};

PwcPulse random_pulse(double duration, int slices, double scale, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-scale, scale);
  PwcPulse p = PwcPulse::uniform(duration, slices, 4);
  for (Eigen::Index i = 0; i < p.amplitudes.size(); ++i) p.amplitudes.data()[i] = u(rng);
  return p;
}

OptimizationResult result(double g, Status s) {
  OptimizationResult r;
  r.infidelity = g;
  r.status = s;
  return r;
}

}  // namespace

TEST(Summarize, StatisticsAndCounts) {
  std::vector<OptimizationResult> runs{result(1e-2, Status::MaxIterations), result(1e-4, Status::Converged),
                                       result(1e-3, Status::TargetReached)};
  runs.push_back(OptimizationResult{});
  runs.back().error = "boom";
  const auto rec = summarize(3.0, runs);
  EXPECT_EQ(rec.restarts, 4);
  EXPECT_EQ(rec.infidelities.size(), 3u);
  EXPECT_DOUBLE_EQ(rec.best, 1e-4);
  EXPECT_DOUBLE_EQ(rec.median, 1e-3);
  EXPECT_DOUBLE_EQ(rec.max, 1e-2);
  EXPECT_NEAR(rec.mean, (1e-2 + 1e-4 + 1e-3) / 3, 1e-18);
  EXPECT_NEAR(rec.log_mean, 1e-3, 1e-15);
  EXPECT_EQ(rec.status_counts.at("error"), 1);
  EXPECT_EQ(rec.status_counts.at("converged"), 1);
  EXPECT_EQ(rec.best_run.infidelity, 1e-4);
  EXPECT_LE(rec.best, rec.median);
  EXPECT_LE(rec.median, rec.max);
}

TEST(QslSweep, SingleRestartEqualsOneOptimization) {
  Device dev;
  optimizer::OptimizationProblem p;
  p.hams = dev.hams;
  p.goal = dev.goal;
  p.stop.max_iterations = 5;
  auto factory = [&](double t) -> optimizer::SeededRun {
    return [&, t](std::uint64_t seed) {
      optimizer::OptimizationProblem q = p;
      q.duration = t;
      const controls::DirectMap map(t, 10, 4);
      return optimizer::grape_optimize(q, map, controls::random_init(controls::PwcInitSpec{40, -1, 1}, seed), seed);
    };
  };
  const auto recs = qsl_sweep({2.0, 3.0}, factory, {1, 11, 1, {}});
  ASSERT_EQ(recs.size(), 2u);
  const auto direct = factory(3.0)(11);
  EXPECT_EQ(recs[1].best, direct.infidelity);
  EXPECT_EQ(recs[1].restarts, 1);
  EXPECT_THROW(qsl_sweep({-1.0}, factory, {1, 0, 1, {}}), DomainError);
}

TEST(Miscalibration, ZeroShiftIsBaselineAndDeterministic) {
  Device dev;
  const PwcPulse p = random_pulse(2.0, 20, 1.0, 1);
  const auto hams = dev.hams.with_offsets({0.01, 0.6});
  const double base =
      propagation::grape_evaluate(hams, p, dev.goal, propagation::GradientMode::Exact, false).infidelity;
  const std::vector<std::array<double, 2>> grid{{0.0, 0.0}, {ghz_to_angular(1e-3), 0.0}, {0.0, ghz_to_angular(-2e-3)}};
  const auto a = miscalibration_sweep(hams, p, dev.goal, grid);
  const auto b = miscalibration_sweep(hams, p, dev.goal, grid);
  EXPECT_EQ(a[0].infidelity, base);
  for (std::size_t i = 0; i < grid.size(); ++i) EXPECT_EQ(a[i].infidelity, b[i].infidelity);
  EXPECT_NE(a[1].infidelity, base);
  EXPECT_EQ(a[2].eps2, ghz_to_angular(-2e-3));
}

TEST(Leakage, DecoupledIdleStaysInSubspace) {
  model::DeviceParams dev;
  dev.g = {0.0, 0.0};
  const auto rep = leakage_probe(dev, {6, 6, 6}, PwcPulse::uniform(5.0, 5, 4), Mat::Identity(4, 4));
  ASSERT_EQ(rep.resonator_max.size(), 6u);
  for (int l = 1; l < 6; ++l) EXPECT_LE(rep.resonator_max[l], 1e-10);
  for (int l = 2; l < 6; ++l) EXPECT_LE(rep.transmon_max[l], 1e-10);
  EXPECT_NEAR(rep.resonator_max[0], 1.0, 1e-10);
  EXPECT_GT(rep.samples, 0);
}

TEST(Leakage, NormalizationAndLevelConsistency) {
  const model::DeviceParams dev;
  const PwcPulse p = random_pulse(3.0, 12, 0.3, 2);
  const Mat target = model::cnot(1);
  const auto six = leakage_probe(dev, {6, 6, 6}, p, target);
  const auto three = leakage_probe(dev, {3, 3, 3}, p, target);
  EXPECT_LE(six.normalization_error, 1e-9);
  EXPECT_LE(std::abs(six.infidelity - three.infidelity), 1e-3);
  EXPECT_GT(six.transmon_max[2], 0.0);
  Device small;
  const double closed =
      propagation::grape_evaluate(small.hams, p, small.goal, propagation::GradientMode::Exact, false).infidelity;
  EXPECT_NEAR(three.infidelity, closed, 1e-8);
}

TEST(Spectrum, CosinePeak) {
  const double dt = 0.05, nu = 0.5;
  PwcPulse p = PwcPulse::uniform(10.0, 200, 1);
  const auto mids = p.slice_starts();
  for (int n = 0; n < 200; ++n) p.amplitudes(n, 0) = std::cos(kTwoPi * nu * mids[n]);
  const auto s = pulse_spectrum(p);
  Eigen::Index peak;
  s.magnitude.col(0).maxCoeff(&peak);
  EXPECT_NEAR(s.freq_ghz[peak], nu, 1.0 / (8 * 200 * dt) + 1e-12);
  EXPECT_NEAR(s.magnitude(peak, 0), 1.0, 0.02);
}

TEST(Spectrum, ConstantPeaksAtZero) {
  PwcPulse p = PwcPulse::uniform(10.0, 100, 1);
  p.amplitudes.setConstant(0.7);
  const auto s = pulse_spectrum(p);
  Eigen::Index peak;
  s.magnitude.col(0).maxCoeff(&peak);
  // Padding spreads DC over the main lobe, one unpadded bin (1 / T) wide.
  EXPECT_LT(s.freq_ghz[peak], 1.0 / 10.0);
  EXPECT_NEAR(s.magnitude(0, 0), 0.7, 1e-12);
  EXPECT_LT(s.magnitude(16, 0), 1e-12);  // first zero of the unpadded grid
}

TEST(Spectrum, Parseval) {
  const PwcPulse p = random_pulse(5.0, 100, 1.0, 3);
  const auto s = pulse_spectrum(p, 4);
  for (int c = 0; c < 4; ++c) {
    EXPECT_NEAR(s.freq_energy[c] / s.time_energy[c], 1.0, 1e-6);
  }
}

TEST(Spectrum, RejectsBadInput) {
  PwcPulse p;
  p.durations = {0.1, 0.2, 0.1};
  p.amplitudes = RMat::Zero(3, 1);
  EXPECT_THROW(pulse_spectrum(p), DomainError);
  EXPECT_THROW(pulse_spectrum(PwcPulse::uniform(1.0, 10, 1), 2), DomainError);
}
