#include <cmath>
#include <memory>
#include <random>

#include <gtest/gtest.h>
#include <unsupported/Eigen/MatrixFunctions>

#include "crgate/errors.hpp"
#include "crgate/model.hpp"
#include "crgate/ode.hpp"
#include "crgate/propagation.hpp"
#include "support.hpp"

using namespace crgate;
using namespace crgate::propagation;
using controls::PwcPulse;

namespace {

Mat reference_expm(const Mat& h, double dt) { return Mat(cplx{0.0, -dt} * h).exp(); }

Mat pauli_x() { return (Mat(2, 2) << 0, 1, 1, 0).finished(); }
Mat pauli_y() { return (Mat(2, 2) << 0, cplx(0, -1), cplx(0, 1), 0).finished(); }
Mat pauli_z() { return (Mat(2, 2) << 1, 0, 0, -1).finished(); }

model::HamiltonianSet qubit_toy(const Mat& drift, std::vector<Mat> controls) {
  model::HamiltonianSet h;
  h.drift = drift;
  h.controls = std::move(controls);
  for (int k = 0; k < h.n_controls(); ++k) h.names.push_back("c" + std::to_string(k));
  h.number_ops = {Mat::Zero(2, 2), Mat::Zero(2, 2)};
  return h;
}

GoalSpec full_goal(const Mat& target) { return GoalSpec{target, Mat::Identity(target.rows(), target.rows())}; }

PwcPulse random_pulse(double duration, int slices, int controls, double scale, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-scale, scale);
  PwcPulse p = PwcPulse::uniform(duration, slices, controls);
  for (Eigen::Index i = 0; i < p.amplitudes.size(); ++i) p.amplitudes.data()[i] = u(rng);
  return p;
}

struct Device {
  model::DeviceParams params;
  model::HilbertLayout layout{params.levels};
  model::HamiltonianSet hams = model::build_hamiltonians(params, layout);
  GoalSpec goal = GoalSpec::from(model::make_target(layout));
};

}  // namespace

TEST(ExpmSlice, ZeroHamiltonianIsIdentity) {
  const auto s = expm_slice(Mat::Zero(5, 5), 0.7);
  EXPECT_LE(test::max_abs(s.U - Mat::Identity(5, 5)), 1e-15);
}

TEST(ExpmSlice, RabiPiPulse) {
  const double omega = 2.0;
  const auto s = expm_slice(0.5 * omega * pauli_x(), M_PI / omega);
  EXPECT_LE(test::max_abs(s.U - cplx(0, -1) * pauli_x()), 1e-12);
}

TEST(ExpmSlice, DiagonalHamiltonian) {
  const RVec e = (RVec(3) << -1.0, 0.5, 2.0).finished();
  const auto s = expm_slice(Mat(e.cast<cplx>().asDiagonal()), 0.3);
  for (int i = 0; i < 3; ++i) {
    EXPECT_NEAR(std::abs(s.U(i, i) - std::exp(cplx(0, -0.3 * e[i]))), 0.0, 1e-14);
  }
}

TEST(ExpmSlice, MatchesPadeReference) {
  std::mt19937_64 rng(1);
  for (int n : {2, 9, 27}) {
    const Mat h = test::random_hermitian(n, rng, 2.0);
    const auto s = expm_slice(h, 0.13);
    EXPECT_LE(test::max_abs(s.U - reference_expm(h, 0.13)), 1e-10) << n;
    EXPECT_LE(unitarity_error(s.U), 1e-12);
  }
}

TEST(ExpmSlice, RejectsNonHermitian) {
  Mat h = Mat::Zero(2, 2);
  h(0, 1) = 1.0;
  EXPECT_THROW(expm_slice(h, 0.1), NonHermitianError);
}

TEST(ExpmDerivative, MatchesFiniteDifference) {
  std::mt19937_64 rng(2);
  const Mat h = test::random_hermitian(6, rng, 3.0);
  const Mat x = test::random_hermitian(6, rng);
  const double dt = 0.4, eps = 1e-6;
  const Mat fd = (reference_expm(h + eps * x, dt) - reference_expm(h - eps * x, dt)) / (2 * eps);
  EXPECT_LE(test::max_abs(expm_derivative(expm_slice(h, dt), x) - fd), 1e-8);
}

TEST(ExpmDerivative, DegenerateSpectrum) {
  // H = 0: exp(-i c X dt) has derivative -i dt X at c = 0.
  const Mat x = pauli_x();
  const Mat d = expm_derivative(expm_slice(Mat::Zero(2, 2), 0.5), x);
  EXPECT_LE(test::max_abs(d - cplx(0, -0.5) * x), 1e-15);
}

TEST(PwcPropagate, ZeroControlsIsDriftExponential) {
  Device dev;
  const auto prop = pwc_propagate(dev.hams, PwcPulse::uniform(3.0, 7, 4), false);
  EXPECT_LE(test::max_abs(prop.U - reference_expm(dev.hams.drift, 3.0)), 1e-10);
}

TEST(PwcPropagate, IsUnitaryAndComposes) {
  Device dev;
  const PwcPulse p = random_pulse(4.0, 40, 4, 1.0, 3);
  const Mat u = pwc_propagate(dev.hams, p, false).U;
  EXPECT_LE(unitarity_error(u), 1e-12);
  PwcPulse first = PwcPulse::uniform(2.0, 20, 4), second = first;
  first.amplitudes = p.amplitudes.topRows(20);
  second.amplitudes = p.amplitudes.bottomRows(20);
  const Mat composed = pwc_propagate(dev.hams, second, false).U * pwc_propagate(dev.hams, first, false).U;
  EXPECT_LE(test::max_abs(u - composed), 1e-12);
}

TEST(PwcPropagate, ToyGradientMatchesFiniteDifference) {
  const auto hams = qubit_toy(0.3 * pauli_z(), {0.5 * pauli_x(), 0.5 * pauli_y()});
  const GoalSpec goal = full_goal(pauli_x());
  const PwcPulse p = random_pulse(2.0, 8, 2, 1.5, 4);
  const auto value = infidelity(pwc_propagate(hams, p, true), goal);
  auto g = [&](const RVec& x) {
    PwcPulse q = p;
    q.amplitudes = Eigen::Map<const RMat>(x.data(), 8, 2);
    return infidelity(pwc_propagate(hams, q, false), goal).infidelity;
  };
  const RVec x0 = Eigen::Map<const RVec>(p.amplitudes.data(), 16);
  for (int i = 0; i < 16; ++i) {
    EXPECT_TRUE(test::close_rel(value.gradient[i], test::central_difference(g, x0, i, 1e-6), 1e-7, 1e-9)) << i;
  }
}

TEST(PwcPropagate, DegenerateDriftGradient) {
  const auto hams = qubit_toy(Mat::Zero(2, 2), {0.5 * pauli_x(), 0.5 * pauli_z()});
  const GoalSpec goal = full_goal(pauli_y());
  PwcPulse p = PwcPulse::uniform(1.0, 4, 2);
  p.amplitudes(1, 0) = 0.8;  // other slices zero: H = 0 there
  const auto value = infidelity(pwc_propagate(hams, p, true), goal);
  auto g = [&](const RVec& x) {
    PwcPulse q = p;
    q.amplitudes = Eigen::Map<const RMat>(x.data(), 4, 2);
    return infidelity(pwc_propagate(hams, q, false), goal).infidelity;
  };
  const RVec x0 = Eigen::Map<const RVec>(p.amplitudes.data(), 8);
  for (int i = 0; i < 8; ++i) {
    EXPECT_TRUE(test::close_rel(value.gradient[i], test::central_difference(g, x0, i, 1e-6), 1e-6, 1e-9)) << i;
  }
}

TEST(GrapeEvaluate, AgreesWithMaterializedGradients) {
  Device dev;
  const PwcPulse p = random_pulse(2.0, 10, 4, 1.0, 5);
  const auto slow = infidelity(pwc_propagate(dev.hams, p, true), dev.goal);
  const auto fast = grape_evaluate(dev.hams, p, dev.goal);
  EXPECT_NEAR(fast.infidelity, slow.infidelity, 1e-12);
  const RVec flat = Eigen::Map<const RVec>(fast.gradient.data(), fast.gradient.size());
  EXPECT_LE((flat - slow.gradient).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(GrapeEvaluate, GradientMatchesFiniteDifferenceOnDevice) {
  Device dev;
  const PwcPulse p = random_pulse(3.0, 30, 4, 1.5, 6);
  const auto ev = grape_evaluate(dev.hams, p, dev.goal);
  auto g = [&](const RVec& x) {
    PwcPulse q = p;
    q.amplitudes = Eigen::Map<const RMat>(x.data(), 30, 4);
    return grape_evaluate(dev.hams, q, dev.goal, GradientMode::Exact, false).infidelity;
  };
  const RVec x0 = Eigen::Map<const RVec>(p.amplitudes.data(), 120);
  const RVec grad = Eigen::Map<const RVec>(ev.gradient.data(), 120);
  for (int i = 0; i < 120; i += 7) {
    EXPECT_TRUE(test::close_rel(grad[i], test::central_difference(g, x0, i, 1e-6), 1e-5, 1e-8)) << i;
  }
}

TEST(GrapeEvaluate, FirstOrderApproximatesExactForShortSlices) {
  Device dev;
  const PwcPulse p = random_pulse(0.2, 200, 4, 1.0, 7);
  const auto exact = grape_evaluate(dev.hams, p, dev.goal, GradientMode::Exact);
  const auto approx = grape_evaluate(dev.hams, p, dev.goal, GradientMode::FirstOrder);
  EXPECT_LT((exact.gradient - approx.gradient).norm() / exact.gradient.norm(), 1e-2);
}

TEST(Goat, ZeroAmplitudeIsDriftExponential) {
  Device dev;
  const controls::FourierAnsatz f({{{0, 1, 0}}, {{0, 1, 0}}, {{0, 1, 0}}, {{0, 1, 0}}}, 2.0, 3.0);
  const auto prop = goat_propagate(dev.hams, f, {1e-11, 1e-13});
  EXPECT_LE(test::max_abs(prop.U - reference_expm(dev.hams.drift, 3.0)), 1e-8);
  for (int k = 0; k < 4; ++k) {
    EXPECT_EQ(test::max_abs(prop.grads[3 * k + 1]), 0.0);  // omega
    EXPECT_EQ(test::max_abs(prop.grads[3 * k + 2]), 0.0);  // phase
  }
}

TEST(Goat, ToyGradientMatchesFiniteDifference) {
  const auto hams = qubit_toy(0.4 * pauli_z(), {0.5 * pauli_x(), 0.5 * pauli_y()});
  controls::FourierAnsatz f({{{1.1, 0.7, 0.3}, {-0.4, 2.1, 1.0}}, {{0.6, 1.5, -0.2}}}, 2.0, 4.0);
  const ode::Tolerances tol{1e-12, 1e-14};
  const auto prop = goat_propagate(hams, f, tol);
  const RVec p0 = f.params();
  for (int p = 0; p < f.n_params(); ++p) {
    const double h = 1e-5;
    RVec xp = p0, xm = p0;
    xp[p] += h;
    xm[p] -= h;
    auto fp = f, fm = f;
    fp.set_params(xp);
    fm.set_params(xm);
    const Mat fd = (goat_propagate(hams, fp, tol).U - goat_propagate(hams, fm, tol).U) / (2 * h);
    EXPECT_LE(test::max_abs(prop.grads[p] - fd), 1e-6) << p;
  }
}

TEST(Goat, UnusedParameterHasZeroGradient) {
  const auto hams = qubit_toy(0.4 * pauli_z(), {0.5 * pauli_x(), Mat::Zero(2, 2)});
  const controls::FourierAnsatz f({{{1.0, 0.7, 0.3}}, {{0.9, 1.5, 0.1}}}, 2.0, 3.0);
  const auto prop = goat_propagate(hams, f);
  for (int p = 3; p < 6; ++p) EXPECT_EQ(test::max_abs(prop.grads[p]), 0.0);
  EXPECT_GT(test::max_abs(prop.grads[0]), 0.0);
}

TEST(Goat, StaircaseAgreesWithPwcRoute) {
  Device dev;
  const PwcPulse p = random_pulse(2.0, 8, 4, 1.0, 9);
  const controls::StaircaseControls s(p);
  const auto goat = goat_propagate(dev.hams, s, {1e-11, 1e-13});
  const auto pwc = pwc_propagate(dev.hams, p, true);
  EXPECT_LE(test::max_abs(goat.U - pwc.U), 1e-7);
  for (int i = 0; i < 32; i += 5) EXPECT_LE(test::max_abs(goat.grads[i] - pwc.grads[i]), 1e-7) << i;
}

TEST(Goat, InitialColumnsPropagateSubspace) {
  Device dev;
  const controls::FourierAnsatz f({{{0.5, 1, 0}}, {{0.2, 2, 1}}, {{0.9, 0.3, 0}}, {{0, 1, 0}}}, 2.0, 2.0);
  const ode::Tolerances tol{1e-11, 1e-13};
  const auto full = goat_propagate(dev.hams, f, tol);
  const auto cols = goat_propagate(dev.hams, f, tol, &dev.goal.projector);
  EXPECT_EQ(cols.U.cols(), 4);
  EXPECT_LE(test::max_abs(full.U * dev.goal.projector - cols.U), 1e-8);
  const auto a = infidelity(full, dev.goal), b = infidelity(cols, dev.goal);
  EXPECT_NEAR(a.infidelity, b.infidelity, 1e-8);
  EXPECT_LE((a.gradient - b.gradient).cwiseAbs().maxCoeff(), 1e-7);
}

TEST(Infidelity, PerfectGateAndGlobalPhase) {
  const Mat g = model::cnot(1);
  const GoalSpec goal = full_goal(g);
  EXPECT_NEAR(infidelity(Propagator{g, {}, 1.0}, goal).infidelity, 0.0, 1e-15);
  EXPECT_NEAR(infidelity(Propagator{std::exp(cplx(0, 1.234)) * g, {}, 1.0}, goal).infidelity, 0.0, 1e-15);
}

TEST(Infidelity, RandomUnitaryMatchesTraceFormula) {
  std::mt19937_64 rng(10);
  const Mat u = expm_slice(test::random_hermitian(4, rng), 1.0).U;
  const Mat g = model::cnot(2);
  const double expected = 1.0 - std::abs((g.adjoint() * u).trace()) / 4.0;
  EXPECT_NEAR(infidelity(Propagator{u, {}, 1.0}, full_goal(g)).infidelity, expected, 1e-12);
}

TEST(Infidelity, VanishingOverlapFlagsNullGradient) {
  // Rotations about x never overlap with Z.
  const auto hams = qubit_toy(Mat::Zero(2, 2), {0.5 * pauli_x()});
  PwcPulse p = PwcPulse::uniform(1.0, 2, 1);
  const auto v = infidelity(pwc_propagate(hams, p, true), full_goal(pauli_z()));
  EXPECT_TRUE(v.null_gradient);
  EXPECT_EQ(v.gradient.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_NEAR(v.infidelity, 1.0, 1e-15);
  EXPECT_TRUE(grape_evaluate(hams, p, full_goal(pauli_z())).null_gradient);
}

TEST(Infidelity, LocalPhasesAreFactoredOut) {
  const Mat g = model::cnot(1);
  Mat m = g;
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) m(r, c) *= std::exp(cplx(0, 0.4 * (r >> 1) - 1.1 * (r & 1) + 0.7 * (c & 1)));
  GoalSpec goal = full_goal(g);
  EXPECT_GT(infidelity(Propagator{m, {}, 1.0}, goal).infidelity, 1e-2);
  goal.local_phases = true;
  EXPECT_NEAR(infidelity(Propagator{m, {}, 1.0}, goal).infidelity, 0.0, 1e-10);
}

TEST(Ode, ExponentialDecay) {
  RVec y = RVec::Ones(1);
  ode::Options o;
  o.tol = {1e-11, 1e-14};
  ode::integrate([](double, const RVec& x, RVec& dx) { dx = -x; }, y, 0.0, 3.0, o);
  EXPECT_NEAR(y[0], std::exp(-3.0), 1e-10);
}

TEST(Ode, HarmonicOscillatorConservesPhase) {
  RVec y = (RVec(2) << 1.0, 0.0).finished();
  ode::Options o;
  o.tol = {1e-11, 1e-14};
  ode::integrate([](double, const RVec& x, RVec& dx) { dx = (RVec(2) << x[1], -x[0]).finished(); }, y,
                 0.0, 10.0, o);
  EXPECT_NEAR(y[0], std::cos(10.0), 1e-9);
  EXPECT_NEAR(y[1], -std::sin(10.0), 1e-9);
}

TEST(Ode, BlowUpReportsFailureTime) {
  RVec y = RVec::Ones(1);
  try {
    ode::integrate([](double, const RVec& x, RVec& dx) { dx = x.cwiseProduct(x); }, y, 0.0, 2.0,
                   ode::Options{});
    FAIL() << "expected IntegrationError";
  } catch (const IntegrationError& e) {
    EXPECT_NEAR(e.t_fail(), 1.0, 1e-3);
  }
}
