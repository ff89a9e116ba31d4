#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <gtest/gtest.h>

#include "crgate/errors.hpp"
#include "crgate/model.hpp"
#include "crgate/open_system.hpp"
#include "crgate/propagation.hpp"
#include "support.hpp"

using namespace crgate;
using namespace crgate::open_system;
using controls::PwcPulse;

namespace {

// Three two-level subsystems with no Hamiltonian at all.
struct Idle {
  model::HilbertLayout layout{model::Levels{2, 2, 2}};
  model::HamiltonianSet hams;
  propagation::GoalSpec goal;
  Idle() {
    hams.drift = Mat::Zero(8, 8);
    hams.controls = {Mat::Zero(8, 8)};
    hams.names = {"zero"};
    hams.number_ops = {Mat::Zero(8, 8), Mat::Zero(8, 8)};
    goal = propagation::GoalSpec{Mat::Identity(4, 4), model::computational_projector(layout)};
  }
};

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

Mat random_density(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0, 1);
  Mat a(n, n);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = cplx(d(rng), d(rng));
  Mat rho = a * a.adjoint();
  return rho / rho.trace();
}

Mat dense_dissipator(const Mat& rho, const Mat& a) {
  const Mat ada = a.adjoint() * a;
  return a * rho * a.adjoint() - 0.5 * (ada * rho + rho * ada);
}

}  // namespace

TEST(Channels, RatesAndNames) {
  const model::HilbertLayout layout(model::Levels{});
  DissipationSpec spec;
  spec.t1 = {10.0, DissipationSpec::kNever};
  spec.t2 = {20.0, 40.0};
  spec.tp = 1e5;
  const auto ch = channels(layout, spec);
  ASSERT_EQ(ch.size(), 4u);
  EXPECT_EQ(ch[0].name, "b1");
  EXPECT_DOUBLE_EQ(ch[0].rate, 0.1);
  EXPECT_EQ(ch[1].name, "sqrt_n1");
  EXPECT_DOUBLE_EQ(ch[1].rate, 0.05);
  EXPECT_EQ(ch[2].name, "sqrt_n2");
  EXPECT_EQ(ch[3].name, "a");
  EXPECT_DOUBLE_EQ(ch[3].rate, 1e-5);
  EXPECT_TRUE(channels(layout, DissipationSpec::none()).empty());
  spec.t1[0] = -1.0;
  EXPECT_THROW(channels(layout, spec), DomainError);
}

TEST(LindbladRhs, MatchesDenseFormula) {
  Device dev;
  const auto ch = channels(dev.layout, DissipationSpec::equal(3.0, 7.0));
  const Mat rho = random_density(27, 1);
  Mat expected = cplx(0, -1) * (dev.hams.drift * rho - rho * dev.hams.drift);
  for (const auto& c : ch) expected += c.rate * dense_dissipator(rho, Mat(c.op));
  EXPECT_LE(test::max_abs(lindblad_rhs(rho, dev.hams.drift, ch) - expected), 1e-12);
  const Mat closed = lindblad_rhs(rho, dev.hams.drift, {});
  EXPECT_LE(test::max_abs(closed - cplx(0, -1) * (dev.hams.drift * rho - rho * dev.hams.drift)), 1e-12);
}

TEST(PropagateDensity, AmplitudeDamping) {
  Idle idle;
  DissipationSpec spec = DissipationSpec::none();
  spec.t1 = {50.0, DissipationSpec::kNever};
  Mat rho = Mat::Zero(8, 8);
  const int excited = idle.layout.index(1, 0, 0);
  rho(excited, excited) = 1.0;
  const Mat out = propagate_density(idle.hams, PwcPulse::uniform(20.0, 1, 1), rho,
                                    channels(idle.layout, spec));
  EXPECT_NEAR(out(excited, excited).real(), std::exp(-20.0 / 50.0), 1e-6);
  EXPECT_NEAR(out(0, 0).real(), 1.0 - std::exp(-20.0 / 50.0), 1e-6);
}

TEST(PropagateDensity, PureDephasing) {
  Idle idle;
  DissipationSpec spec = DissipationSpec::none();
  spec.t2 = {30.0, DissipationSpec::kNever};
  const int e = idle.layout.index(1, 0, 0);
  Mat rho = Mat::Zero(8, 8);
  rho(0, 0) = rho(e, e) = rho(0, e) = rho(e, 0) = 0.5;
  const Mat out = propagate_density(idle.hams, PwcPulse::uniform(20.0, 1, 1), rho,
                                    channels(idle.layout, spec));
  EXPECT_NEAR(std::abs(out(0, e)), 0.5 * std::exp(-20.0 / 60.0), 1e-6);
  EXPECT_NEAR(out(e, e).real(), 0.5, 1e-12);
}

TEST(PropagateDensity, UnitaryLimit) {
  Device dev;
  const PwcPulse p = random_pulse(2.0, 20, 1.0, 2);
  const Mat rho = random_density(27, 3);
  const Mat u = propagation::pwc_propagate(dev.hams, p, false).U;
  const Mat out = propagate_density(dev.hams, p, rho, {});
  EXPECT_LE(test::max_abs(out - u * rho * u.adjoint()), 1e-7);
}

TEST(PropagateDensity, TracePositivityAndHermiticity) {
  Device dev;
  const PwcPulse p = random_pulse(2.0, 10, 1.0, 4);
  const auto ch = channels(dev.layout, DissipationSpec::equal(5.0, 10.0));
  const Mat out = propagate_density(dev.hams, p, random_density(27, 5), ch);
  EXPECT_NEAR(std::abs(out.trace() - 1.0), 0.0, 1e-9);
  EXPECT_LE(hermiticity_error(out), 1e-12);
  const RVec ev = Eigen::SelfAdjointEigenSolver<Mat>(out).eigenvalues();
  EXPECT_GE(ev.minCoeff(), -1e-8);
}

TEST(PropagateDensity, IsLinear) {
  Device dev;
  const PwcPulse p = random_pulse(1.0, 5, 1.0, 6);
  const auto ch = channels(dev.layout, DissipationSpec::equal(5.0, 10.0));
  const Mat a = random_density(27, 7), b = random_density(27, 8);
  const Mat mix = propagate_density(dev.hams, p, 0.3 * a + 0.7 * b, ch);
  const Mat sep = 0.3 * propagate_density(dev.hams, p, a, ch) + 0.7 * propagate_density(dev.hams, p, b, ch);
  EXPECT_LE(test::max_abs(mix - sep), 1e-9);
}

TEST(AvgGateFidelity, IdentityWithoutNoiseIsOne) {
  Idle idle;
  EXPECT_NEAR(avg_gate_fidelity(idle.hams, PwcPulse::uniform(5.0, 1, 1), idle.goal, {}), 1.0, 1e-12);
}

TEST(AvgGateFidelity, WeakNoiseMatchesFirstOrderExpansion) {
  // F_e ~ 1 + (t / d^2) sum_c rate_c (|Tr P^dag A P|^2 - d Tr P^dag A^dag A P).
  Idle idle;
  DissipationSpec spec;
  spec.t1 = {2e5, 4e5};
  spec.t2 = {3e5, 1e5};
  spec.tp = 5e4;
  const auto ch = channels(idle.layout, spec);
  const double t = 10.0, d = 4.0;
  const Mat& p = idle.goal.projector;
  double fe = 1.0;
  for (const auto& c : ch) {
    const Mat a(c.op);
    const cplx tr = (p.adjoint() * a * p).trace();
    const double tr2 = (p.adjoint() * a.adjoint() * a * p).trace().real();
    fe += t / (d * d) * c.rate * (std::norm(tr) - d * tr2);
  }
  const double expected = (d * fe + 1.0) / (d + 1.0);
  const double f = avg_gate_fidelity(idle.hams, PwcPulse::uniform(t, 1, 1), idle.goal, ch, {1e-12, 1e-15});
  EXPECT_NEAR(f, expected, 1e-8);
  EXPECT_LT(f, 1.0);
}

TEST(AvgGateFidelity, ClosedSystemMatchesUnitaryFormula) {
  Device dev;
  const PwcPulse p = random_pulse(1.5, 15, 1.5, 9);
  const auto m = propagation::grape_evaluate(dev.hams, p, dev.goal, propagation::GradientMode::Exact, false);
  const double closed = unitary_avg_fidelity(m.projected, dev.goal.target);
  EXPECT_NEAR(avg_gate_fidelity(dev.hams, p, dev.goal, {}, {1e-11, 1e-14}, 2), closed, 1e-7);
}

TEST(DissipationSweep, MonotoneAndConsistent) {
  Device dev;
  const PwcPulse p = random_pulse(0.5, 5, 1.0, 10);
  // Target the pulse's own nearest unitary so that noise can only hurt.
  const Mat m = propagation::grape_evaluate(dev.hams, p, dev.goal, propagation::GradientMode::Exact, false).projected;
  Eigen::JacobiSVD<Mat> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  dev.goal.target = svd.matrixU() * svd.matrixV().adjoint();
  const std::vector<double> grid{2e3, 2e4, 2e5};
  const auto pts = dissipation_sweep(dev.hams, dev.layout, p, dev.goal, grid, 1e5);
  ASSERT_EQ(pts.size(), 3u);
  for (const auto& pt : pts) EXPECT_FALSE(pt.error.has_value());
  EXPECT_LT(pts[0].f_avg, pts[1].f_avg);
  EXPECT_LT(pts[1].f_avg, pts[2].f_avg);
  const double direct = avg_gate_fidelity(
      dev.hams, p, dev.goal, channels(dev.layout, DissipationSpec::equal(2e4, 1e5)));
  EXPECT_NEAR(pts[1].f_avg, direct, 1e-12);
  EXPECT_NEAR(pts[1].infidelity, 1.0 - pts[1].f_avg, 1e-15);
}

TEST(DissipationSweep, InvalidTimeIsRecorded) {
  Idle idle;
  const auto pts = dissipation_sweep(idle.hams, idle.layout, PwcPulse::uniform(1.0, 1, 1), idle.goal, {-1.0});
  ASSERT_EQ(pts.size(), 1u);
  EXPECT_TRUE(pts[0].error.has_value());
}
