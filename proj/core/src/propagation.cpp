#include "crgate/propagation.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>

#include "crgate/errors.hpp"

namespace crgate::propagation {

namespace {

struct Triplet {
  int row, col;
  cplx value;
};

std::vector<Triplet> nonzeros(const Mat& m) {
  std::vector<Triplet> out;
  for (int c = 0; c < m.cols(); ++c) {
    for (int r = 0; r < m.rows(); ++r) {
      if (m(r, c) != cplx{}) out.push_back({r, c, m(r, c)});
    }
  }
  return out;
}

/// Tr(Z H) for sparse H.
cplx trace_product(const Mat& z, const std::vector<Triplet>& h) {
  cplx s{};
  for (const auto& t : h) s += z(t.col, t.row) * t.value;
  return s;
}

double sinc(double x) {
  if (std::abs(x) < 1e-4) return 1.0 - x * x / 6.0;
  return std::sin(x) / x;
}

Mat slice_hamiltonian(const model::HamiltonianSet& hams, const controls::PwcPulse& pulse, int j) {
  Mat h = hams.drift;
  for (int k = 0; k < hams.n_controls(); ++k) {
    const double c = pulse.amplitudes(j, k);
    if (c != 0.0) h += c * hams.controls[k];
  }
  return h;
}

void check_pulse(const model::HamiltonianSet& hams, const controls::PwcPulse& pulse) {
  if (pulse.n_slices() == 0 || pulse.amplitudes.rows() != pulse.n_slices()) {
    throw DimensionError("pulse is missing slice data");
  }
  if (pulse.n_controls() != hams.n_controls()) {
    throw DimensionError("pulse control count does not match the Hamiltonian set");
  }
}

SliceExp expm_unchecked(const Mat& H, double dt) {
  Eigen::SelfAdjointEigenSolver<Mat> es(H);
  SliceExp out;
  out.V = es.eigenvectors();
  out.lambda = es.eigenvalues();
  out.dt = dt;
  CVec phases(out.lambda.size());
  for (Eigen::Index i = 0; i < phases.size(); ++i) {
    phases[i] = std::exp(cplx{0.0, -out.lambda[i] * dt});
  }
  out.U = out.V * phases.asDiagonal() * out.V.adjoint();
  return out;
}

}  // namespace

SliceExp expm_slice(const Mat& H, double dt) {
  if (hermiticity_error(H) > 1e-10) throw NonHermitianError("slice Hamiltonian is not Hermitian");
  if (!(dt > 0.0)) throw DomainError("slice duration must be positive");
  return expm_unchecked(H, dt);
}

Mat exp_divided_differences(const RVec& lambda, double dt) {
  const Eigen::Index n = lambda.size();
  Mat gamma(n, n);
  for (Eigen::Index b = 0; b < n; ++b) {
    for (Eigen::Index a = 0; a < n; ++a) {
      const double mean = 0.5 * (lambda[a] + lambda[b]);
      const double half_gap = 0.5 * (lambda[a] - lambda[b]) * dt;
      gamma(a, b) = cplx{0.0, -dt} * std::exp(cplx{0.0, -mean * dt}) * sinc(half_gap);
    }
  }
  return gamma;
}

Mat expm_derivative(const SliceExp& slice, const Mat& X) {
  const Mat gamma = exp_divided_differences(slice.lambda, slice.dt);
  const Mat xt = slice.V.adjoint() * X * slice.V;
  return slice.V * gamma.cwiseProduct(xt) * slice.V.adjoint();
}

Propagator pwc_propagate(const model::HamiltonianSet& hams, const controls::PwcPulse& pulse,
                         bool want_grads, GradientMode mode) {
  check_pulse(hams, pulse);
  const int m = pulse.n_slices();
  const int n = hams.dim();
  std::vector<SliceExp> slices;
  slices.reserve(m);
  for (int j = 0; j < m; ++j) {
    slices.push_back(expm_unchecked(slice_hamiltonian(hams, pulse, j), pulse.durations[j]));
  }

  Propagator prop;
  prop.duration = pulse.duration();
  if (!want_grads) {
    prop.U = Mat::Identity(n, n);
    for (const auto& s : slices) prop.U = s.U * prop.U;
    return prop;
  }

  // forward[j] = U_{j-1} ... U_1, backward[j] = U_M ... U_{j+1}
  std::vector<Mat> forward(m + 1), backward(m);
  forward[0] = Mat::Identity(n, n);
  for (int j = 0; j < m; ++j) forward[j + 1] = slices[j].U * forward[j];
  backward[m - 1] = Mat::Identity(n, n);
  for (int j = m - 1; j > 0; --j) backward[j - 1] = backward[j] * slices[j].U;
  prop.U = forward[m];

  const int nc = hams.n_controls();
  prop.grads.resize(static_cast<std::size_t>(m) * nc);
  for (int j = 0; j < m; ++j) {
    for (int k = 0; k < nc; ++k) {
      Mat du;
      if (mode == GradientMode::Exact) {
        du = expm_derivative(slices[j], hams.controls[k]);
      } else {
        du = cplx{0.0, -slices[j].dt} * hams.controls[k] * slices[j].U;
      }
      prop.grads[static_cast<std::size_t>(k) * m + j] = backward[j] * du * forward[j];
    }
  }
  return prop;
}

// --------------------------------------------------------------------------- goal

GoalSpec GoalSpec::from(const model::TargetGate& gate, bool local_phases) {
  return GoalSpec{gate.gate, gate.projector, local_phases};
}

Mat GoalSpec::project(const Mat& U) const {
  if (U.rows() != projector.rows()) throw DimensionError("propagator dimension mismatch");
  if (U.cols() == projector.rows()) return projector.adjoint() * U * projector;
  if (U.cols() == projector.cols()) return projector.adjoint() * U;
  throw DimensionError("propagator must be N x N or act on the projector columns");
}

Mat GoalSpec::effective_target(const Mat& m) const {
  if (!local_phases) return target;
  // target(theta) = diag(e^{i(th1 q1 + th2 q2)}) G diag(e^{i th3 q2}); coordinate
  // ascent on |Tr(target^dag m)| with each coordinate maximized in closed form.
  const int d = dim();
  if (d != 4) throw DimensionError("local-phase mode needs a two-qubit subspace");
  auto q1 = [](int i) { return i >> 1; };
  auto q2 = [](int i) { return i & 1; };
  std::array<double, 3> th{0.0, 0.0, 0.0};
  auto build = [&](const std::array<double, 3>& p) {
    Mat g = target;
    for (int r = 0; r < d; ++r) {
      for (int c = 0; c < d; ++c) {
        g(r, c) *= std::exp(cplx{0.0, p[0] * q1(r) + p[1] * q2(r) + p[2] * q2(c)});
      }
    }
    return g;
  };
  // Terms t_rc = conj(G_rc) m_rc, phase exponent -(th1 q1(r) + th2 q2(r) + th3 q2(c)).
  auto split = [&](int which) {
    cplx c0{}, c1{};
    for (int r = 0; r < d; ++r) {
      for (int c = 0; c < d; ++c) {
        const std::array<int, 3> bits{q1(r), q2(r), q2(c)};
        double phase = 0.0;
        for (int i = 0; i < 3; ++i) {
          if (i != which) phase += th[i] * bits[i];
        }
        const cplx term = std::conj(target(r, c)) * m(r, c) * std::exp(cplx{0.0, -phase});
        (bits[which] ? c1 : c0) += term;
      }
    }
    return std::pair{c0, c1};
  };
  for (int sweep = 0; sweep < 100; ++sweep) {
    double change = 0.0;
    for (int i = 0; i < 3; ++i) {
      const auto [c0, c1] = split(i);
      if (std::abs(c1) == 0.0) continue;
      // |c0 + c1 e^{-i th}| is maximal when arg(c1) - th = arg(c0)
      const double next = std::abs(c0) == 0.0 ? th[i] : std::arg(c1) - std::arg(c0);
      double diff = std::remainder(next - th[i], kTwoPi);
      change = std::max(change, std::abs(diff));
      th[i] += diff;
    }
    if (change < 1e-14) break;
  }
  return build(th);
}

cplx GoalSpec::overlap(const Mat& U) const {
  const Mat m = project(U);
  return (effective_target(m).adjoint() * m).trace();
}

GoalValue infidelity(const Propagator& prop, const GoalSpec& goal) {
  const Mat m = goal.project(prop.U);
  const Mat g_eff = goal.effective_target(m);
  const double d = goal.dim();
  GoalValue out;
  out.overlap = (g_eff.adjoint() * m).trace();
  const double mag = std::abs(out.overlap);
  out.infidelity = 1.0 - mag / d;
  if (prop.grads.empty()) return out;

  out.gradient = RVec::Zero(static_cast<Eigen::Index>(prop.grads.size()));
  if (mag == 0.0) {
    out.null_gradient = true;
    return out;
  }
  const cplx phase = std::conj(out.overlap) / mag;
  for (std::size_t i = 0; i < prop.grads.size(); ++i) {
    const cplx dz = (g_eff.adjoint() * goal.project(prop.grads[i])).trace();
    out.gradient[static_cast<Eigen::Index>(i)] = -(phase * dz).real() / d;
  }
  return out;
}

GrapeEvaluation grape_evaluate(const model::HamiltonianSet& hams, const controls::PwcPulse& pulse,
                               const GoalSpec& goal, GradientMode mode, bool want_gradient) {
  check_pulse(hams, pulse);
  const int m = pulse.n_slices();
  const int nc = hams.n_controls();
  const Mat& p = goal.projector;
  if (p.rows() != hams.dim()) throw DimensionError("projector dimension mismatch");

  std::vector<SliceExp> slices;
  slices.reserve(m);
  // a[j] = U_{j-1} ... U_1 P
  std::vector<Mat> a(m + 1);
  a[0] = p;
  for (int j = 0; j < m; ++j) {
    slices.push_back(expm_unchecked(slice_hamiltonian(hams, pulse, j), pulse.durations[j]));
    a[j + 1] = slices[j].U * a[j];
  }

  GrapeEvaluation out;
  out.projected = p.adjoint() * a[m];
  const Mat g_eff = goal.effective_target(out.projected);
  const double d = goal.dim();
  out.overlap = (g_eff.adjoint() * out.projected).trace();
  const double mag = std::abs(out.overlap);
  out.infidelity = 1.0 - mag / d;
  if (!want_gradient) return out;

  out.gradient = RMat::Zero(m, nc);
  if (mag == 0.0) {
    out.null_gradient = true;
    return out;
  }
  const cplx phase = std::conj(out.overlap) / mag;

  std::vector<std::vector<Triplet>> ops;
  ops.reserve(nc);
  for (const auto& h : hams.controls) ops.push_back(nonzeros(h));

  // b = G^dag P^dag U_M ... U_{j+1}, swept backwards.
  Mat b = g_eff.adjoint() * p.adjoint();
  Mat z;
  for (int j = m - 1; j >= 0; --j) {
    const SliceExp& s = slices[j];
    if (mode == GradientMode::Exact) {
      const Mat at = s.V.adjoint() * a[j];
      const Mat bt = b * s.V;
      const Mat w = at * bt;
      z.noalias() = s.V * exp_divided_differences(s.lambda, s.dt).cwiseProduct(w) * s.V.adjoint();
    } else {
      z.noalias() = cplx{0.0, -s.dt} * (a[j + 1] * b);
    }
    for (int k = 0; k < nc; ++k) {
      const cplx dz = trace_product(z, ops[k]);
      out.gradient(j, k) = -(phase * dz).real() / d;
    }
    b = b * s.U;
  }
  return out;
}

}  // namespace crgate::propagation
