#pragma once

#include <Eigen/SparseCore>

namespace crgate::propagation {

template <class Observer>
Mat evolve_states(const model::HamiltonianSet& hams, const controls::PwcPulse& pulse,
                  const Mat& states, const ode::Tolerances& tol, Observer&& observe) {
  using Sparse = Eigen::SparseMatrix<cplx>;
  pulse.validate();
  if (pulse.n_controls() != hams.n_controls()) {
    throw DimensionError("pulse control count does not match the Hamiltonian set");
  }
  const Sparse drift = hams.drift.sparseView();
  std::vector<Sparse> ctrl;
  for (const auto& h : hams.controls) ctrl.push_back(h.sparseView());

  Mat psi = states;
  ode::Options opts;
  opts.tol = tol;
  double t0 = 0.0;
  observe(0.0, static_cast<const Mat&>(psi));
  for (int j = 0; j < pulse.n_slices(); ++j) {
    Sparse h = drift;
    for (int k = 0; k < pulse.n_controls(); ++k) {
      const double c = pulse.amplitudes(j, k);
      if (c != 0.0) h += c * ctrl[k];
    }
    auto rhs = [&](double, const Mat& y, Mat& dy) { dy = cplx{0.0, -1.0} * (h * y); };
    const double t1 = t0 + pulse.durations[j];
    ode::integrate(rhs, psi, t0, t1, opts, observe);
    t0 = t1;
  }
  return psi;
}

}  // namespace crgate::propagation
