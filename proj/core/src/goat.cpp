#include <algorithm>

#include "crgate/errors.hpp"
#include "crgate/propagation.hpp"

namespace crgate::propagation {

Propagator goat_propagate(const model::HamiltonianSet& hams,
                          const controls::AnalyticControls& controls, const ode::Tolerances& tol,
                          const Mat* initial_columns) {
  const int n = hams.dim();
  const int nc = controls.n_controls();
  const int np = controls.n_params();
  if (nc != hams.n_controls()) {
    throw DimensionError("control count does not match the Hamiltonian set");
  }
  const Mat x0 = initial_columns ? *initial_columns : Mat::Identity(n, n);
  if (x0.rows() != n) throw DimensionError("initial columns have the wrong dimension");
  const int cols = static_cast<int>(x0.cols());

  std::vector<int> owner(np);
  for (int p = 0; p < np; ++p) owner[p] = controls.owner(p);

  // Y = [U X0 | dU/dp_0 X0 | ... ], one block of `cols` columns per entry.
  Mat y = Mat::Zero(n, static_cast<Eigen::Index>(cols) * (np + 1));
  y.leftCols(cols) = x0;

  RVec amps, partials;
  Mat h(n, n);
  std::vector<Mat> hk_u(nc);
  const cplx minus_i{0.0, -1.0};
  auto rhs = [&](double t, const Mat& state, Mat& dstate) {
    controls.eval(t, amps);
    controls.param_grad(t, partials);
    h = hams.drift;
    for (int k = 0; k < nc; ++k) {
      if (amps[k] != 0.0) h += amps[k] * hams.controls[k];
    }
    dstate.noalias() = minus_i * (h * state);
    const auto u = state.leftCols(cols);
    for (int k = 0; k < nc; ++k) hk_u[k].noalias() = minus_i * (hams.controls[k] * u);
    for (int p = 0; p < np; ++p) {
      const double dc = partials[p];
      if (dc != 0.0) dstate.middleCols(static_cast<Eigen::Index>(cols) * (p + 1), cols) += dc * hk_u[owner[p]];
    }
  };

  ode::Options opts;
  opts.tol = tol;
  const double total = controls.duration();
  std::vector<double> cuts = controls.breakpoints();
  cuts.push_back(total);
  std::sort(cuts.begin(), cuts.end());
  double t0 = 0.0;
  for (double t1 : cuts) {
    if (t1 <= t0) continue;
    // Evaluate strictly inside the segment so the right-closed staircase
    // convention picks the segment's own value at the left edge.
    auto segment_rhs = [&](double t, const Mat& state, Mat& dstate) {
      const double eps = 1e-12 * std::max(1.0, total);
      rhs(std::clamp(t, t0 + eps, t1 - eps), state, dstate);
    };
    ode::integrate(segment_rhs, y, t0, t1, opts);
    t0 = t1;
  }

  Propagator prop;
  prop.duration = total;
  prop.U = y.leftCols(cols);
  prop.grads.resize(np);
  for (int p = 0; p < np; ++p) {
    prop.grads[p] = y.middleCols(static_cast<Eigen::Index>(cols) * (p + 1), cols);
  }
  return prop;
}

}  // namespace crgate::propagation
