#pragma once

#include <vector>

#include "crgate/controls.hpp"
#include "crgate/model.hpp"
#include "crgate/ode.hpp"
#include "crgate/types.hpp"

namespace crgate::propagation {

/// exp(-i H dt) together with the eigendecomposition H = V diag(lambda) V^dagger.
struct SliceExp {
  Mat U;
  Mat V;
  RVec lambda;
  double dt = 0.0;
};

/// Throws NonHermitianError when H deviates from its adjoint by more than 1e-10.
SliceExp expm_slice(const Mat& H, double dt);

/// Divided differences of exp(-i lambda dt):
///   Gamma_ab = -i dt exp(-i (l_a + l_b) dt / 2) sinc((l_a - l_b) dt / 2),
/// which reduces to -i dt exp(-i l_a dt) for degenerate pairs.
Mat exp_divided_differences(const RVec& lambda, double dt);

/// Frechet derivative of exp(-i (H + c X) dt) with respect to c at c = 0.
Mat expm_derivative(const SliceExp& slice, const Mat& X);

enum class GradientMode {
  Exact,       // eigenbasis divided-difference formula
  FirstOrder,  // dU_j ~ -i dt H_k U_j
};

/// U(T) plus optional parameter derivatives. U may be the full N x N
/// propagator or its action U X0 on a set of initial columns.
struct Propagator {
  Mat U;
  std::vector<Mat> grads;
  double duration = 0.0;
};

/// Time-ordered product of slice exponentials. With `want_grads`, grads[k * M + j]
/// holds dU(T)/dc_{j,k}, assembled from cached forward/backward partial products.
Propagator pwc_propagate(const model::HamiltonianSet& hams, const controls::PwcPulse& pulse,
                         bool want_grads, GradientMode mode = GradientMode::Exact);

/// Target gate restricted to the computational subspace.
struct GoalSpec {
  Mat target;     // d x d
  Mat projector;  // N x d
  /// Maximize the overlap over single-qubit Z phases (Z on qubit 1, Z on qubit 2
  /// before and after the gate) instead of demanding the exact target.
  bool local_phases = false;

  static GoalSpec from(const model::TargetGate& gate, bool local_phases = false);

  int dim() const { return static_cast<int>(target.rows()); }
  /// P^dagger U P (or P^dagger U when U already acts on the projector columns).
  Mat project(const Mat& U) const;
  /// Target actually compared against for the projected gate `m` (the exact
  /// target, or its optimally Z-rotated version in local-phase mode).
  Mat effective_target(const Mat& m) const;
  /// z = Tr(G^dagger P^dagger U P).
  cplx overlap(const Mat& U) const;
};

struct GoalValue {
  double infidelity = 1.0;
  cplx overlap{};
  RVec gradient;  // empty when the propagator carries no derivatives
  /// Set when |z| = 0: the gradient is undefined and returned as zeros.
  bool null_gradient = false;
};

/// g = 1 - |z| / d with gradient -Re[(z* / |z|) Tr(G^dag P^dag dU P)] / d.
GoalValue infidelity(const Propagator& prop, const GoalSpec& goal);

/// GRAPE goal and gradient without materializing dU/dc: adjoint products are
/// contracted with each slice's divided-difference kernel. `gradient(j, k)` is
/// dg/dc_{j,k}.
struct GrapeEvaluation {
  double infidelity = 1.0;
  cplx overlap{};
  RMat gradient;
  bool null_gradient = false;
  Mat projected;  // P^dagger U(T) P
};

GrapeEvaluation grape_evaluate(const model::HamiltonianSet& hams, const controls::PwcPulse& pulse,
                               const GoalSpec& goal, GradientMode mode = GradientMode::Exact,
                               bool want_gradient = true);

/// Integrates d/dt [U; dU] = -i [H 0; dH H] [U; dU] with an adaptive
/// Dormand-Prince pair from U(0) = X0, dU(0) = 0, restarting at the controls'
/// breakpoints. `initial_columns` defaults to the identity. grads[p] is
/// dU/d(param p) applied to X0.
Propagator goat_propagate(const model::HamiltonianSet& hams,
                          const controls::AnalyticControls& controls,
                          const ode::Tolerances& tol = {}, const Mat* initial_columns = nullptr);

/// Schrodinger evolution of a set of column states under piecewise-constant
/// controls, integrated adaptively with sparse operators. `observe(t, states)`
/// sees every accepted step.
template <class Observer>
Mat evolve_states(const model::HamiltonianSet& hams, const controls::PwcPulse& pulse,
                  const Mat& states, const ode::Tolerances& tol, Observer&& observe);

}  // namespace crgate::propagation

#include "crgate/detail/evolve_states.hpp"
