#pragma once

#include <array>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/SparseCore>

#include "crgate/controls.hpp"
#include "crgate/model.hpp"
#include "crgate/ode.hpp"
#include "crgate/propagation.hpp"

namespace crgate::open_system {

using Sparse = Eigen::SparseMatrix<cplx>;

/// Relaxation and dephasing times in ns. Infinite times switch a channel off.
struct DissipationSpec {
  static constexpr double kNever = std::numeric_limits<double>::infinity();

  std::array<double, 2> t1{kNever, kNever};
  std::array<double, 2> t2{kNever, kNever};
  double tp = 1e5;  // cavity decay time

  /// T1 = T2 = `t` on both transmons.
  static DissipationSpec equal(double t, double tp = 1e5);
  static DissipationSpec none();

  void validate() const;
};

/// One Lindblad channel: rate * (A rho A^dag - {A^dag A, rho} / 2).
struct Channel {
  std::string name;
  Sparse op;
  Sparse op_dag_op;
  double rate = 0.0;
};

/// b_k at 1/T1_k, sqrt(n_k) at 1/T2_k (no 1/(2 T1) subtraction), a at 1/T_P.
/// Channels with zero rate are omitted.
std::vector<Channel> channels(const model::HilbertLayout& layout, const DissipationSpec& spec);

/// d rho / dt = -i [H, rho] + sum of channel dissipators.
Mat lindblad_rhs(const Mat& rho, const Sparse& h, const std::vector<Channel>& chans);
Mat lindblad_rhs(const Mat& rho, const Mat& h, const std::vector<Channel>& chans);

struct DensityOptions {
  ode::Tolerances tol{1e-10, 1e-13};
  /// Replace rho by (rho + rho^dag) / 2 after every slice. Must be off
  /// for non-Hermitian inputs such as matrix units.
  bool symmetrize = true;
};

/// Integrates the master equation slice by slice under piecewise-constant controls.
Mat propagate_density(const model::HamiltonianSet& hams, const controls::PwcPulse& pulse,
                      const Mat& rho0, const std::vector<Channel>& chans,
                      const DensityOptions& opts = {});

/// Average gate fidelity on the computational subspace, reconstructed from the
/// images of the d^2 matrix units P|i><j|P^dag:
///   F_e = sum_ij <i| G^dag P^dag E(P|i><j|P^dag) P G |j> / d^2,
///   F_avg = (d F_e + 1) / (d + 1).
double avg_gate_fidelity(const model::HamiltonianSet& hams, const controls::PwcPulse& pulse,
                         const propagation::GoalSpec& goal, const std::vector<Channel>& chans,
                         const ode::Tolerances& tol = {1e-10, 1e-13}, int threads = 1);

/// Same formula for a closed system with projected propagator m = P^dag U P:
/// F_avg = (|Tr(G^dag m)|^2 / d + 1) / (d + 1).
double unitary_avg_fidelity(const Mat& projected, const Mat& target);

struct DissipationPoint {
  double t1_ns = 0.0;
  double f_avg = 0.0;
  double infidelity = 1.0;  // 1 - F_avg
  std::optional<std::string> error;
};

/// One point per T1 value with T2 = T1 and fixed T_P.
std::vector<DissipationPoint> dissipation_sweep(const model::HamiltonianSet& hams,
                                                const model::HilbertLayout& layout,
                                                const controls::PwcPulse& pulse,
                                                const propagation::GoalSpec& goal,
                                                const std::vector<double>& t1_grid_ns,
                                                double tp_ns = 1e5, int threads = 1);

}  // namespace crgate::open_system
