#pragma once

#include <array>
#include <string>
#include <vector>

#include "crgate/types.hpp"

namespace crgate::model {

enum class Subsystem { Transmon1 = 0, Transmon2 = 1, Resonator = 2 };

/// Truncation levels per subsystem, in the order (resonator, transmon 1, transmon 2).
struct Levels {
  int resonator = 3;
  int transmon1 = 3;
  int transmon2 = 3;

  int of(Subsystem s) const;
  friend bool operator==(const Levels&, const Levels&) = default;
};

/// Physical constants of the rotating-frame Hamiltonian. All frequencies are
/// angular (rad/ns) with hbar = 1.
struct DeviceParams {
  std::array<double, 2> delta_q{0.0, ghz_to_angular(-0.67)};
  std::array<double, 2> alpha{ghz_to_angular(-0.32), ghz_to_angular(-0.32)};
  std::array<double, 2> g{ghz_to_angular(0.1), ghz_to_angular(0.1)};
  double delta_cavity = ghz_to_angular(0.4);
  std::array<double, 2> f{0.0, 0.0};
  Levels levels{};

  /// Dispersive-regime defaults (Delta = 0.4, g = 0.1, alpha = -0.32,
  /// delta = (0, -0.67), all GHz times 2 pi).
  static DeviceParams table_one() { return {}; }

  /// Throws DomainError / DimensionError when an invariant is violated.
  void validate() const;
};

/// Tensor-product layout of the three subsystems. The default order is
/// transmon 1 (most significant) x transmon 2 x resonator.
class HilbertLayout {
 public:
  using Order = std::array<Subsystem, 3>;
  static constexpr Order kDefaultOrder{Subsystem::Transmon1, Subsystem::Transmon2,
                                       Subsystem::Resonator};

  explicit HilbertLayout(Levels levels, Order order = kDefaultOrder);

  const Levels& levels() const { return levels_; }
  const Order& order() const { return order_; }
  int dim() const { return dim_; }
  int dim_of(Subsystem s) const { return levels_.of(s); }

  /// Flat index of the product state |n1, n2, nr>.
  int index(int n1, int n2, int nr) const;
  /// Inverse of index(): returns {n1, n2, nr}.
  std::array<int, 3> occupation(int flat) const;

  /// Embeds an operator acting on one subsystem into the full space.
  Mat embed(const Mat& local, Subsystem s) const;

 private:
  Levels levels_;
  Order order_;
  std::array<int, 3> strides_{};  // indexed by Subsystem
  int dim_ = 0;
};

/// Drift and control operators of the rotating-frame Hamiltonian.
struct HamiltonianSet {
  Mat drift;
  /// Control operators in the order X1, Y1, X2, Y2 where X_k = b_k + b_k^dag
  /// and Y_k = i (b_k^dag - b_k).
  std::vector<Mat> controls;
  std::vector<std::string> names;
  /// Transmon number operators n_k = b_k^dag b_k; derivative of the drift with
  /// respect to the static offsets f_k.
  std::array<Mat, 2> number_ops;
  /// Static offsets f_k currently contained in the drift.
  std::array<double, 2> offsets{0.0, 0.0};

  int dim() const { return static_cast<int>(drift.rows()); }
  int n_controls() const { return static_cast<int>(controls.size()); }

  /// Copy whose control list additionally contains n_1 and n_2, with the f_k
  /// terms removed from the drift. Used when f_k are optimized alongside the
  /// time-dependent controls.
  HamiltonianSet with_offset_controls() const;
  /// Copy whose drift carries the offsets `f` instead of the current ones.
  HamiltonianSet with_offsets(std::array<double, 2> f) const;
};

/// Lower-shift matrix with sqrt(n) on the first subdiagonal. dim >= 2.
Mat annihilation(int dim);

/// Builds the drift (including the static f_k terms) and the four quadrature controls.
HamiltonianSet build_hamiltonians(const DeviceParams& params, const HilbertLayout& layout);

/// Total excitation number sum_k n_k + a^dag a.
Mat total_excitation(const HilbertLayout& layout);

/// Isometry onto |q1 q2, n_r = 0>, columns ordered |00>, |01>, |10>, |11>.
Mat computational_projector(const HilbertLayout& layout);

enum class GateKind { Cnot, Identity };

struct TargetGate {
  Mat gate;       // d x d
  Mat projector;  // N x d

  int subspace_dim() const { return static_cast<int>(gate.rows()); }
};

/// CNOT on the computational subspace. `control_qubit` is 1 or 2.
Mat cnot(int control_qubit = 1);

TargetGate make_target(const HilbertLayout& layout, GateKind kind = GateKind::Cnot,
                       int control_qubit = 1);

}  // namespace crgate::model
