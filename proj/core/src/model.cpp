#include "crgate/model.hpp"

#include <algorithm>
#include <cmath>

#include "crgate/errors.hpp"

namespace crgate::model {

int Levels::of(Subsystem s) const {
  switch (s) {
    case Subsystem::Transmon1: return transmon1;
    case Subsystem::Transmon2: return transmon2;
    case Subsystem::Resonator: return resonator;
  }
  return 0;
}

void DeviceParams::validate() const {
  for (int n : {levels.resonator, levels.transmon1, levels.transmon2}) {
    if (n < 2) throw DimensionError("every subsystem needs at least 2 levels");
  }
  auto finite = [](double v) { return std::isfinite(v); };
  bool ok = finite(delta_cavity);
  for (int k = 0; k < 2; ++k) {
    ok = ok && finite(delta_q[k]) && finite(alpha[k]) && finite(g[k]) && finite(f[k]);
  }
  if (!ok) throw DomainError("device frequencies must be finite");
}

HilbertLayout::HilbertLayout(Levels levels, Order order) : levels_(levels), order_(order) {
  std::array<bool, 3> seen{};
  for (Subsystem s : order_) seen[static_cast<int>(s)] = true;
  if (!(seen[0] && seen[1] && seen[2])) {
    throw LayoutError("layout order must be a permutation of the three subsystems");
  }
  for (int n : {levels.resonator, levels.transmon1, levels.transmon2}) {
    if (n < 2) throw DimensionError("every subsystem needs at least 2 levels");
  }
  int stride = 1;
  for (int pos = 2; pos >= 0; --pos) {
    strides_[static_cast<int>(order_[pos])] = stride;
    stride *= levels_.of(order_[pos]);
  }
  dim_ = stride;
}

int HilbertLayout::index(int n1, int n2, int nr) const {
  if (n1 < 0 || n1 >= levels_.transmon1 || n2 < 0 || n2 >= levels_.transmon2 || nr < 0 ||
      nr >= levels_.resonator) {
    throw LayoutError("occupation outside truncation");
  }
  return n1 * strides_[0] + n2 * strides_[1] + nr * strides_[2];
}

std::array<int, 3> HilbertLayout::occupation(int flat) const {
  if (flat < 0 || flat >= dim_) throw LayoutError("flat index out of range");
  std::array<int, 3> occ{};
  for (int s = 0; s < 3; ++s) {
    occ[s] = (flat / strides_[s]) % levels_.of(static_cast<Subsystem>(s));
  }
  return occ;
}

Mat HilbertLayout::embed(const Mat& local, Subsystem s) const {
  const int n = dim_of(s);
  if (local.rows() != n || local.cols() != n) {
    throw LayoutError("local operator dimension does not match the layout");
  }
  Mat out = Mat::Zero(dim_, dim_);
  const int stride = strides_[static_cast<int>(s)];
  for (int col = 0; col < dim_; ++col) {
    const int ns = (col / stride) % n;
    const int base = col - ns * stride;
    for (int m = 0; m < n; ++m) {
      const cplx v = local(m, ns);
      if (v != cplx{}) out(base + m * stride, col) += v;
    }
  }
  return out;
}

Mat annihilation(int dim) {
  if (dim < 2) throw DimensionError("annihilation operator needs dim >= 2");
  Mat a = Mat::Zero(dim, dim);
  for (int n = 1; n < dim; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
  return a;
}

namespace {

struct Ladder {
  Mat b1, b2, a;
};

Ladder ladder_ops(const HilbertLayout& layout) {
  return {layout.embed(annihilation(layout.dim_of(Subsystem::Transmon1)), Subsystem::Transmon1),
          layout.embed(annihilation(layout.dim_of(Subsystem::Transmon2)), Subsystem::Transmon2),
          layout.embed(annihilation(layout.dim_of(Subsystem::Resonator)), Subsystem::Resonator)};
}

}  // namespace

HamiltonianSet build_hamiltonians(const DeviceParams& params, const HilbertLayout& layout) {
  params.validate();
  if (!(params.levels == layout.levels())) {
    throw LayoutError("layout dimensions do not match device truncation levels");
  }
  const auto [b1, b2, a] = ladder_ops(layout);
  const std::array<const Mat*, 2> b{&b1, &b2};

  HamiltonianSet set;
  set.drift = params.delta_cavity * (a.adjoint() * a);
  for (int k = 0; k < 2; ++k) {
    const Mat& bk = *b[k];
    const Mat bd = bk.adjoint();
    const Mat number = bd * bk;
    set.drift += params.delta_q[k] * number;
    set.drift += params.alpha[k] * (bd * bd * bk * bk);
    set.drift += params.g[k] * (a * bd + a.adjoint() * bk);
    set.drift += params.f[k] * number;
    set.number_ops[k] = number;
  }
  set.offsets = params.f;
  // Clean rounding asymmetries so the drift is Hermitian to machine precision.
  set.drift = 0.5 * (set.drift + set.drift.adjoint()).eval();

  for (int k = 0; k < 2; ++k) {
    const Mat& bk = *b[k];
    set.controls.push_back(bk + bk.adjoint());
    set.controls.push_back(kI * (bk.adjoint() - bk));
    set.names.push_back("X" + std::to_string(k + 1));
    set.names.push_back("Y" + std::to_string(k + 1));
  }
  return set;
}

HamiltonianSet HamiltonianSet::with_offset_controls() const {
  HamiltonianSet out = *this;
  for (int k = 0; k < 2; ++k) {
    out.drift -= offsets[k] * number_ops[k];
    out.controls.push_back(number_ops[k]);
    out.names.push_back("N" + std::to_string(k + 1));
  }
  out.offsets = {0.0, 0.0};
  return out;
}

HamiltonianSet HamiltonianSet::with_offsets(std::array<double, 2> f) const {
  HamiltonianSet out = *this;
  for (int k = 0; k < 2; ++k) out.drift += (f[k] - offsets[k]) * number_ops[k];
  out.offsets = f;
  return out;
}

Mat total_excitation(const HilbertLayout& layout) {
  const auto [b1, b2, a] = ladder_ops(layout);
  return b1.adjoint() * b1 + b2.adjoint() * b2 + a.adjoint() * a;
}

Mat computational_projector(const HilbertLayout& layout) {
  Mat p = Mat::Zero(layout.dim(), 4);
  int col = 0;
  for (int q1 = 0; q1 < 2; ++q1) {
    for (int q2 = 0; q2 < 2; ++q2) {
      p(layout.index(q1, q2, 0), col++) = 1.0;
    }
  }
  return p;
}

Mat cnot(int control_qubit) {
  Mat g = Mat::Identity(4, 4);
  if (control_qubit == 1) {
    // |10> <-> |11>
    g(2, 2) = g(3, 3) = 0.0;
    g(2, 3) = g(3, 2) = 1.0;
  } else if (control_qubit == 2) {
    // |01> <-> |11>
    g(1, 1) = g(3, 3) = 0.0;
    g(1, 3) = g(3, 1) = 1.0;
  } else {
    throw DomainError("control qubit must be 1 or 2");
  }
  return g;
}

TargetGate make_target(const HilbertLayout& layout, GateKind kind, int control_qubit) {
  TargetGate t;
  t.projector = computational_projector(layout);
  t.gate = kind == GateKind::Cnot ? cnot(control_qubit) : Mat::Identity(4, 4);
  return t;
}

}  // namespace crgate::model
