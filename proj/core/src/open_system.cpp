#include "crgate/open_system.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include <unsupported/Eigen/KroneckerProduct>

#include "crgate/errors.hpp"

namespace crgate::open_system {

DissipationSpec DissipationSpec::equal(double t, double tp) {
  DissipationSpec s;
  s.t1 = {t, t};
  s.t2 = {t, t};
  s.tp = tp;
  return s;
}

DissipationSpec DissipationSpec::none() {
  DissipationSpec s;
  s.tp = kNever;
  return s;
}

void DissipationSpec::validate() const {
  for (double t : {t1[0], t1[1], t2[0], t2[1], tp}) {
    if (!(t > 0.0)) throw DomainError("relaxation and dephasing times must be positive");
  }
}

namespace {

double rate_of(double time) { return std::isinf(time) ? 0.0 : 1.0 / time; }

Channel make_channel(std::string name, const Mat& op, double rate) {
  Channel c;
  c.name = std::move(name);
  c.op = op.sparseView();
  c.op_dag_op = Mat(op.adjoint() * op).sparseView();
  c.rate = rate;
  return c;
}

Mat sqrt_number(int dim) {
  Mat m = Mat::Zero(dim, dim);
  for (int n = 0; n < dim; ++n) m(n, n) = std::sqrt(static_cast<double>(n));
  return m;
}

}  // namespace

std::vector<Channel> channels(const model::HilbertLayout& layout, const DissipationSpec& spec) {
  spec.validate();
  using model::Subsystem;
  std::vector<Channel> out;
  const std::array<Subsystem, 2> transmons{Subsystem::Transmon1, Subsystem::Transmon2};
  for (int k = 0; k < 2; ++k) {
    const int dim = layout.dim_of(transmons[k]);
    const std::string idx = std::to_string(k + 1);
    if (const double r = rate_of(spec.t1[k]); r > 0.0) {
      out.push_back(make_channel("b" + idx, layout.embed(model::annihilation(dim), transmons[k]), r));
    }
    if (const double r = rate_of(spec.t2[k]); r > 0.0) {
      out.push_back(make_channel("sqrt_n" + idx, layout.embed(sqrt_number(dim), transmons[k]), r));
    }
  }
  if (const double r = rate_of(spec.tp); r > 0.0) {
    const int dim = layout.dim_of(Subsystem::Resonator);
    out.push_back(make_channel("a", layout.embed(model::annihilation(dim), Subsystem::Resonator), r));
  }
  return out;
}

Mat lindblad_rhs(const Mat& rho, const Sparse& h, const std::vector<Channel>& chans) {
  const cplx minus_i{0.0, -1.0};
  // Sparse products only act from the left: rho X = (X^dag rho^dag)^dag.
  const Mat rho_dag = rho.adjoint();
  const Mat rh = (h * rho_dag).adjoint();  // H Hermitian
  Mat out = minus_i * (h * rho - rh);
  for (const auto& c : chans) {
    const Mat ar = c.op * rho;
    const Mat ara = (c.op * ar.adjoint()).adjoint();  // A rho A^dag
    const Mat lr = c.op_dag_op * rho;
    const Mat rl = (c.op_dag_op * rho_dag).adjoint();  // rho A^dag A
    out += c.rate * (ara - 0.5 * (lr + rl));
  }
  return out;
}

Mat lindblad_rhs(const Mat& rho, const Mat& h, const std::vector<Channel>& chans) {
  return lindblad_rhs(rho, Sparse(h.sparseView()), chans);
}

namespace {

// Superoperators act on column-stacked density matrices: vec(A X B) = (B^T (x) A) vec(X).
Sparse identity(int n) {
  Sparse id(n, n);
  id.setIdentity();
  return id;
}

Sparse commutator_super(const Sparse& h) {
  const Sparse id = identity(static_cast<int>(h.rows()));
  const Sparse ht = h.transpose();
  const Sparse left = Eigen::kroneckerProduct(id, h);
  const Sparse right = Eigen::kroneckerProduct(ht, id);
  return cplx{0.0, -1.0} * (left - right);
}

Sparse dissipator_super(const Channel& c) {
  const Sparse id = identity(static_cast<int>(c.op.rows()));
  const Sparse conj = c.op.conjugate();
  const Sparse ada_t = c.op_dag_op.transpose();
  const Sparse jump = Eigen::kroneckerProduct(conj, c.op);
  const Sparse left = Eigen::kroneckerProduct(id, c.op_dag_op);
  const Sparse right = Eigen::kroneckerProduct(ada_t, id);
  return c.rate * (jump - 0.5 * (left + right));
}

using RowSparse = Eigen::SparseMatrix<cplx, Eigen::RowMajor>;
// Row-major on both sides lets each nonzero update a contiguous row of states.
using States = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Liouvillian pieces: L = fixed + sum_k c_k per_control[k].
struct Liouvillian {
  RowSparse fixed;
  std::vector<RowSparse> per_control;

  Liouvillian(const model::HamiltonianSet& hams, const std::vector<Channel>& chans) {
    Sparse f = commutator_super(hams.drift.sparseView());
    for (const auto& c : chans) f += dissipator_super(c);
    fixed = f;
    for (const auto& h : hams.controls) per_control.emplace_back(commutator_super(h.sparseView()));
  }

  RowSparse at(const RVec& controls) const {
    RowSparse l = fixed;
    for (Eigen::Index k = 0; k < controls.size(); ++k) {
      if (controls[k] != 0.0) l += controls[k] * per_control[k];
    }
    return l;
  }
};

void check_pulse(const model::HamiltonianSet& hams, const controls::PwcPulse& pulse) {
  pulse.validate();
  if (pulse.n_controls() != hams.n_controls()) {
    throw DimensionError("pulse control count does not match the Hamiltonian set");
  }
}

/// Integrates every column of `states` (vectorized density matrices) through the pulse.
template <class AfterSlice>
void propagate_vectorized(const Liouvillian& liou, const controls::PwcPulse& pulse, States& states,
                          const ode::Tolerances& tol, AfterSlice&& after_slice) {
  ode::Options o;
  o.tol = tol;
  double t0 = 0.0;
  double step = 0.0;
  for (int j = 0; j < pulse.n_slices(); ++j) {
    const RowSparse l = liou.at(pulse.amplitudes.row(j).transpose());
    auto rhs = [&](double, const States& y, States& dy) { dy.noalias() = l * y; };
    const double t1 = t0 + pulse.durations[j];
    // Reuse the last accepted step size as the first guess for the next slice.
    o.initial_step = step;
    auto observe = [&, prev = t0](double t, const States&) mutable {
      step = t - prev;
      prev = t;
    };
    ode::integrate(rhs, states, t0, t1, o, observe);
    after_slice(states);
    t0 = t1;
  }
}

}  // namespace

Mat propagate_density(const model::HamiltonianSet& hams, const controls::PwcPulse& pulse,
                      const Mat& rho0, const std::vector<Channel>& chans,
                      const DensityOptions& opts) {
  check_pulse(hams, pulse);
  const int n = hams.dim();
  if (rho0.rows() != n || rho0.cols() != n) throw DimensionError("density matrix dimension mismatch");

  const Liouvillian liou(hams, chans);
  States vec = Eigen::Map<const CVec>(rho0.data(), static_cast<Eigen::Index>(n) * n);
  propagate_vectorized(liou, pulse, vec, opts.tol, [&](States& y) {
    if (!opts.symmetrize) return;
    Eigen::Map<Mat> rho(y.data(), n, n);
    rho = 0.5 * (rho + rho.adjoint()).eval();
  });
  return Eigen::Map<const Mat>(vec.data(), n, n);
}

double avg_gate_fidelity(const model::HamiltonianSet& hams, const controls::PwcPulse& pulse,
                         const propagation::GoalSpec& goal, const std::vector<Channel>& chans,
                         const ode::Tolerances& tol, int threads) {
  check_pulse(hams, pulse);
  const Mat& p = goal.projector;
  const Mat& g = goal.target;
  const int d = goal.dim();
  const int n = hams.dim();
  if (p.rows() != n) throw DimensionError("projector dimension mismatch");

  const Liouvillian liou(hams, chans);
  const int total = d * d;
  std::vector<cplx> terms(total);
  // Matrix units P|i><j|P^dag, one per column of a batch.
  auto run_units = [&](int first, int last) {
    States states(static_cast<Eigen::Index>(n) * n, last - first);
    for (int idx = first; idx < last; ++idx) {
      const Mat unit = p.col(idx / d) * p.col(idx % d).adjoint();
      states.col(idx - first) = Eigen::Map<const CVec>(unit.data(), unit.size());
    }
    propagate_vectorized(liou, pulse, states, tol, [](States&) {});
    for (int idx = first; idx < last; ++idx) {
      const CVec column = states.col(idx - first);
      const Eigen::Map<const Mat> rho(column.data(), n, n);
      const Mat out = p.adjoint() * rho * p;
      terms[idx] = (g.col(idx / d).adjoint() * out * g.col(idx % d)).value();
    }
  };

  const int nthreads = std::clamp(threads, 1, total);
  if (nthreads == 1) {
    run_units(0, total);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < nthreads; ++t) {
      const int first = total * t / nthreads;
      const int last = total * (t + 1) / nthreads;
      pool.emplace_back([&, first, last] { run_units(first, last); });
    }
    for (auto& th : pool) th.join();
  }
  cplx sum{};
  for (const cplx& t : terms) sum += t;
  const double fe = sum.real() / (static_cast<double>(d) * d);
  return (d * fe + 1.0) / (d + 1.0);
}

double unitary_avg_fidelity(const Mat& projected, const Mat& target) {
  const double d = static_cast<double>(target.rows());
  const double overlap = std::norm((target.adjoint() * projected).trace());
  return (overlap / d + 1.0) / (d + 1.0);
}

std::vector<DissipationPoint> dissipation_sweep(const model::HamiltonianSet& hams,
                                                const model::HilbertLayout& layout,
                                                const controls::PwcPulse& pulse,
                                                const propagation::GoalSpec& goal,
                                                const std::vector<double>& t1_grid_ns, double tp_ns,
                                                int threads) {
  if (t1_grid_ns.empty()) throw DomainError("dissipation grid is empty");
  std::vector<DissipationPoint> out;
  for (double t1 : t1_grid_ns) {
    DissipationPoint pt;
    pt.t1_ns = t1;
    try {
      const auto chans = channels(layout, DissipationSpec::equal(t1, tp_ns));
      pt.f_avg = avg_gate_fidelity(hams, pulse, goal, chans, {1e-10, 1e-13}, threads);
      pt.infidelity = 1.0 - pt.f_avg;
    } catch (const std::exception& e) {
      pt.error = e.what();
    }
    out.push_back(pt);
  }
  return out;
}

}  // namespace crgate::open_system
