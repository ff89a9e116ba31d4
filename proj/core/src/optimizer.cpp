#include "crgate/optimizer.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <memory>
#include <mutex>
#include <thread>

#include "crgate/errors.hpp"

namespace crgate::optimizer {

void OptimizationProblem::validate() const {
  if (!(duration > 0.0)) throw DomainError("duration must be positive");
  if (bound && !(*bound > 0.0)) throw DomainError("amplitude bound must be positive");
  if (goal.projector.rows() != hams.dim()) throw DimensionError("goal does not fit the Hamiltonian");
  if (stop.max_iterations < 0) throw DomainError("max_iterations must be non-negative");
}

namespace {

using Clock = std::chrono::steady_clock;

optim::LbfgsOptions lbfgs_options(const StopCriteria& stop) {
  optim::LbfgsOptions o;
  o.grad_tol = stop.grad_tol;
  o.max_iterations = stop.max_iterations;
  o.target_value = stop.target_infidelity;
  return o;
}

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

}  // namespace

// --------------------------------------------------------------------------- GRAPE

GrapeObjective::GrapeObjective(const OptimizationProblem& problem, const controls::ControlMap& map)
    : problem_(problem),
      map_(map),
      hams_(problem.optimize_offsets ? problem.hams.with_offset_controls() : problem.hams) {
  problem.validate();
  if (map.n_controls() != problem.hams.n_controls()) {
    throw DimensionError("control map does not match the Hamiltonian controls");
  }
}

int GrapeObjective::size() const { return map_.n_params() + (problem_.optimize_offsets ? 2 : 0); }

RVec GrapeObjective::pack(const RVec& params, std::array<double, 2> offsets) const {
  if (params.size() != map_.n_params()) throw DimensionError("parameter count mismatch");
  RVec x(size());
  if (problem_.bound) {
    const double b = *problem_.bound;
    for (Eigen::Index i = 0; i < params.size(); ++i) {
      x[i] = std::atanh(std::clamp(params[i] / b, -1.0 + 1e-9, 1.0 - 1e-9));
    }
  } else {
    x.head(params.size()) = params;
  }
  if (problem_.optimize_offsets) {
    x[map_.n_params()] = offsets[0];
    x[map_.n_params() + 1] = offsets[1];
  }
  return x;
}

RVec GrapeObjective::unpack_params(const RVec& x) const {
  const RVec u = x.head(map_.n_params());
  if (!problem_.bound) return u;
  return *problem_.bound * u.array().tanh().matrix();
}

std::array<double, 2> GrapeObjective::unpack_offsets(const RVec& x) const {
  if (!problem_.optimize_offsets) return problem_.hams.offsets;
  return {x[map_.n_params()], x[map_.n_params() + 1]};
}

optim::Evaluation GrapeObjective::operator()(const RVec& x) const {
  if (x.size() != size()) throw DimensionError("optimizer vector size mismatch");
  const int nc = map_.n_controls();
  const RVec params = unpack_params(x);
  controls::PwcPulse pulse = map_.to_pulse(params);
  if (problem_.optimize_offsets) {
    const auto f = unpack_offsets(x);
    RMat amps(pulse.n_slices(), nc + 2);
    amps.leftCols(nc) = pulse.amplitudes;
    amps.col(nc).setConstant(f[0]);
    amps.col(nc + 1).setConstant(f[1]);
    pulse.amplitudes = std::move(amps);
  }
  const auto ev = propagation::grape_evaluate(hams_, pulse, problem_.goal, problem_.gradient_mode);

  optim::Evaluation out;
  out.value = ev.infidelity;
  out.null_gradient = ev.null_gradient;
  out.gradient.resize(size());
  RVec g = map_.adjoint(ev.gradient.leftCols(nc));
  if (problem_.bound) {
    const double b = *problem_.bound;
    const RVec th = x.head(map_.n_params()).array().tanh().matrix();
    g = g.cwiseProduct((b * (1.0 - th.array().square())).matrix());
  }
  out.gradient.head(map_.n_params()) = g;
  if (problem_.optimize_offsets) {
    out.gradient[map_.n_params()] = ev.gradient.col(nc).sum();
    out.gradient[map_.n_params() + 1] = ev.gradient.col(nc + 1).sum();
  }
  return out;
}

OptimizationResult grape_optimize(const OptimizationProblem& problem,
                                  const controls::ControlMap& map, const RVec& init,
                                  std::uint64_t seed) {
  const auto start = Clock::now();
  GrapeObjective objective(problem, map);
  OptimizationResult res;
  res.seed = seed;

  auto opts = lbfgs_options(problem.stop);
  if (problem.optimize_offsets) {
    opts.on_iteration = [&](int, const RVec& x, double) {
      res.offset_trace.push_back(objective.unpack_offsets(x));
    };
  }
  const auto run = optim::lbfgs_minimize(std::cref(objective),
                                         objective.pack(init, problem.hams.offsets), opts);
  res.params = objective.unpack_params(run.x);
  res.offsets = objective.unpack_offsets(run.x);
  res.infidelity = run.value;
  res.trace = run.trace;
  res.grad_norm = run.grad_norm;
  res.status = run.status;
  res.iterations = run.iterations;
  res.evaluations = run.evaluations;
  res.wall_seconds = seconds_since(start);
  return res;
}

// --------------------------------------------------------------------------- GOAT

GoatObjective::GoatObjective(const OptimizationProblem& problem, controls::FourierAnsatz ansatz)
    : problem_(problem),
      ansatz_(std::move(ansatz)),
      hams_(problem.optimize_offsets ? problem.hams.with_offset_controls() : problem.hams) {
  problem.validate();
  if (ansatz_.n_controls() != problem.hams.n_controls()) {
    throw DimensionError("ansatz does not match the Hamiltonian controls");
  }
}

int GoatObjective::size() const { return ansatz_.n_params() + (problem_.optimize_offsets ? 2 : 0); }

RVec GoatObjective::pack(const RVec& params, std::array<double, 2> offsets) const {
  RVec x(size());
  x.head(params.size()) = params;
  if (problem_.optimize_offsets) {
    x[params.size()] = offsets[0];
    x[params.size() + 1] = offsets[1];
  }
  return x;
}

optim::Evaluation GoatObjective::operator()(const RVec& x) const {
  if (x.size() != size()) throw DimensionError("optimizer vector size mismatch");
  auto ansatz = std::make_shared<controls::FourierAnsatz>(ansatz_);
  std::shared_ptr<controls::AnalyticControls> ctrl = ansatz;
  if (problem_.optimize_offsets) {
    const int np = ansatz_.n_params();
    ansatz->set_params(x.head(np));
    ctrl = std::make_shared<controls::WithStaticOffsets>(ansatz,
                                                         std::array{x[np], x[np + 1]});
  } else {
    ansatz->set_params(x);
  }
  const auto prop =
      propagation::goat_propagate(hams_, *ctrl, problem_.ode_tol, &problem_.goal.projector);
  const auto gv = propagation::infidelity(prop, problem_.goal);
  return {gv.infidelity, gv.gradient, gv.null_gradient};
}

OptimizationResult goat_optimize(const OptimizationProblem& problem,
                                 const controls::FourierAnsatz& init, std::uint64_t seed) {
  const auto start = Clock::now();
  GoatObjective objective(problem, init);
  OptimizationResult res;
  res.seed = seed;
  const int np = init.n_params();

  auto opts = lbfgs_options(problem.stop);
  if (problem.optimize_offsets) {
    opts.on_iteration = [&](int, const RVec& x, double) {
      res.offset_trace.push_back({x[np], x[np + 1]});
    };
  }
  const auto run = optim::lbfgs_minimize(std::cref(objective),
                                         objective.pack(init.params(), problem.hams.offsets), opts);
  res.params = run.x.head(np);
  res.offsets = problem.optimize_offsets ? std::array{run.x[np], run.x[np + 1]}
                                         : problem.hams.offsets;
  res.infidelity = run.value;
  res.trace = run.trace;
  res.grad_norm = run.grad_norm;
  res.status = run.status;
  res.iterations = run.iterations;
  res.evaluations = run.evaluations;
  res.wall_seconds = seconds_since(start);
  return res;
}

// --------------------------------------------------------------------------- pruning

std::pair<int, int> weakest_component(const controls::FourierAnsatz& ansatz) {
  std::pair<int, int> best{-1, -1};
  const controls::FourierComponent* weakest = nullptr;
  const auto& comps = ansatz.components();
  for (int k = 0; k < static_cast<int>(comps.size()); ++k) {
    for (int j = 0; j < static_cast<int>(comps[k].size()); ++j) {
      const auto& c = comps[k][j];
      const bool better =
          !weakest || std::abs(c.amplitude) < std::abs(weakest->amplitude) ||
          (std::abs(c.amplitude) == std::abs(weakest->amplitude) &&
           std::abs(c.omega) < std::abs(weakest->omega));
      if (better) {
        weakest = &c;
        best = {k, j};
      }
    }
  }
  if (!weakest) throw DimensionError("ansatz has no components to prune");
  return best;
}

std::vector<PruneStep> prune_fourier(const OptimizationProblem& problem,
                                     const controls::FourierAnsatz& start,
                                     const OptimizationResult& start_result,
                                     const PruneOptions& opts) {
  std::vector<PruneStep> steps;
  controls::FourierAnsatz current = start;
  current.set_params(start_result.params);
  steps.push_back({current, start_result, current.n_components()});

  OptimizationProblem stage = problem;
  stage.hams = problem.hams.with_offsets(start_result.offsets);
  while (current.n_components() > std::max(opts.min_components, 0)) {
    const auto [k, j] = weakest_component(current);
    controls::FourierAnsatz pruned = current.without(k, j);
    if (pruned.n_components() == 0) break;
    OptimizationResult r = goat_optimize(stage, pruned, start_result.seed);
    pruned.set_params(r.params);
    const bool accepted =
        r.succeeded() && (!opts.max_infidelity || r.infidelity <= *opts.max_infidelity);
    stage.hams = stage.hams.with_offsets(r.offsets);
    steps.push_back({pruned, r, pruned.n_components()});
    if (!accepted) break;
    current = std::move(pruned);
  }
  return steps;
}

// --------------------------------------------------------------------------- multistart

MultistartResult multistart(const SeededRun& run, const MultistartOptions& opts) {
  if (opts.restarts < 1) throw DomainError("restarts must be at least 1");
  const int n = opts.restarts;
  std::vector<std::optional<OptimizationResult>> slots(n);

  auto one = [&](int i) {
    const std::uint64_t seed = opts.base_seed + static_cast<std::uint64_t>(i);
    try {
      slots[i] = run(seed);
      slots[i]->seed = seed;
    } catch (const std::exception& e) {
      OptimizationResult failed;
      failed.seed = seed;
      failed.error = e.what();
      slots[i] = std::move(failed);
    }
  };
  auto hit = [&](const OptimizationResult& r) {
    return opts.stop_at && !r.error && r.infidelity <= *opts.stop_at;
  };

  const int threads = std::clamp(opts.threads, 1, n);
  if (threads == 1) {
    for (int i = 0; i < n; ++i) {
      one(i);
      if (hit(*slots[i])) break;
    }
  } else {
    std::atomic<int> next{0};
    std::atomic<int> first_hit{n};
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (int i = next++; i < n && i < first_hit.load(); i = next++) {
          one(i);
          if (hit(*slots[i])) {
            int cur = first_hit.load();
            while (i < cur && !first_hit.compare_exchange_weak(cur, i)) {
            }
          }
        }
      });
    }
    for (auto& th : pool) th.join();
  }

  MultistartResult out;
  for (int i = 0; i < n && slots[i]; ++i) {
    out.runs.push_back(std::move(*slots[i]));
    if (hit(out.runs.back())) break;
  }
  const OptimizationResult* best = nullptr;
  for (const auto& r : out.runs) {
    if (!r.error && (!best || r.infidelity < best->infidelity)) best = &r;
  }
  if (!best) {
    throw NumericalError("every restart failed: " + out.runs.front().error.value_or("unknown"));
  }
  out.best = *best;
  return out;
}

}  // namespace crgate::optimizer
