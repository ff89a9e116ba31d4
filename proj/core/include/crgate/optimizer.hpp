#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "crgate/controls.hpp"
#include "crgate/lbfgs.hpp"
#include "crgate/model.hpp"
#include "crgate/ode.hpp"
#include "crgate/propagation.hpp"

namespace crgate::optimizer {

using optim::Status;

struct StopCriteria {
  double grad_tol = 1e-9;
  int max_iterations = 2000;
  std::optional<double> target_infidelity;
};

/// Gate-synthesis problem shared by the GRAPE and GOAT drivers.
struct OptimizationProblem {
  /// Drift carries the starting static offsets f_k (hams.offsets).
  model::HamiltonianSet hams;
  propagation::GoalSpec goal;
  double duration = 0.0;
  /// Amplitude bound for GRAPE parameters, enforced as c = B tanh(u). Unset
  /// means unconstrained. Fourier runs use the ansatz's own bound.
  std::optional<double> bound;
  /// Optimize f_1, f_2 alongside the pulse parameters.
  bool optimize_offsets = false;
  propagation::GradientMode gradient_mode = propagation::GradientMode::Exact;
  ode::Tolerances ode_tol{};
  StopCriteria stop{};

  void validate() const;
};

struct OptimizationResult {
  /// Physical pulse parameters (after the bound map), without the offsets.
  RVec params;
  std::array<double, 2> offsets{0.0, 0.0};
  double infidelity = 1.0;
  /// Infidelity at the start and after each accepted iteration.
  std::vector<double> trace;
  /// f_1, f_2 after each accepted iteration (empty unless offsets are optimized).
  std::vector<std::array<double, 2>> offset_trace;
  double grad_norm = 0.0;
  Status status = Status::MaxIterations;
  int iterations = 0;
  int evaluations = 0;
  std::uint64_t seed = 0;
  double wall_seconds = 0.0;
  /// Set when the run threw; the other fields are then meaningless.
  std::optional<std::string> error;

  bool succeeded() const {
    return !error && (status == Status::Converged || status == Status::TargetReached);
  }
};

/// Objective of a GRAPE run on the optimizer's flat vector
/// [u (map parameters, tanh-reparametrized when bounded), f_1, f_2 (optional)].
class GrapeObjective {
 public:
  GrapeObjective(const OptimizationProblem& problem, const controls::ControlMap& map);

  int size() const;
  optim::Evaluation operator()(const RVec& x) const;

  /// Optimizer vector for physical parameters and offsets (inverse bound map).
  RVec pack(const RVec& params, std::array<double, 2> offsets) const;
  RVec unpack_params(const RVec& x) const;
  std::array<double, 2> unpack_offsets(const RVec& x) const;

 private:
  const OptimizationProblem& problem_;
  const controls::ControlMap& map_;
  model::HamiltonianSet hams_;
};

/// L-BFGS over the parameters of `map`, starting from physical parameters
/// `init` (clamped just inside the bound). The gradient is chained through the
/// linear map and the tanh reparametrization.
OptimizationResult grape_optimize(const OptimizationProblem& problem,
                                  const controls::ControlMap& map, const RVec& init,
                                  std::uint64_t seed = 0);

/// GOAT objective over the Fourier parameters (plus optional offsets),
/// propagating only the projector columns.
class GoatObjective {
 public:
  GoatObjective(const OptimizationProblem& problem, controls::FourierAnsatz ansatz);

  int size() const;
  optim::Evaluation operator()(const RVec& x) const;
  RVec pack(const RVec& params, std::array<double, 2> offsets) const;

 private:
  const OptimizationProblem& problem_;
  controls::FourierAnsatz ansatz_;
  model::HamiltonianSet hams_;
};

OptimizationResult goat_optimize(const OptimizationProblem& problem,
                                 const controls::FourierAnsatz& init, std::uint64_t seed = 0);

struct PruneStep {
  controls::FourierAnsatz ansatz;  // reoptimized parameters
  OptimizationResult result;
  int components = 0;
};

struct PruneOptions {
  int min_components = 1;
  /// A reoptimized ansatz whose infidelity exceeds this also ends the loop.
  std::optional<double> max_infidelity;
};

/// Repeatedly removes the component with the smallest |A| (ties: lower
/// frequency, then lower control index) and reoptimizes. The first element is
/// the starting point; the loop ends when a reoptimization neither converges
/// nor reaches the target, or at `min_components`.
std::vector<PruneStep> prune_fourier(const OptimizationProblem& problem,
                                     const controls::FourierAnsatz& start,
                                     const OptimizationResult& start_result,
                                     const PruneOptions& opts = {});

/// Location of the component prune_fourier would drop next.
std::pair<int, int> weakest_component(const controls::FourierAnsatz& ansatz);

struct MultistartOptions {
  int restarts = 1;
  std::uint64_t base_seed = 0;
  int threads = 1;
  /// Stop after the first seed (in seed order) whose infidelity is at or below
  /// this value; later seeds are discarded even if they already ran.
  std::optional<double> stop_at;
};

struct MultistartResult {
  OptimizationResult best;
  std::vector<OptimizationResult> runs;  // seed order
};

using SeededRun = std::function<OptimizationResult(std::uint64_t seed)>;

/// Runs seeds base_seed, base_seed + 1, ... Failed runs are recorded; throws
/// only when every run fails.
MultistartResult multistart(const SeededRun& run, const MultistartOptions& opts);

}  // namespace crgate::optimizer
