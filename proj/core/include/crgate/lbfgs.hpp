#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "crgate/types.hpp"

namespace crgate::optim {

/// Objective value and gradient at one point.
struct Evaluation {
  double value = 0.0;
  RVec gradient;
  /// Gradient is undefined at this point (e.g. vanishing gate overlap).
  bool null_gradient = false;
};

using Objective = std::function<Evaluation(const RVec&)>;

enum class Status {
  Converged,          // gradient infinity norm below tolerance
  TargetReached,      // objective below the target value
  MaxIterations,
  LineSearchFailure,
  NullGradient,       // objective flagged an undefined gradient
};

std::string to_string(Status s);

struct LbfgsOptions {
  int memory = 10;
  double c1 = 1e-4;
  double c2 = 0.9;
  double grad_tol = 1e-9;
  int max_iterations = 2000;
  std::optional<double> target_value;
  int max_line_search = 40;
  /// Relative decrease over one iteration below which the search counts as
  /// stalled; 0 disables the test.
  double stall_tol = 0.0;
  /// Called after every accepted iteration with (iteration, x, value).
  std::function<void(int, const RVec&, double)> on_iteration;
};

struct LbfgsResult {
  RVec x;
  double value = 0.0;
  RVec gradient;
  double grad_norm = 0.0;  // infinity norm
  Status status = Status::MaxIterations;
  int iterations = 0;
  int evaluations = 0;
  /// Objective value at x0 followed by the value after each accepted iteration.
  std::vector<double> trace;
};

/// Limited-memory BFGS with a strong-Wolfe line search (bracketing + zoom with
/// cubic interpolation). Throws NumericalError when the objective returns a
/// non-finite value or gradient.
LbfgsResult lbfgs_minimize(const Objective& objective, const RVec& x0,
                           const LbfgsOptions& opts = {});

}  // namespace crgate::optim
