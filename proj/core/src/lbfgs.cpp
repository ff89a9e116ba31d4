#include "crgate/lbfgs.hpp"

#include <cmath>
#include <deque>
#include <limits>

#include "crgate/errors.hpp"

namespace crgate::optim {

std::string to_string(Status s) {
  switch (s) {
    case Status::Converged: return "converged";
    case Status::TargetReached: return "target-reached";
    case Status::MaxIterations: return "max-iter";
    case Status::LineSearchFailure: return "line-search-failure";
    case Status::NullGradient: return "null-gradient";
  }
  return "unknown";
}

namespace {

struct Point {
  double alpha = 0.0;
  double value = 0.0;
  double slope = 0.0;  // directional derivative
  RVec x;
  Evaluation eval;
};

class Counted {
 public:
  Counted(const Objective& f, int& count) : f_(f), count_(count) {}

  Evaluation operator()(const RVec& x) const {
    ++count_;
    Evaluation e = f_(x);
    if (!std::isfinite(e.value) || !e.gradient.allFinite()) {
      throw NumericalError("objective returned a non-finite value or gradient");
    }
    return e;
  }

 private:
  const Objective& f_;
  int& count_;
};

/// Minimizer of the cubic interpolating (a, fa, da) and (b, fb, db); NaN if none.
double cubic_minimizer(double a, double fa, double da, double b, double fb, double db) {
  const double d1 = da + db - 3.0 * (fa - fb) / (a - b);
  const double disc = d1 * d1 - da * db;
  if (disc < 0.0) return std::numeric_limits<double>::quiet_NaN();
  const double d2 = std::copysign(std::sqrt(disc), b - a);
  const double denom = db - da + 2.0 * d2;
  if (denom == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return b - (b - a) * (db + d2 - d1) / denom;
}

/// Strong-Wolfe line search along `dir`. Returns the accepted point, or the best
/// sufficient-decrease point seen when the curvature condition is never met
/// (alpha = 0 if none).
Point line_search(const Counted& f, const RVec& x, const Point& start, const RVec& dir,
                  double alpha_init, const LbfgsOptions& opts) {
  const double f0 = start.value;
  const double d0 = start.slope;
  auto probe = [&](double alpha) {
    Point p;
    p.alpha = alpha;
    p.x = x + alpha * dir;
    p.eval = f(p.x);
    p.value = p.eval.value;
    p.slope = p.eval.gradient.dot(dir);
    return p;
  };
  auto armijo = [&](const Point& p) { return p.value <= f0 + opts.c1 * p.alpha * d0; };
  auto curvature = [&](const Point& p) { return std::abs(p.slope) <= -opts.c2 * d0; };
  // Near a minimum the predicted decrease drops below roundoff in f and the
  // Armijo test becomes noise; fall back to the approximate Wolfe conditions
  // of Hager and Zhang, which only use the directional derivative.
  auto approx_wolfe = [&](const Point& p) {
    const bool roundoff = -opts.c1 * p.alpha * d0 <= 1e-10 * std::abs(f0);
    return roundoff && p.value <= f0 && p.slope >= opts.c2 * d0 &&
           p.slope <= (2.0 * opts.c1 - 1.0) * d0;
  };

  int evals = 0;
  auto zoom = [&](Point lo, Point hi) -> Point {
    while (evals < opts.max_line_search) {
      const double width = hi.alpha - lo.alpha;
      if (std::abs(width) <= 1e-16 * std::max(1.0, std::abs(lo.alpha))) break;
      double alpha = cubic_minimizer(lo.alpha, lo.value, lo.slope, hi.alpha, hi.value, hi.slope);
      const double left = std::min(lo.alpha, hi.alpha) + 0.1 * std::abs(width);
      const double right = std::max(lo.alpha, hi.alpha) - 0.1 * std::abs(width);
      if (!std::isfinite(alpha) || alpha < left || alpha > right) {
        alpha = 0.5 * (lo.alpha + hi.alpha);
      }
      Point p = probe(alpha);
      ++evals;
      if (approx_wolfe(p)) return p;
      if (!armijo(p) || p.value >= lo.value) {
        hi = std::move(p);
      } else {
        if (curvature(p) || p.eval.null_gradient) return p;
        if (p.slope * (hi.alpha - lo.alpha) >= 0.0) hi = lo;
        lo = std::move(p);
      }
    }
    return lo;
  };

  Point prev = start;
  double alpha = alpha_init;
  while (evals < opts.max_line_search) {
    Point p = probe(alpha);
    ++evals;
    if (approx_wolfe(p)) return p;
    if (!armijo(p) || (prev.alpha > 0.0 && p.value >= prev.value)) return zoom(prev, p);
    if (curvature(p) || p.eval.null_gradient) return p;
    if (p.slope >= 0.0) return zoom(p, prev);
    prev = std::move(p);
    alpha *= 2.0;
  }
  return prev;
}

}  // namespace

LbfgsResult lbfgs_minimize(const Objective& objective, const RVec& x0, const LbfgsOptions& opts) {
  if (!x0.allFinite()) throw NumericalError("initial point is not finite");
  LbfgsResult res;
  Counted f(objective, res.evaluations);

  RVec x = x0;
  Evaluation cur = f(x);
  res.trace.push_back(cur.value);

  auto finish = [&](Status s) {
    res.x = x;
    res.value = cur.value;
    res.gradient = cur.gradient;
    res.grad_norm = cur.gradient.size() ? cur.gradient.cwiseAbs().maxCoeff() : 0.0;
    res.status = s;
    return res;
  };
  auto stop_status = [&]() -> std::optional<Status> {
    if (cur.null_gradient) return Status::NullGradient;
    if (opts.target_value && cur.value <= *opts.target_value) return Status::TargetReached;
    const double gn = cur.gradient.size() ? cur.gradient.cwiseAbs().maxCoeff() : 0.0;
    if (gn <= opts.grad_tol) return Status::Converged;
    return std::nullopt;
  };
  if (auto s = stop_status()) return finish(*s);

  std::deque<RVec> s_hist, y_hist;
  std::deque<double> rho_hist;

  while (res.iterations < opts.max_iterations) {
    // Two-loop recursion.
    RVec q = cur.gradient;
    std::vector<double> alphas(s_hist.size());
    for (int i = static_cast<int>(s_hist.size()) - 1; i >= 0; --i) {
      alphas[i] = rho_hist[i] * s_hist[i].dot(q);
      q -= alphas[i] * y_hist[i];
    }
    if (!s_hist.empty()) q *= s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
    for (std::size_t i = 0; i < s_hist.size(); ++i) {
      const double beta = rho_hist[i] * y_hist[i].dot(q);
      q += (alphas[i] - beta) * s_hist[i];
    }
    RVec dir = -q;

    bool fresh = s_hist.empty();
    double slope = cur.gradient.dot(dir);
    if (!(slope < 0.0)) {
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      dir = -cur.gradient;
      slope = cur.gradient.dot(dir);
      fresh = true;
    }

    Point start;
    start.value = cur.value;
    start.slope = slope;
    double alpha0 = fresh ? std::min(1.0, 1.0 / cur.gradient.norm()) : 1.0;
    Point next = line_search(f, x, start, dir, alpha0, opts);
    if (next.alpha == 0.0 && !fresh) {
      // Retry once along steepest descent with a cleared memory.
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      dir = -cur.gradient;
      start.slope = cur.gradient.dot(dir);
      next = line_search(f, x, start, dir, std::min(1.0, 1.0 / cur.gradient.norm()), opts);
    }
    if (next.alpha == 0.0 || !(next.value <= cur.value)) return finish(Status::LineSearchFailure);

    const RVec s = next.x - x;
    const RVec yv = next.eval.gradient - cur.gradient;
    const double sy = s.dot(yv);
    const double prev_value = cur.value;
    x = std::move(next.x);
    cur = std::move(next.eval);
    ++res.iterations;
    res.trace.push_back(cur.value);
    if (opts.on_iteration) opts.on_iteration(res.iterations, x, cur.value);

    if (sy > 1e-12 * s.norm() * yv.norm() && sy > 0.0) {
      s_hist.push_back(s);
      y_hist.push_back(yv);
      rho_hist.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > opts.memory) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }
    if (auto st = stop_status()) return finish(*st);
    if (opts.stall_tol > 0.0 &&
        prev_value - cur.value <= opts.stall_tol * std::max(std::abs(prev_value), 1e-300)) {
      return finish(Status::Converged);
    }
  }
  return finish(Status::MaxIterations);
}

}  // namespace crgate::optim
