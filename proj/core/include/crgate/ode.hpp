#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

#include "crgate/errors.hpp"

namespace crgate::ode {

struct Tolerances {
  double rtol = 1e-9;
  double atol = 1e-12;
};

struct Options {
  Tolerances tol{};
  double initial_step = 0.0;  // 0: automatic
  double max_step = std::numeric_limits<double>::infinity();
  long max_steps = 50'000'000;
};

struct Stats {
  long accepted = 0;
  long rejected = 0;
  long evaluations = 0;
};

/// Dormand-Prince 5(4) with FSAL and a standard I-controller. `State` is any
/// Eigen dense object supporting +, scalar *, and cwiseAbs(); `rhs(t, y, dydt)`
/// writes the derivative; `observe(t, y)` is called after every accepted step.
/// Throws IntegrationError on step-size underflow or a non-finite state.
template <class State, class Rhs, class Observer>
Stats integrate(Rhs&& rhs, State& y, double t0, double t1, const Options& opts,
                Observer&& observe) {
  Stats stats;
  if (t1 == t0) return stats;
  if (!(t1 > t0)) throw IntegrationError("integration interval must be increasing", t0);

  constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  constexpr double a21 = 1.0 / 5;
  constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                   a54 = -212.0 / 729;
  constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                   a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                   b6 = 11.0 / 84;
  // Error weights: fifth-order minus embedded fourth-order solution.
  constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                   e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

  const double rtol = opts.tol.rtol;
  const double atol = opts.tol.atol;
  const double span = t1 - t0;

  State k1 = y, k2 = y, k3 = y, k4 = y, k5 = y, k6 = y, k7 = y, tmp = y, ynew = y;
  rhs(t0, y, k1);
  ++stats.evaluations;

  auto error_norm = [&](const State& a, const State& b, const State& err) {
    const auto scale = (atol + rtol * a.cwiseAbs().cwiseMax(b.cwiseAbs()).array()).eval();
    return (err.cwiseAbs().array() / scale).maxCoeff();
  };

  double h = opts.initial_step;
  if (!(h > 0.0)) {
    const double d0 = y.cwiseAbs().maxCoeff();
    const double d1 = k1.cwiseAbs().maxCoeff();
    h = (d0 > 1e-5 && d1 > 1e-5) ? 0.01 * d0 / d1 : 1e-6;
    h = std::min(h, span);
  }
  h = std::min(h, opts.max_step);

  double t = t0;
  double err_prev = 1e-4;
  bool last_rejected = false;
  while (t < t1) {
    if (stats.accepted + stats.rejected >= opts.max_steps) {
      throw IntegrationError("maximum number of steps exceeded", t);
    }
    const bool final_step = t + h >= t1 - 1e-14 * std::max(1.0, std::abs(t1));
    if (final_step) h = t1 - t;
    if (h < 1e-14 * std::max(1.0, std::abs(t)) * 16.0) {
      throw IntegrationError("step size underflow", t);
    }

    tmp = y + h * (a21 * k1);
    rhs(t + c2 * h, tmp, k2);
    tmp = y + h * (a31 * k1 + a32 * k2);
    rhs(t + c3 * h, tmp, k3);
    tmp = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
    rhs(t + c4 * h, tmp, k4);
    tmp = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
    rhs(t + c5 * h, tmp, k5);
    tmp = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
    rhs(t + h, tmp, k6);
    ynew = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    const double t_next = final_step ? t1 : t + h;
    rhs(t_next, ynew, k7);
    stats.evaluations += 6;

    tmp = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    const double err = error_norm(y, ynew, tmp);
    if (!std::isfinite(err)) throw IntegrationError("non-finite state", t);

    if (err <= 1.0) {
      t = t_next;
      y = ynew;
      k1 = k7;
      ++stats.accepted;
      observe(t, static_cast<const State&>(y));
      // PI step-size control (Hairer & Wanner, beta = 0.04).
      double fac = 0.9 * std::pow(std::max(err, 1e-10), -0.7 / 5.0) *
                   std::pow(err_prev, 0.04);
      fac = std::clamp(fac, 0.2, last_rejected ? 1.0 : 10.0);
      err_prev = std::max(err, 1e-4);
      h = std::min(h * fac, opts.max_step);
      last_rejected = false;
    } else {
      ++stats.rejected;
      h *= std::max(0.2, 0.9 * std::pow(err, -0.2));
      last_rejected = true;
    }
  }
  return stats;
}

template <class State, class Rhs>
Stats integrate(Rhs&& rhs, State& y, double t0, double t1, const Options& opts) {
  return integrate(std::forward<Rhs>(rhs), y, t0, t1, opts, [](double, const State&) {});
}

}  // namespace crgate::ode
