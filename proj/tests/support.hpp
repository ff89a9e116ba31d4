#pragma once

#include <cmath>
#include <functional>
#include <random>

#include <gtest/gtest.h>

#include "crgate/types.hpp"

namespace crgate::test {

inline Mat random_hermitian(int n, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> d(0.0, scale);
  Mat m(n, n);
  for (int c = 0; c < n; ++c) {
    for (int r = 0; r < n; ++r) m(r, c) = cplx{d(rng), d(rng)};
  }
  return 0.5 * (m + m.adjoint());
}

inline double max_abs(const Mat& m) { return m.cwiseAbs().maxCoeff(); }

/// Central difference of a scalar function along coordinate i.
inline double central_difference(const std::function<double(const RVec&)>& f, const RVec& x, int i,
                                  double h) {
  RVec xp = x, xm = x;
  xp[i] += h;
  xm[i] -= h;
  return (f(xp) - f(xm)) / (2.0 * h);
}

/// |a - b| <= max(rel * max(|a|, |b|), floor)
inline ::testing::AssertionResult close_rel(double a, double b, double rel, double floor) {
  const double tol = std::max(rel * std::max(std::abs(a), std::abs(b)), floor);
  if (std::abs(a - b) <= tol) return ::testing::AssertionSuccess();
  return ::testing::AssertionFailure() << a << " vs " << b << " (diff " << std::abs(a - b)
                                       << ", tol " << tol << ")";
}

}  // namespace crgate::test
