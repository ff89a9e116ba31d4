#pragma once

#include <complex>
#include <numbers>

#include <Eigen/Dense>

namespace crgate {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using RMat = Eigen::MatrixXd;
using RVec = Eigen::VectorXd;

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr cplx kI{0.0, 1.0};

/// Converts an ordinary frequency in GHz to an angular frequency in rad/ns.
constexpr double ghz_to_angular(double ghz) { return kTwoPi * ghz; }
constexpr double angular_to_ghz(double rad_per_ns) { return rad_per_ns / kTwoPi; }

/// Largest absolute elementwise deviation of `m` from its adjoint.
inline double hermiticity_error(const Mat& m) {
  if (m.rows() != m.cols()) return std::numeric_limits<double>::infinity();
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

/// max |U^dagger U - 1| over all entries.
inline double unitarity_error(const Mat& u) {
  return (u.adjoint() * u - Mat::Identity(u.cols(), u.cols())).cwiseAbs().maxCoeff();
}

}  // namespace crgate
