#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <string>

#include "bearings/errors.hpp"

namespace bearings {

inline constexpr double kRotationTolerance = 1e-9;

/// skew(x) y = x cross y.
inline Eigen::Matrix3d skew(const Eigen::Vector3d& x) {
  Eigen::Matrix3d m;
  m << 0.0, -x(2), x(1), x(2), 0.0, -x(0), -x(1), x(0), 0.0;
  return m;
}

inline Eigen::Vector3d unskew(const Eigen::Matrix3d& m, double tol = kRotationTolerance) {
  if ((m + m.transpose()).norm() > tol)
    throw ValidationError("unskew of a non-skew-symmetric matrix, |M + M^T| = " +
                          std::to_string((m + m.transpose()).norm()));
  return {m(2, 1), m(0, 2), m(1, 0)};
}

/// Rodrigues rotation about axis x/|x| by angle |x|.
inline Eigen::Matrix3d so3_exp(const Eigen::Vector3d& x) {
  const double angle = x.norm();
  if (angle < 1e-12) {
    // Second-order expansion keeps the update exact to machine precision
    // for the tiny per-stage angles the integrator produces.
    const Eigen::Matrix3d k = skew(x);
    return Eigen::Matrix3d::Identity() + k + 0.5 * k * k;
  }
  const Eigen::Matrix3d k = skew(x / angle);
  return Eigen::Matrix3d::Identity() + std::sin(angle) * k + (1.0 - std::cos(angle)) * k * k;
}

/// Nearest rotation in Frobenius norm (polar factor). Restores
/// orthonormality after accumulated roundoff and averages rotations.
inline Eigen::Matrix3d project_to_rotation(const Eigen::Matrix3d& m) {
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d r = svd.matrixU() * svd.matrixV().transpose();
  if (r.determinant() < 0.0) {
    Eigen::Matrix3d flip = Eigen::Matrix3d::Identity();
    flip(2, 2) = -1.0;
    r = svd.matrixU() * flip * svd.matrixV().transpose();
  }
  return r;
}

inline bool is_rotation(const Eigen::Matrix3d& m, double tol = kRotationTolerance) {
  return (m.transpose() * m - Eigen::Matrix3d::Identity()).norm() <= tol &&
         std::abs(m.determinant() - 1.0) <= tol;
}

inline void require_rotation(const Eigen::Matrix3d& m, double tol = kRotationTolerance) {
  if (!is_rotation(m, tol))
    throw ValidationError("matrix is not a rotation: |R^T R - I| = " +
                          std::to_string((m.transpose() * m - Eigen::Matrix3d::Identity()).norm()) +
                          ", det = " + std::to_string(m.determinant()));
}

/// Geodesic rotation angle in [0, pi].
inline double rotation_angle(const Eigen::Matrix3d& r) {
  const double c = std::clamp((r.trace() - 1.0) / 2.0, -1.0, 1.0);
  return std::acos(c);
}

inline Eigen::Matrix3d rotation_z(double theta) {
  return so3_exp(Eigen::Vector3d(0.0, 0.0, theta));
}

}  // namespace bearings
