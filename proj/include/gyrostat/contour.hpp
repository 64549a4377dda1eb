#pragma once

// Rank criterion for the visible contour of the projection (w, nu) -> nu.
//
// Over a point nu of the Poisson sphere the fiber is the w-space, so the
// fiber-restricted derivative of (K1, K2, K3) has the rows
//   dK1/dw = 2 A m,   dK2/dw = 2 A w,   dK3/dw = A nu,      m = A w + lambda.
// Its determinant is 4 det(A) det[m, w, nu] = -4 det(A) [w x m] . nu, so the
// rank drops exactly where the triple product vanishes.

#include <Eigen/SVD>

#include "gyrostat/core.hpp"

namespace gyrostat {

inline constexpr double kDefaultRankTolerance = 1e-10;

struct FiberJacobian {
  Mat3 matrix;
  Vec3 singular_values;  // descending
};

inline FiberJacobian fiber_jacobian(const Vec3& omega, const Vec3& nu, const GyrostatParams& p) {
  const Vec3& inertia = p.inertia();
  const Vec3 m = angular_momentum(omega, p);
  FiberJacobian j;
  j.matrix.row(0) = 2.0 * inertia.cwiseProduct(m).transpose();
  j.matrix.row(1) = 2.0 * inertia.cwiseProduct(omega).transpose();
  j.matrix.row(2) = inertia.cwiseProduct(nu).transpose();
  j.singular_values = Eigen::JacobiSVD<Mat3>(j.matrix).singularValues();
  return j;
}

inline FiberJacobian fiber_jacobian(const State& s, const GyrostatParams& p) {
  return fiber_jacobian(s.omega(), s.nu(), p);
}

/// [w x (A w + lambda)] . nu
inline double contour_condition(const Vec3& omega, const Vec3& nu, const GyrostatParams& p) {
  return omega.cross(angular_momentum(omega, p)).dot(nu);
}

inline double contour_condition(const State& s, const GyrostatParams& p) {
  return contour_condition(s.omega(), s.nu(), p);
}

/// 3 minus the number of singular values above `relative_eps` times the largest one.
inline int rank_defect(const FiberJacobian& j, double relative_eps = kDefaultRankTolerance) {
  if (!(relative_eps > 0.0)) throw InvalidInput("rank tolerance must be a positive relative value");
  const double cutoff = relative_eps * j.singular_values[0];
  int rank = 0;
  for (int i = 0; i < 3; ++i) {
    if (j.singular_values[i] > cutoff) ++rank;
  }
  return 3 - rank;
}

inline int rank_defect(const State& s, const GyrostatParams& p, double relative_eps = kDefaultRankTolerance) {
  return rank_defect(fiber_jacobian(s, p), relative_eps);
}

/// Contour condition rescaled to the relative smallest singular value:
/// |det| / (s1^2 s2) with |det| = 4 |det A| |[w x m] . nu|. Comparable with the
/// relative rank tolerance.
inline double normalized_contour_condition(const State& s, const GyrostatParams& p) {
  const FiberJacobian j = fiber_jacobian(s, p);
  const double s1 = j.singular_values[0], s2 = j.singular_values[1];
  if (s1 == 0.0 || s2 == 0.0) return 0.0;
  return 4.0 * p.det_inertia() * std::abs(contour_condition(s, p)) / (s1 * s1 * s2);
}

}  // namespace gyrostat
