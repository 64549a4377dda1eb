#pragma once

// Free gyrostat: parameters, phase-space state, the three first integrals and
// the equations of motion
//
//   A dw/dt + w x (A w + lambda) = 0,    dnu/dt = nu x w,    |nu| = 1.

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "gyrostat/errors.hpp"

namespace gyrostat {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Tolerance on |nu|^2 - 1 accepted when a State is built.
inline constexpr double kUnitTolerance = 1e-12;

class GyrostatParams {
 public:
  GyrostatParams(const Vec3& inertia, const Vec3& lambda) : inertia_(inertia), lambda_(lambda) {
    for (int i = 0; i < 3; ++i) {
      if (!(inertia[i] > 0.0) || !std::isfinite(inertia[i])) {
        std::ostringstream os;
        os << "principal moment A" << i + 1 << " must be positive and finite, got " << inertia[i];
        throw InvalidInput(os.str());
      }
      if (!std::isfinite(lambda[i])) throw InvalidInput("gyrostatic moment must be finite");
    }
    inv_inertia_ = inertia_.cwiseInverse();
    sorted_inv_ = {inv_inertia_[0], inv_inertia_[1], inv_inertia_[2]};
    std::sort(sorted_inv_.begin(), sorted_inv_.end());
  }

  const Vec3& inertia() const noexcept { return inertia_; }
  const Vec3& lambda() const noexcept { return lambda_; }
  /// Diagonal of A^{-1}, in the caller's axis order.
  const Vec3& inv_inertia() const noexcept { return inv_inertia_; }
  /// Diagonal of A^{-1} in increasing order; the poles of the bifurcation curve.
  const std::array<double, 3>& poles() const noexcept { return sorted_inv_; }
  double det_inertia() const noexcept { return inertia_.prod(); }

  /// All lambda_i nonzero and the inverse moments pairwise distinct.
  bool is_generic() const noexcept {
    const double scale = sorted_inv_[2];
    const bool distinct = (sorted_inv_[1] - sorted_inv_[0]) > 1e-12 * scale &&
                          (sorted_inv_[2] - sorted_inv_[1]) > 1e-12 * scale;
    return distinct && lambda_[0] != 0.0 && lambda_[1] != 0.0 && lambda_[2] != 0.0;
  }

  void require_generic() const {
    if (is_generic()) return;
    std::ostringstream os;
    os << "non-generic gyrostat: need all lambda_i != 0 and distinct principal moments (A = ["
       << inertia_[0] << ", " << inertia_[1] << ", " << inertia_[2] << "], lambda = [" << lambda_[0]
       << ", " << lambda_[1] << ", " << lambda_[2] << "])";
    throw NonGenericParams(os.str());
  }

 private:
  Vec3 inertia_;
  Vec3 lambda_;
  Vec3 inv_inertia_;
  std::array<double, 3> sorted_inv_{};
};

class State {
 public:
  State(const Vec3& omega, const Vec3& nu) : omega_(omega), nu_(nu) {
    if (!(std::abs(nu.squaredNorm() - 1.0) <= kUnitTolerance)) {
      std::ostringstream os;
      os.precision(17);
      os << "Poisson vector must be unit length, |nu|^2 = " << nu.squaredNorm();
      throw InvalidInput(os.str());
    }
  }

  const Vec3& omega() const noexcept { return omega_; }
  const Vec3& nu() const noexcept { return nu_; }

 private:
  Vec3 omega_;
  Vec3 nu_;
};

struct IntegralConstants {
  double k1 = 0.0;
  double k2 = 0.0;
  double k3 = 0.0;

  /// Cauchy-Schwarz on K3 = m.nu with |nu| = 1.
  bool feasible() const noexcept { return k1 >= k3 * k3; }
  Vec3 as_vector() const { return {k1, k2, k3}; }
};

/// m = A w + lambda.
inline Vec3 angular_momentum(const Vec3& omega, const GyrostatParams& p) {
  return p.inertia().cwiseProduct(omega) + p.lambda();
}

inline IntegralConstants integrals(const Vec3& omega, const Vec3& nu, const GyrostatParams& p) {
  const Vec3 m = angular_momentum(omega, p);
  return {m.squaredNorm(), p.inertia().cwiseProduct(omega).dot(omega), m.dot(nu)};
}

inline IntegralConstants integrals(const State& s, const GyrostatParams& p) {
  return integrals(s.omega(), s.nu(), p);
}

struct Tangent {
  Vec3 d_omega;
  Vec3 d_nu;
};

/// Vector field of the free gyrostat; defined for any nu, not only unit ones.
inline Tangent rhs(const Vec3& omega, const Vec3& nu, const GyrostatParams& p) {
  const Vec3 m = angular_momentum(omega, p);
  return {-p.inv_inertia().cwiseProduct(omega.cross(m)), nu.cross(omega)};
}

inline Tangent rhs(const State& s, const GyrostatParams& p) { return rhs(s.omega(), s.nu(), p); }

}  // namespace gyrostat
