#pragma once

// Adaptive integration of the gyrostat equations with conservation monitoring.
//
// Dormand-Prince 5(4) with a PI step-size controller (Hairer/Wanner constants).
// nu is pulled back onto the unit sphere after every accepted step; the drift
// report records |nu|^2 before that renormalization so the constraint error
// stays visible.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>
#include <vector>

#include "gyrostat/core.hpp"

namespace gyrostat {

using SpherePoint = Vec3;

struct SphereCurve {
  std::vector<SpherePoint> points;
  bool closed = false;
};

struct Drift {
  double k1 = 0.0;
  double k2 = 0.0;
  double k3 = 0.0;
  double nu_norm = 0.0;

  double max_integral() const noexcept { return std::max({k1, k2, k3}); }
};

struct Trajectory {
  std::vector<double> times;
  std::vector<State> states;
  Drift drift;

  IntegralConstants initial_integrals(const GyrostatParams& p) const {
    return integrals(states.front(), p);
  }

  /// Linear interpolation between accepted steps, clamped to the time span.
  State sample(double t) const {
    if (t <= times.front()) return states.front();
    if (t >= times.back()) return states.back();
    const auto it = std::upper_bound(times.begin(), times.end(), t);
    const auto hi = static_cast<std::size_t>(it - times.begin());
    const std::size_t lo = hi - 1;
    const double w = (t - times[lo]) / (times[hi] - times[lo]);
    const Vec3 omega = (1.0 - w) * states[lo].omega() + w * states[hi].omega();
    const Vec3 nu = ((1.0 - w) * states[lo].nu() + w * states[hi].nu()).normalized();
    return {omega, nu};
  }
};

struct IntegratorOptions {
  double tol = 1e-10;
  double max_step = std::numeric_limits<double>::infinity();
  std::size_t max_steps = 10'000'000;
};

namespace detail {

using Vec6 = Eigen::Matrix<double, 6, 1>;

inline Vec6 pack(const Vec3& omega, const Vec3& nu) {
  Vec6 y;
  y << omega, nu;
  return y;
}

inline Vec6 field(const Vec6& y, const GyrostatParams& p) {
  const Tangent t = rhs(Vec3(y.head<3>()), Vec3(y.tail<3>()), p);
  return pack(t.d_omega, t.d_nu);
}

// Relative deviation; `floor` keeps K3 meaningful when its initial value is ~0.
inline double relative(double value, double reference, double floor) {
  return std::abs(value - reference) / std::max(std::abs(reference), floor);
}

}  // namespace detail

inline Trajectory integrate(const State& state0, const GyrostatParams& p, double t_end,
                            const IntegratorOptions& opt = {}) {
  using detail::Vec6;
  if (!(t_end > 0.0) || !std::isfinite(t_end)) throw InvalidInput("t_end must be positive and finite");
  if (!(opt.tol >= 1e-14 && opt.tol <= 1e-3)) throw InvalidInput("tol must lie in [1e-14, 1e-3]");

  // Dormand-Prince 5(4) tableau.
  constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  constexpr double a21 = 1.0 / 5;
  constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                   a54 = -212.0 / 729;
  constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                   a65 = -5103.0 / 18656;
  constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                   b6 = 11.0 / 84;
  constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                   e6 = 22.0 / 525, e7 = -1.0 / 40;
  (void)c2, (void)c3, (void)c4, (void)c5;  // autonomous system

  constexpr double safety = 0.9, beta = 0.04, expo = 0.2 - beta * 0.75;
  constexpr double fac_min = 0.2, fac_max = 10.0;

  const IntegralConstants k0 = integrals(state0, p);
  const double k3_floor = std::max(std::sqrt(k0.k1), std::numeric_limits<double>::min());
  const double tiny = std::numeric_limits<double>::min();

  Trajectory traj;
  traj.times.push_back(0.0);
  traj.states.push_back(state0);

  Vec6 y = detail::pack(state0.omega(), state0.nu());
  Vec6 k1 = detail::field(y, p);

  auto error_scale = [&](const Vec6& a, const Vec6& b) {
    return (opt.tol + opt.tol * a.cwiseAbs().cwiseMax(b.cwiseAbs()).array()).matrix();
  };

  // Initial step from the magnitude of the vector field.
  double h;
  {
    const Vec6 sc = error_scale(y, y);
    const double d0 = (y.array() / sc.array()).matrix().norm() / std::sqrt(6.0);
    const double d1 = (k1.array() / sc.array()).matrix().norm() / std::sqrt(6.0);
    h = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    h = std::min({h, t_end, opt.max_step});
  }

  double t = 0.0;
  double err_old = 1e-4;
  bool rejected = false;
  std::size_t steps = 0;

  while (t < t_end) {
    if (++steps > opt.max_steps) throw StepFailure("step budget exhausted", t);
    if (h < 16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t))) {
      std::ostringstream os;
      os << "step size underflow at t = " << t;
      throw StepFailure(os.str(), t);
    }
    const bool last = t + h >= t_end;
    if (last) h = t_end - t;

    const Vec6 k2 = detail::field(y + h * (a21 * k1), p);
    const Vec6 k3 = detail::field(y + h * (a31 * k1 + a32 * k2), p);
    const Vec6 k4 = detail::field(y + h * (a41 * k1 + a42 * k2 + a43 * k3), p);
    const Vec6 k5 = detail::field(y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4), p);
    const Vec6 k6 = detail::field(y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5), p);
    const Vec6 y_new = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    const Vec6 k7 = detail::field(y_new, p);
    const Vec6 err_vec = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

    const Vec6 sc = error_scale(y, y_new);
    const double err = (err_vec.array() / sc.array()).matrix().norm() / std::sqrt(6.0);

    if (err <= 1.0) {
      const double fac11 = std::pow(std::max(err, tiny), expo);
      double fac = fac11 / std::pow(err_old, beta) / safety;
      fac = std::clamp(fac, 1.0 / fac_max, 1.0 / fac_min);
      double h_next = h / fac;
      err_old = std::max(err, 1e-4);

      t = last ? t_end : t + h;
      Vec3 omega = y_new.head<3>();
      Vec3 nu = y_new.tail<3>();
      traj.drift.nu_norm = std::max(traj.drift.nu_norm, std::abs(nu.squaredNorm() - 1.0));
      nu.normalize();
      y = detail::pack(omega, nu);
      k1 = detail::field(y, p);

      traj.times.push_back(t);
      traj.states.emplace_back(omega, nu);
      const IntegralConstants k = integrals(traj.states.back(), p);
      traj.drift.k1 = std::max(traj.drift.k1, detail::relative(k.k1, k0.k1, tiny));
      traj.drift.k2 = std::max(traj.drift.k2, detail::relative(k.k2, k0.k2, tiny));
      traj.drift.k3 = std::max(traj.drift.k3, detail::relative(k.k3, k0.k3, k3_floor));

      if (rejected) h_next = std::min(h_next, h);
      rejected = false;
      h = std::min(h_next, opt.max_step);
    } else {
      const double fac11 = std::pow(err, expo);
      h /= std::min(1.0 / fac_min, fac11 / safety);
      rejected = true;
    }
  }
  return traj;
}

inline Trajectory integrate(const State& state0, const GyrostatParams& p, double t_end, double tol) {
  IntegratorOptions opt;
  opt.tol = tol;
  return integrate(state0, p, t_end, opt);
}

/// The flow is reversible under (w, lambda, t) -> (-w, -lambda, -t).
inline GyrostatParams reversed(const GyrostatParams& p) { return {p.inertia(), -p.lambda()}; }
inline State reversed(const State& s) { return {-s.omega(), s.nu()}; }

/// Projection to the Poisson sphere.
inline SphereCurve project(const Trajectory& traj) {
  SphereCurve curve;
  curve.points.reserve(traj.states.size());
  for (const State& s : traj.states) curve.points.push_back(s.nu());
  return curve;
}

/// CSV with columns t, w1..w3, nu1..nu3, K1..K3 at 17 significant digits.
inline void write_csv(std::ostream& os, const Trajectory& traj, const GyrostatParams& p) {
  const auto old_precision = os.precision(17);
  os << "t,omega1,omega2,omega3,nu1,nu2,nu3,K1,K2,K3\n";
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    const State& s = traj.states[i];
    const IntegralConstants k = integrals(s, p);
    os << traj.times[i] << ',' << s.omega()[0] << ',' << s.omega()[1] << ',' << s.omega()[2] << ','
       << s.nu()[0] << ',' << s.nu()[1] << ',' << s.nu()[2] << ',' << k.k1 << ',' << k.k2 << ','
       << k.k3 << '\n';
  }
  os.precision(old_precision);
}

}  // namespace gyrostat
