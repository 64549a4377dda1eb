#pragma once

// Real roots of polynomials of degree <= 4 through companion-matrix eigenvalues.

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <vector>

namespace gyrostat {

/// Coefficients in increasing degree: c[0] + c[1] x + ... + c[4] x^4.
using Quartic = std::array<double, 5>;

inline double evaluate(const Quartic& c, double x) {
  return (((c[4] * x + c[3]) * x + c[2]) * x + c[1]) * x + c[0];
}

inline double derivative(const Quartic& c, double x) {
  return ((4.0 * c[4] * x + 3.0 * c[3]) * x + 2.0 * c[2]) * x + c[1];
}

/// Discriminant after scaling the coefficients to unit max-norm.
inline double normalized_discriminant(Quartic c) {
  double scale = 0.0;
  for (double v : c) scale = std::max(scale, std::abs(v));
  if (scale == 0.0) return 0.0;
  for (double& v : c) v /= scale;
  const double a = c[4], b = c[3], cc = c[2], d = c[1], e = c[0];
  return 256 * a * a * a * e * e * e - 192 * a * a * b * d * e * e - 128 * a * a * cc * cc * e * e +
         144 * a * a * cc * d * d * e - 27 * a * a * d * d * d * d + 144 * a * b * b * cc * e * e -
         6 * a * b * b * d * d * e - 80 * a * b * cc * cc * d * e + 18 * a * b * cc * d * d * d +
         16 * a * cc * cc * cc * cc * e - 4 * a * cc * cc * cc * d * d - 27 * b * b * b * b * e * e +
         18 * b * b * b * cc * d * e - 4 * b * b * b * d * d * d - 4 * b * b * cc * cc * cc * e +
         b * b * cc * cc * d * d;
}

/// All complex roots; the effective degree drops while the leading
/// coefficient is negligible relative to the others.
inline std::vector<std::complex<double>> roots(const Quartic& c) {
  double scale = 0.0;
  for (double v : c) scale = std::max(scale, std::abs(v));
  int degree = 4;
  while (degree > 0 && std::abs(c[degree]) <= 1e-14 * scale) --degree;
  std::vector<std::complex<double>> out;
  if (degree == 0) return out;
  if (degree == 1) {
    out.emplace_back(-c[0] / c[1], 0.0);
    return out;
  }
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(degree, degree);
  for (int i = 1; i < degree; ++i) companion(i, i - 1) = 1.0;
  for (int i = 0; i < degree; ++i) companion(i, degree - 1) = -c[i] / c[degree];
  Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, false);
  const auto& ev = solver.eigenvalues();
  for (int i = 0; i < degree; ++i) out.push_back(ev[i]);
  return out;
}

}  // namespace gyrostat
