#pragma once

// Brute-force references used only by the tests. They share nothing with the
// library solvers beyond the integral formulas.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

#include "gyrostat/core.hpp"

namespace oracle {

using gyrostat::GyrostatParams;
using gyrostat::IntegralConstants;
using gyrostat::Vec3;

inline Vec3 level_values(const Vec3& w, const Vec3& nu, const IntegralConstants& k, const GyrostatParams& p) {
  const Vec3& A = p.inertia();
  const Vec3 m = A.cwiseProduct(w) + p.lambda();
  return {m.squaredNorm() - k.k1, A.cwiseProduct(w).dot(w) - k.k2, m.dot(nu) - k.k3};
}

inline Eigen::Matrix3d level_jacobian(const Vec3& w, const Vec3& nu, const GyrostatParams& p) {
  const Vec3& A = p.inertia();
  const Vec3 m = A.cwiseProduct(w) + p.lambda();
  Eigen::Matrix3d J;
  J.row(0) = 2.0 * A.cwiseProduct(m).transpose();
  J.row(1) = 2.0 * A.cwiseProduct(w).transpose();
  J.row(2) = A.cwiseProduct(nu).transpose();
  return J;
}

struct FiberOracle {
  std::vector<Vec3> omegas;
  std::size_t cells_kept = 0;
};

/// Solutions of K(w, nu) = k by recursive cell exclusion on a box around the
/// level set, down to a cell pitch of `pitch` times the box size, then Newton
/// from every surviving cell centre.
inline FiberOracle fiber_grid(const Vec3& nu, const IntegralConstants& k, const GyrostatParams& p,
                              double pitch = 0.01) {
  FiberOracle out;
  if (k.k2 < 0.0 || k.k1 < 0.0) return out;
  const Vec3& A = p.inertia();
  Vec3 half;
  for (int i = 0; i < 3; ++i) half[i] = std::sqrt(k.k2 / A[i]) * 1.001 + 1e-9;
  const double side = 2.0 * half.maxCoeff();
  const double stop = pitch * side;

  // Over a cube of half-width h around c: |F(c + d) - F(c) - grad F(c) d| is
  // bounded by the quadratic term, sum A_i^2 h^2 for K1 and sum A_i h^2 for K2.
  const double q1 = A.cwiseProduct(A).sum(), q2 = A.sum();
  std::vector<Vec3> survivors;
  struct Cell {
    Vec3 c;
    double h;
  };
  std::vector<Cell> stack{{Vec3::Zero(), half.maxCoeff()}};
  while (!stack.empty()) {
    const Cell cell = stack.back();
    stack.pop_back();
    const Vec3 f = level_values(cell.c, nu, k, p);
    const Eigen::Matrix3d J = level_jacobian(cell.c, nu, p);
    const std::array<double, 3> quad{q1 * cell.h * cell.h, q2 * cell.h * cell.h, 0.0};
    bool excluded = false;
    for (int i = 0; i < 3 && !excluded; ++i)
      excluded = std::abs(f[i]) > J.row(i).cwiseAbs().sum() * cell.h + quad[static_cast<std::size_t>(i)];
    if (excluded) continue;
    if (2.0 * cell.h <= stop) {
      survivors.push_back(cell.c);
      continue;
    }
    const double h = cell.h / 2.0;
    for (int s = 0; s < 8; ++s)
      stack.push_back({cell.c + h * Vec3(s & 1 ? 1 : -1, s & 2 ? 1 : -1, s & 4 ? 1 : -1), h});
  }
  out.cells_kept = survivors.size();

  const double scale = std::max({1.0, std::abs(k.k1), std::abs(k.k2), std::abs(k.k3)});
  for (const Vec3& start : survivors) {
    Vec3 w = start;
    bool ok = false;
    for (int it = 0; it < 50; ++it) {
      const Vec3 f = level_values(w, nu, k, p);
      if (f.cwiseAbs().maxCoeff() <= 1e-13 * scale) {
        ok = true;
        break;
      }
      const Eigen::Matrix3d J = level_jacobian(w, nu, p);
      const Vec3 step = J.fullPivLu().solve(f);
      if (!step.allFinite()) break;
      w -= step;
      if ((w - start).norm() > 4.0 * stop) break;  // wandered off: another cell owns that root
    }
    if (!ok) continue;
    const bool seen = std::any_of(out.omegas.begin(), out.omegas.end(),
                                  [&](const Vec3& v) { return (v - w).norm() < 1e-6 * std::max(1.0, side); });
    if (!seen) out.omegas.push_back(w);
  }
  return out;
}

/// Connected pieces of {K1 = k1} n {K2 = k2} on an n^3 voxel grid. A voxel is
/// a candidate when both K1 - k1 and K2 - k2 change sign over its corners; it
/// is confirmed when Gauss-Newton from its centre lands on both levels inside
/// the voxel. Confirmed voxels within two cells of each other are joined.
inline int voxel_curve_components(double k1, double k2, const GyrostatParams& p, int n = 200) {
  const Vec3& A = p.inertia();
  Vec3 half;
  for (int i = 0; i < 3; ++i) half[i] = std::sqrt(std::max(k2, 0.0) / A[i]) * 1.01 + 1e-9;
  const Vec3 pitch = 2.0 * half / n;
  const int m = n + 1;
  auto idx = [m](int i, int j, int l) { return (static_cast<std::size_t>(i) * m + j) * m + l; };
  auto corner = [&](int i, int j, int l) { return Vec3(-half[0] + pitch[0] * i, -half[1] + pitch[1] * j, -half[2] + pitch[2] * l); };
  std::vector<std::int8_t> s1(static_cast<std::size_t>(m) * m * m), s2(s1.size());
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      for (int l = 0; l < m; ++l) {
        const Vec3 w = corner(i, j, l);
        const Vec3 mom = A.cwiseProduct(w) + p.lambda();
        s1[idx(i, j, l)] = mom.squaredNorm() > k1 ? 1 : -1;
        s2[idx(i, j, l)] = A.cwiseProduct(w).dot(w) > k2 ? 1 : -1;
      }

  auto on_curve_inside = [&](const Vec3& lo) {
    Vec3 w = lo + 0.5 * pitch;
    const double scale = std::max({1.0, k1, k2});
    for (int it = 0; it < 30; ++it) {
      const Vec3 mom = A.cwiseProduct(w) + p.lambda();
      const Eigen::Vector2d f(mom.squaredNorm() - k1, A.cwiseProduct(w).dot(w) - k2);
      if (f.cwiseAbs().maxCoeff() <= 1e-12 * scale) break;
      Eigen::Matrix<double, 2, 3> J;
      J.row(0) = 2.0 * A.cwiseProduct(mom).transpose();
      J.row(1) = 2.0 * A.cwiseProduct(w).transpose();
      const Eigen::Matrix2d g = J * J.transpose();
      if (std::abs(g.determinant()) <= 1e-300) return false;
      w -= J.transpose() * g.inverse() * f;
    }
    const Vec3 mom = A.cwiseProduct(w) + p.lambda();
    if (std::abs(mom.squaredNorm() - k1) > 1e-9 * std::max(1.0, k1)) return false;
    if (std::abs(A.cwiseProduct(w).dot(w) - k2) > 1e-9 * std::max(1.0, k2)) return false;
    for (int i = 0; i < 3; ++i)
      if (w[i] < lo[i] - 0.25 * pitch[i] || w[i] > lo[i] + 1.25 * pitch[i]) return false;
    return true;
  };

  std::vector<std::array<int, 3>> confirmed;
  std::map<std::array<int, 3>, std::size_t> where;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int l = 0; l < n; ++l) {
        int lo1 = 1, hi1 = -1, lo2 = 1, hi2 = -1;
        for (int c = 0; c < 8; ++c) {
          const std::size_t at = idx(i + (c & 1), j + ((c >> 1) & 1), l + ((c >> 2) & 1));
          lo1 = std::min<int>(lo1, s1[at]);
          hi1 = std::max<int>(hi1, s1[at]);
          lo2 = std::min<int>(lo2, s2[at]);
          hi2 = std::max<int>(hi2, s2[at]);
        }
        if (lo1 < hi1 && lo2 < hi2 && on_curve_inside(corner(i, j, l))) {
          where[{i, j, l}] = confirmed.size();
          confirmed.push_back({i, j, l});
        }
      }

  std::vector<std::size_t> parent(confirmed.size());
  for (std::size_t i = 0; i < parent.size(); ++i) parent[i] = i;
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (std::size_t a = 0; a < confirmed.size(); ++a) {
    const auto [i, j, l] = confirmed[a];
    for (int di = -2; di <= 2; ++di)
      for (int dj = -2; dj <= 2; ++dj)
        for (int dl = -2; dl <= 2; ++dl) {
          const auto it = where.find({i + di, j + dj, l + dl});
          if (it != where.end()) parent[find(a)] = find(it->second);
        }
  }
  int components = 0;
  for (std::size_t i = 0; i < parent.size(); ++i) components += find(i) == i ? 1 : 0;
  return components;
}

}  // namespace oracle
