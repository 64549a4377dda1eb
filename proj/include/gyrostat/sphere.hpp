#pragma once

// Icosphere triangulation of the unit sphere with vertex adjacency and a
// bucketed nearest-vertex lookup.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <utility>
#include <vector>

#include "gyrostat/core.hpp"

namespace gyrostat {

class Icosphere {
 public:
  /// Level-n subdivision has 10 * 4^n + 2 vertices.
  explicit Icosphere(int level) : level_(level) {
    if (level < 0 || level > 9) throw InvalidInput("icosphere level must be in [0, 9]");
    build_base();
    for (int i = 0; i < level; ++i) subdivide();
    build_adjacency();
    build_buckets();
  }

  static std::size_t vertex_count(int level) { return 10 * (std::size_t{1} << (2 * level)) + 2; }

  /// Smallest level with at least nlat * nlon vertices.
  static int level_for(int nlat, int nlon) {
    const auto target = static_cast<std::size_t>(nlat) * static_cast<std::size_t>(nlon);
    int level = 0;
    while (vertex_count(level) < target) ++level;
    return level;
  }

  int level() const noexcept { return level_; }
  const std::vector<Vec3>& vertices() const noexcept { return vertices_; }
  const std::vector<std::array<int, 3>>& triangles() const noexcept { return triangles_; }
  const std::vector<std::vector<int>>& neighbors() const noexcept { return neighbors_; }
  std::size_t size() const noexcept { return vertices_.size(); }

  /// Longest edge in radians.
  double max_edge() const noexcept { return max_edge_; }

  /// Vertex closest to the direction of q.
  int nearest(const Vec3& q) const {
    const Vec3 u = q.normalized();
    const auto c = cell_of(u);
    int best = -1;
    double best_dot = -2.0;
    for (int dx = -1; dx <= 1; ++dx)
      for (int dy = -1; dy <= 1; ++dy)
        for (int dz = -1; dz <= 1; ++dz) {
          const std::array<int, 3> n{c[0] + dx, c[1] + dy, c[2] + dz};
          if (std::any_of(n.begin(), n.end(), [&](int x) { return x < 0 || x >= cells_; })) continue;
          for (int v : buckets_[flat(n)]) {
            const double d = vertices_[static_cast<std::size_t>(v)].dot(u);
            if (d > best_dot) {
              best_dot = d;
              best = v;
            }
          }
        }
    return best;
  }

 private:
  void build_base() {
    const double t = (1.0 + std::sqrt(5.0)) / 2.0;
    const double raw[12][3] = {{-1, t, 0}, {1, t, 0},  {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
                               {0, -1, -t}, {0, 1, -t}, {t, 0, -1},  {t, 0, 1},  {-t, 0, -1}, {-t, 0, 1}};
    for (const auto& r : raw) vertices_.push_back(Vec3(r[0], r[1], r[2]).normalized());
    triangles_ = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
                  {11, 10, 2}, {10, 7, 6}, {7, 1, 8},   {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
                  {3, 8, 9},  {4, 9, 5},  {2, 4, 11},  {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
  }

  void subdivide() {
    std::map<std::pair<int, int>, int> midpoint;
    auto mid = [&](int a, int b) {
      const auto key = std::minmax(a, b);
      if (auto it = midpoint.find(key); it != midpoint.end()) return it->second;
      vertices_.push_back((vertices_[static_cast<std::size_t>(a)] + vertices_[static_cast<std::size_t>(b)])
                              .normalized());
      const int idx = static_cast<int>(vertices_.size()) - 1;
      midpoint.emplace(key, idx);
      return idx;
    };
    std::vector<std::array<int, 3>> next;
    next.reserve(triangles_.size() * 4);
    for (const auto& tri : triangles_) {
      const int ab = mid(tri[0], tri[1]), bc = mid(tri[1], tri[2]), ca = mid(tri[2], tri[0]);
      next.push_back({tri[0], ab, ca});
      next.push_back({tri[1], bc, ab});
      next.push_back({tri[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    triangles_ = std::move(next);
  }

  void build_adjacency() {
    neighbors_.assign(vertices_.size(), {});
    max_edge_ = 0.0;
    for (const auto& tri : triangles_) {
      for (int e = 0; e < 3; ++e) {
        const int a = tri[static_cast<std::size_t>(e)], b = tri[static_cast<std::size_t>((e + 1) % 3)];
        auto& na = neighbors_[static_cast<std::size_t>(a)];
        if (std::find(na.begin(), na.end(), b) == na.end()) {
          na.push_back(b);
          neighbors_[static_cast<std::size_t>(b)].push_back(a);
          const double ang = std::acos(std::clamp(
              vertices_[static_cast<std::size_t>(a)].dot(vertices_[static_cast<std::size_t>(b)]), -1.0, 1.0));
          max_edge_ = std::max(max_edge_, ang);
        }
      }
    }
    for (auto& n : neighbors_) std::sort(n.begin(), n.end());
  }

  // Uniform grid over [-1, 1]^3 with cells no smaller than one chord edge, so
  // the nearest vertex always sits in the 27-cell neighbourhood.
  std::array<int, 3> cell_of(const Vec3& u) const {
    std::array<int, 3> c{};
    for (int i = 0; i < 3; ++i)
      c[static_cast<std::size_t>(i)] = std::clamp(static_cast<int>((u[i] + 1.0) / cell_size_), 0, cells_ - 1);
    return c;
  }

  std::size_t flat(const std::array<int, 3>& c) const {
    return static_cast<std::size_t>((c[0] * cells_ + c[1]) * cells_ + c[2]);
  }

  void build_buckets() {
    const double chord = 2.0 * std::sin(max_edge_ / 2.0);
    cells_ = std::max(1, static_cast<int>(2.0 / chord));
    cell_size_ = 2.0 / cells_;
    buckets_.assign(static_cast<std::size_t>(cells_) * cells_ * cells_, {});
    for (std::size_t v = 0; v < vertices_.size(); ++v) buckets_[flat(cell_of(vertices_[v]))].push_back(static_cast<int>(v));
  }

  int level_;
  std::vector<Vec3> vertices_;
  std::vector<std::array<int, 3>> triangles_;
  std::vector<std::vector<int>> neighbors_;
  double max_edge_ = 0.0;
  int cells_ = 1;
  double cell_size_ = 2.0;
  std::vector<std::vector<int>> buckets_;
};

}  // namespace gyrostat
