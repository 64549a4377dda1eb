#pragma once

// Regions of possible motion on the Poisson sphere.
//
// Over a point nu the admissible velocities are the w with K1 = k1, K2 = k2,
// K3 = k3. In momentum coordinates m = A w + lambda the first and third
// conditions cut the circle
//   m = k3 nu + r (cos t e1 + sin t e2),   r^2 = k1 - k3^2,   e1, e2 _|_ nu,
// and K2 = (m - lambda) . A^{-1} (m - lambda) turns into a trigonometric
// quadratic in t. The half-angle substitution gives a quartic whose real roots
// are the admissible velocities (at most four).
//
// The generalized boundary is the image of the rank-drop locus
// [w x m] . nu = 0 on J_k. Along the w-curve {K1 = k1, K2 = k2} it is given
// explicitly by
//   nu = [k3 -/+ (k2 + w.lambda) Q] m / k1 +/- Q w,
//   Q  = sqrt((k1 - k3^2) / (k1 |w|^2 - (k2 + w.lambda)^2)).

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <map>
#include <memory>
#include <numbers>
#include <numeric>
#include <optional>
#include <sstream>
#include <utility>
#include <vector>

#include "gyrostat/contour.hpp"
#include "gyrostat/core.hpp"
#include "gyrostat/dynamics.hpp"
#include "gyrostat/parallel.hpp"
#include "gyrostat/quartic.hpp"
#include "gyrostat/sphere.hpp"

namespace gyrostat {

struct FiberSolutionSet {
  SpherePoint nu;
  std::vector<Vec3> omegas;
  /// Largest scaled residual of the three level equations over `omegas`.
  double residual = 0.0;
  /// Near a fold: the solution count there is not trusted.
  bool uncertain = false;
  double discriminant = 0.0;

  int count() const noexcept { return static_cast<int>(omegas.size()); }
};

struct FiberOptions {
  double uncertain_discriminant = 1e-10;
  double cluster_tol = 1e-6;
  double accept_residual = 1e-8;
};

namespace detail {

inline double kscale(double x) { return std::max(1.0, std::abs(x)); }

inline double level_residual(const Vec3& omega, const Vec3& nu, const IntegralConstants& k,
                             const GyrostatParams& p) {
  const IntegralConstants v = integrals(omega, nu, p);
  return std::max({std::abs(v.k1 - k.k1) / kscale(k.k1), std::abs(v.k2 - k.k2) / kscale(k.k2),
                   std::abs(v.k3 - k.k3) / kscale(k.k3)});
}

// Orthonormal e1, e2 with e1 x e2 = n.
inline std::pair<Vec3, Vec3> plane_basis(const Vec3& n) {
  int axis = 0;
  for (int i = 1; i < 3; ++i) {
    if (std::abs(n[i]) < std::abs(n[axis])) axis = i;
  }
  const Vec3 e1 = n.cross(Vec3::Unit(axis)).normalized();
  return {e1, n.cross(e1)};
}

// K2 - k2 along the momentum circle, as c0 + c1 cos t + s1 sin t + quadratic terms.
struct CircleQuadratic {
  double p0, p1, p2, q11, q12, q22;

  CircleQuadratic(const Vec3& center_minus_lambda, const Vec3& e1, const Vec3& e2, double r,
                  const Vec3& inv_inertia, double k2) {
    const auto dot = [&](const Vec3& u, const Vec3& v) { return u.dot(inv_inertia.cwiseProduct(v)); };
    const Vec3& d = center_minus_lambda;
    p0 = dot(d, d) - k2;
    p1 = 2.0 * r * dot(d, e1);
    p2 = 2.0 * r * dot(d, e2);
    q11 = r * r * dot(e1, e1);
    q12 = r * r * dot(e1, e2);
    q22 = r * r * dot(e2, e2);
  }

  double operator()(double t) const {
    const double c = std::cos(t), s = std::sin(t);
    return p0 + p1 * c + p2 * s + q11 * c * c + 2.0 * q12 * c * s + q22 * s * s;
  }

  double derivative(double t) const {
    const double c = std::cos(t), s = std::sin(t);
    return -p1 * s + p2 * c + 2.0 * (q22 - q11) * s * c + 2.0 * q12 * (c * c - s * s);
  }

  double magnitude() const {
    return std::abs(p0) + std::abs(p1) + std::abs(p2) + std::abs(q11) + 2.0 * std::abs(q12) + std::abs(q22);
  }

  /// Multiplied by (1 + u^2)^2 with u = tan(t / 2); increasing degree.
  Quartic half_angle() const {
    return {p0 + p1 + q11, 2.0 * p2 + 4.0 * q12, 2.0 * p0 - 2.0 * q11 + 4.0 * q22, 2.0 * p2 - 4.0 * q12,
            p0 - p1 + q11};
  }
};

inline double newton_polish(const CircleQuadratic& f, double t) {
  double value = f(t);
  for (int it = 0; it < 60; ++it) {
    const double d = f.derivative(t);
    if (d == 0.0) break;
    double step = std::clamp(-value / d, -0.1, 0.1);
    double next = t + step, next_value = f(next);
    while (std::abs(next_value) > std::abs(value) && std::abs(step) > 1e-18) {
      step *= 0.5;
      next = t + step;
      next_value = f(next);
    }
    if (std::abs(next_value) > std::abs(value)) break;
    t = next;
    value = next_value;
    if (std::abs(step) < 1e-15) break;
  }
  return t;
}

inline double wrap_angle(double t) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  t = std::fmod(t, two_pi);
  if (t < 0) t += two_pi;
  return t;
}

}  // namespace detail

inline FiberSolutionSet admissible_velocities(const SpherePoint& nu, const IntegralConstants& k,
                                              const GyrostatParams& p, const FiberOptions& opt = {}) {
  if (!(std::abs(nu.squaredNorm() - 1.0) <= kUnitTolerance))
    throw InvalidInput("admissible_velocities needs a unit Poisson vector");
  FiberSolutionSet out;
  out.nu = nu;

  const Vec3& inv = p.inv_inertia();
  const double gap = k.k1 - k.k3 * k.k3;
  if (gap < -1e-12 * detail::kscale(k.k1)) return out;
  const double r = std::sqrt(std::max(gap, 0.0));
  const Vec3 center = k.k3 * nu;
  const Vec3 d = center - p.lambda();

  // Circle collapsed to the point m = k3 nu.
  if (r <= 1e-9 * std::max(1.0, std::sqrt(std::abs(k.k1)))) {
    out.uncertain = true;
    const Vec3 omega = inv.cwiseProduct(d);
    const double res = detail::level_residual(omega, nu, k, p);
    if (res <= opt.accept_residual) {
      out.omegas.push_back(omega);
      out.residual = res;
    }
    return out;
  }

  auto [e1, e2] = detail::plane_basis(nu);
  detail::CircleQuadratic f(d, e1, e2, r, inv, k.k2);

  // Put t = pi (u = inf) where |K2 - k2| is largest, so the quartic keeps full degree.
  constexpr int kProbe = 16;
  double best_t = 0.0, best_abs = -1.0;
  for (int i = 0; i < kProbe; ++i) {
    const double t = 2.0 * std::numbers::pi * i / kProbe;
    if (const double v = std::abs(f(t)); v > best_abs) {
      best_abs = v;
      best_t = t;
    }
  }
  if (best_abs <= 1e-13 * f.magnitude()) {
    std::ostringstream os;
    os << "continuum of admissible velocities over nu = (" << nu[0] << ", " << nu[1] << ", " << nu[2] << ")";
    throw SolveFailure(os.str());
  }
  {
    const Vec3 far = std::cos(best_t) * e1 + std::sin(best_t) * e2;
    e1 = -far;
    e2 = nu.cross(e1);
    f = detail::CircleQuadratic(d, e1, e2, r, inv, k.k2);
  }

  const Quartic quartic = f.half_angle();
  out.discriminant = normalized_discriminant(quartic);
  out.uncertain = std::abs(out.discriminant) < opt.uncertain_discriminant;

  // Candidate angles from near-real roots, polished on the trigonometric form.
  std::vector<double> candidates;
  for (const auto& z : roots(quartic)) {
    if (std::abs(z.imag()) > 1e-4 * (1.0 + std::abs(z))) continue;
    const double t = detail::newton_polish(f, 2.0 * std::atan(z.real()));
    candidates.push_back(detail::wrap_angle(t));
  }
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end(),
                               [](double a, double b) { return std::abs(a - b) < 1e-12; }),
                   candidates.end());

  // Keep sign-changing roots only; double roots sit exactly on a fold.
  const std::size_t n = candidates.size();
  constexpr double two_pi = 2.0 * std::numbers::pi;
  std::vector<double> accepted;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = candidates[i];
    double gap_prev = two_pi, gap_next = two_pi;
    if (n > 1) {
      gap_prev = detail::wrap_angle(t - candidates[(i + n - 1) % n]);
      gap_next = detail::wrap_angle(candidates[(i + 1) % n] - t);
    }
    const double left = t - std::min(0.1, 0.5 * gap_prev);
    const double right = t + std::min(0.1, 0.5 * gap_next);
    const double fl = f(left), fr = f(right);
    if ((fl < 0.0 && fr > 0.0) || (fl > 0.0 && fr < 0.0)) accepted.push_back(t);
  }

  for (double t : accepted) {
    const Vec3 m = center + r * (std::cos(t) * e1 + std::sin(t) * e2);
    const Vec3 omega = inv.cwiseProduct(m - p.lambda());
    const double res = detail::level_residual(omega, nu, k, p);
    if (res > opt.accept_residual) continue;
    const bool duplicate = std::any_of(out.omegas.begin(), out.omegas.end(), [&](const Vec3& w) {
      return (w - omega).norm() <= opt.cluster_tol * std::max(1.0, omega.norm());
    });
    if (duplicate) continue;
    out.omegas.push_back(omega);
    out.residual = std::max(out.residual, res);
  }
  return out;
}

// ---------------------------------------------------------------------------
// w-curve {K1 = k1, K2 = k2}

struct OmegaCurve {
  std::vector<Vec3> points;  // closed curves repeat the first point at the end
  bool closed = false;
};

struct TraceOptions {
  int seeds_per_axis = 16;
  /// Largest predictor step as a fraction of the w bounding box half-width.
  double step_fraction = 0.01;
  /// Largest tangent turn per step, radians.
  double max_turn = 0.15;
  std::size_t max_points = 400000;
  /// Scaled |K1 - k1| + |K2 - k2| accepted by the corrector.
  double level_tol = 1e-12;
};

namespace detail {

class LevelPair {
 public:
  LevelPair(double k1, double k2, const GyrostatParams& p) : k1_(k1), k2_(k2), p_(p) {}

  Eigen::Vector2d value(const Vec3& w) const {
    const Vec3 m = angular_momentum(w, p_);
    return {m.squaredNorm() - k1_, p_.inertia().cwiseProduct(w).dot(w) - k2_};
  }

  Eigen::Matrix<double, 2, 3> jacobian(const Vec3& w) const {
    Eigen::Matrix<double, 2, 3> j;
    const Vec3 m = angular_momentum(w, p_);
    j.row(0) = 2.0 * p_.inertia().cwiseProduct(m).transpose();
    j.row(1) = 2.0 * p_.inertia().cwiseProduct(w).transpose();
    return j;
  }

  double residual(const Vec3& w) const {
    const Eigen::Vector2d v = value(w);
    return std::abs(v[0]) / kscale(k1_) + std::abs(v[1]) / kscale(k2_);
  }

  /// Unit tangent grad K1 x grad K2; empty where the gradients are parallel.
  std::optional<Vec3> tangent(const Vec3& w) const {
    const auto j = jacobian(w);
    const Vec3 g1 = j.row(0).transpose(), g2 = j.row(1).transpose();
    const Vec3 t = g1.cross(g2);
    if (t.norm() <= 1e-10 * g1.norm() * g2.norm() || t.norm() == 0.0) return std::nullopt;
    return t.normalized();
  }

  /// Minimum-norm Newton onto both levels.
  std::optional<Vec3> correct(Vec3 w, double tol, int max_iter) const {
    for (int it = 0; it < max_iter; ++it) {
      if (residual(w) <= tol) return w;
      const auto j = jacobian(w);
      const Eigen::Matrix2d jj = j * j.transpose();
      if (std::abs(jj.determinant()) <= 1e-300) return std::nullopt;
      w -= j.transpose() * jj.ldlt().solve(value(w));
      if (!w.allFinite()) return std::nullopt;
    }
    if (residual(w) <= tol) return w;
    return std::nullopt;
  }

 private:
  double k1_, k2_;
  const GyrostatParams& p_;
};

inline OmegaCurve trace_from(const LevelPair& level, const Vec3& start, double h_max, const TraceOptions& opt) {
  auto tangent_at = [&](const Vec3& w) {
    auto t = level.tangent(w);
    if (!t) {
      std::ostringstream os;
      os << "tangent degenerates at w = (" << w[0] << ", " << w[1] << ", " << w[2]
         << "): critical point of (K1, K2)";
      throw TraceStall(os.str());
    }
    return *t;
  };

  OmegaCurve curve;
  curve.points.push_back(start);
  Vec3 x = start;
  Vec3 t = tangent_at(x);
  double h = h_max;
  const double cos_turn = std::cos(opt.max_turn);

  while (true) {
    if (curve.points.size() > opt.max_points) throw TraceStall("w-curve did not close within the point budget");
    const Vec3 to_start = start - x;
    if (curve.points.size() >= 8 && to_start.norm() <= h && to_start.dot(t) > 0.0) {
      curve.points.push_back(start);
      curve.closed = true;
      return curve;
    }
    const Vec3 predicted = x + h * t;
    const auto y = level.correct(predicted, opt.level_tol, 12);
    bool ok = y && (*y - predicted).norm() <= 0.5 * h;
    Vec3 t_new;
    if (ok) {
      t_new = tangent_at(*y);
      ok = t_new.dot(t) >= cos_turn;
    }
    if (!ok) {
      h *= 0.5;
      if (h < 1e-10 * h_max) throw TraceStall("predictor-corrector step underflow on the w-curve");
      continue;
    }
    x = *y;
    t = t_new;
    curve.points.push_back(x);
    h = std::min(1.5 * h, h_max);
  }
}

}  // namespace detail

/// Closed components of {K1 = k1, K2 = k2} in w-space, by predictor-corrector
/// continuation from a grid of seeds.
inline std::vector<OmegaCurve> trace_omega_curve(double k1, double k2, const GyrostatParams& p,
                                                 const TraceOptions& opt = {}) {
  if (!(k1 > 0.0) || !(k2 > 0.0)) {
    std::ostringstream os;
    os << "level {K1 = " << k1 << ", K2 = " << k2 << "} is empty or degenerate";
    throw EmptyLevel(os.str());
  }
  const detail::LevelPair level(k1, k2, p);
  // A_i w_i^2 <= K2 bounds the level.
  Vec3 half;
  for (int i = 0; i < 3; ++i) half[i] = std::sqrt(k2 * p.inv_inertia()[i]);
  const double h_max = opt.step_fraction * half.maxCoeff();
  const int n = std::max(2, opt.seeds_per_axis);

  std::vector<OmegaCurve> curves;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int l = 0; l < n; ++l) {
        const Vec3 frac((i + 0.5) / n, (j + 0.5) / n, (l + 0.5) / n);
        const Vec3 seed = (2.0 * frac.array() - 1.0).matrix().cwiseProduct(half);
        const auto start = level.correct(seed, opt.level_tol, 60);
        if (!start) continue;
        const bool known = std::any_of(curves.begin(), curves.end(), [&](const OmegaCurve& c) {
          return std::any_of(c.points.begin(), c.points.end(),
                             [&](const Vec3& q) { return (q - *start).norm() < 2.0 * h_max; });
        });
        if (known) continue;
        curves.push_back(detail::trace_from(level, *start, h_max, opt));
      }
  if (curves.empty()) {
    std::ostringstream os;
    os << "no seed converged onto {K1 = " << k1 << ", K2 = " << k2 << "}";
    throw EmptyLevel(os.str());
  }
  return curves;
}

// ---------------------------------------------------------------------------
// Generalized boundary

inline double q_factor(const Vec3& omega, const IntegralConstants& k, const GyrostatParams& p) {
  const double numerator = k.k1 - k.k3 * k.k3;
  const double c = k.k2 + omega.dot(p.lambda());
  const double denominator = k.k1 * omega.squaredNorm() - c * c;
  if (numerator < 0.0) throw DomainError("Q undefined: k1 - k3^2 < 0", DomainError::Factor::Numerator);
  if (!(denominator > 0.0))
    throw DomainError("Q undefined: k1 |w|^2 - (k2 + w.lambda)^2 <= 0", DomainError::Factor::Denominator);
  return std::sqrt(numerator / denominator);
}

struct BoundaryCandidate {
  Vec3 nu;
  double sphere_residual;   // | |nu|^2 - 1 |
  double level_residual;    // |K3 - k3| / max(1, |k3|)
  double contour_residual;  // |[w x m] . nu| / max(1, |w| |m|)

  double worst() const { return std::max({sphere_residual, level_residual, contour_residual}); }
};

/// Boundary point over w for the sign pattern (first, second) of the two +/- in
/// nu = [k3 + first (k2 + w.lambda) Q] m / k1 + second Q w.
inline BoundaryCandidate boundary_candidate(const Vec3& omega, const IntegralConstants& k, const GyrostatParams& p,
                                            int first, int second) {
  const double q = q_factor(omega, k, p);
  const Vec3 m = angular_momentum(omega, p);
  const double c = k.k2 + omega.dot(p.lambda());
  BoundaryCandidate out;
  out.nu = (k.k3 + first * c * q) * m / k.k1 + second * q * omega;
  out.sphere_residual = std::abs(out.nu.squaredNorm() - 1.0);
  out.level_residual = std::abs(m.dot(out.nu) - k.k3) / detail::kscale(k.k3);
  out.contour_residual =
      std::abs(omega.cross(m).dot(out.nu)) / std::max(1.0, omega.norm() * m.norm());
  return out;
}

struct BoundaryCurve {
  SphereCurve curve;
  std::vector<Vec3> omegas;  // preimage on the w-curve, aligned with curve.points
  int component = 0;         // index into trace_omega_curve
  int sign_first = 1;
  int sign_second = 1;
};

struct BoundaryOptions {
  TraceOptions trace;
  double accept = 1e-8;
  std::size_t min_points = 3;
  /// Points closer than this (chordal) to the previous kept point are dropped;
  /// uniform steps on the w-curve bunch up at cusps of the image. The default
  /// is about a fifth of a 128x256 cell. Zero or negative keeps every point.
  double min_spacing = 5e-3;
};

namespace detail {

inline void thin(BoundaryCurve& c, double spacing) {
  if (spacing <= 0.0 || c.curve.points.size() < 3) return;
  const std::size_t n = c.curve.points.size();
  BoundaryCurve out{{}, {}, c.component, c.sign_first, c.sign_second};
  out.curve.closed = c.curve.closed;
  for (std::size_t i = 0; i < n; ++i) {
    const bool end = i + 1 == n;
    if (!out.curve.points.empty() && !end && (c.curve.points[i] - out.curve.points.back()).norm() < spacing)
      continue;
    out.curve.points.push_back(c.curve.points[i]);
    out.omegas.push_back(c.omegas[i]);
  }
  c = std::move(out);
}

}  // namespace detail

inline std::vector<BoundaryCurve> generalized_boundary(const IntegralConstants& k, const GyrostatParams& p,
                                                       const BoundaryOptions& opt = {}) {
  p.require_generic();
  if (!k.feasible()) throw InvalidInput("generalized boundary needs k1 >= k3^2");
  std::vector<BoundaryCurve> out;
  if (!(k.k1 > 0.0)) return out;

  std::vector<OmegaCurve> curves;
  try {
    curves = trace_omega_curve(k.k1, k.k2, p, opt.trace);
  } catch (const EmptyLevel&) {
    return out;
  }

  constexpr std::array<std::pair<int, int>, 4> patterns{{{-1, 1}, {1, -1}, {1, 1}, {-1, -1}}};
  for (std::size_t ci = 0; ci < curves.size(); ++ci) {
    const OmegaCurve& wc = curves[ci];
    const std::size_t n = wc.closed ? wc.points.size() - 1 : wc.points.size();
    std::vector<BoundaryCurve> kept;
    for (const auto& [first, second] : patterns) {
      std::vector<BoundaryCurve> pieces;
      BoundaryCurve current{{}, {}, static_cast<int>(ci), first, second};
      bool all_accepted = true;
      auto flush = [&] {
        if (!current.curve.points.empty()) pieces.push_back(current);
        current.curve.points.clear();
        current.omegas.clear();
      };
      for (std::size_t i = 0; i < n; ++i) {
        const Vec3& w = wc.points[i];
        bool ok = false;
        try {
          const BoundaryCandidate c = boundary_candidate(w, k, p, first, second);
          ok = c.worst() <= opt.accept;
          if (ok) {
            current.curve.points.push_back(c.nu);
            current.omegas.push_back(w);
          }
        } catch (const DomainError&) {
        }
        if (!ok) {
          all_accepted = false;
          flush();
        }
      }
      flush();
      if (wc.closed && all_accepted && pieces.size() == 1) {
        pieces[0].curve.closed = true;
        pieces[0].curve.points.push_back(pieces[0].curve.points.front());
        pieces[0].omegas.push_back(pieces[0].omegas.front());
      } else if (wc.closed && pieces.size() > 1 && !pieces.front().omegas.empty() &&
                 pieces.front().omegas.front() == wc.points.front() && pieces.back().omegas.back() == wc.points[n - 1]) {
        // The piece through the seed point wraps around the closed w-curve.
        auto& head = pieces.front();
        auto& tail = pieces.back();
        tail.curve.points.insert(tail.curve.points.end(), head.curve.points.begin(), head.curve.points.end());
        tail.omegas.insert(tail.omegas.end(), head.omegas.begin(), head.omegas.end());
        pieces.erase(pieces.begin());
      }
      for (auto& piece : pieces) {
        if (piece.curve.points.size() < opt.min_points) continue;
        // Patterns coincide where Q (k2 + w.lambda) vanishes identically, e.g. k1 = k3^2.
        detail::thin(piece, opt.min_spacing);
        const bool duplicate = std::any_of(kept.begin(), kept.end(), [&](const BoundaryCurve& other) {
          if (other.curve.points.size() != piece.curve.points.size()) return false;
          for (std::size_t j = 0; j < piece.curve.points.size(); ++j) {
            if ((other.curve.points[j] - piece.curve.points[j]).norm() > 1e-12) return false;
          }
          return true;
        });
        if (duplicate) continue;
        kept.push_back(std::move(piece));
      }
    }
    out.insert(out.end(), kept.begin(), kept.end());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Fiber-count field on the sphere

struct RpmComponent {
  std::size_t vertex_count = 0;
  int representative = -1;  // smallest vertex index
  std::array<std::size_t, 5> count_profile{};  // vertices with fiber count 0..4
};

struct RpmOptions {
  int nlat = 128;
  int nlon = 256;
  int threads = 1;
  bool with_boundary = true;
  FiberOptions fiber;
  BoundaryOptions boundary;
  /// Linkage distance for admissible velocities, as a fraction of the w-box.
  double sheet_link = 0.01;
};

struct RpmReport {
  IntegralConstants k;
  std::shared_ptr<const Icosphere> mesh;
  std::vector<int> counts;
  std::vector<char> uncertain;
  std::vector<std::vector<Vec3>> fibers;
  std::vector<RpmComponent> components;
  /// Connected components of J_k seen from the grid (number of tori).
  int sheets = 0;
  std::vector<BoundaryCurve> boundary;

  bool empty() const {
    return std::all_of(counts.begin(), counts.end(), [](int c) { return c == 0; });
  }

  std::size_t uncertain_count() const {
    return static_cast<std::size_t>(std::count(uncertain.begin(), uncertain.end(), 1));
  }

  /// A count jump or an uncertain vertex inside the triangles around the
  /// vertex nearest to `point`.
  bool near_discontinuity(const Vec3& point) const {
    const auto v = static_cast<std::size_t>(mesh->nearest(point));
    const auto& ring = mesh->neighbors()[v];
    if (uncertain[v]) return true;
    for (int u : ring) {
      const auto ui = static_cast<std::size_t>(u);
      if (uncertain[ui] || counts[ui] != counts[v]) return true;
      for (int w : mesh->neighbors()[ui]) {
        if (!std::binary_search(ring.begin(), ring.end(), w)) continue;
        if (counts[static_cast<std::size_t>(w)] != counts[ui]) return true;
      }
    }
    return false;
  }
};

namespace detail {

class DisjointSet {
 public:
  explicit DisjointSet(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), std::size_t{0}); }
  std::size_t find(std::size_t x) {
    while (parent_[x] != x) x = parent_[x] = parent_[parent_[x]];
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent_[std::max(a, b)] = std::min(a, b);
  }

 private:
  std::vector<std::size_t> parent_;
};

/// Number of single-linkage clusters at distance `link`. Cells of size
/// link / sqrt(3) make every cell a clique; cell pairs stop at the first link.
inline int single_linkage_clusters(const std::vector<Vec3>& pts, double link) {
  if (pts.empty()) return 0;
  if (!(link > 0.0)) return static_cast<int>(pts.size());
  const double cell = link / std::sqrt(3.0);
  using Key = std::array<long long, 3>;
  auto key_of = [&](const Vec3& x) {
    return Key{static_cast<long long>(std::floor(x[0] / cell)), static_cast<long long>(std::floor(x[1] / cell)),
               static_cast<long long>(std::floor(x[2] / cell))};
  };
  std::map<Key, std::vector<std::size_t>> cells;
  for (std::size_t i = 0; i < pts.size(); ++i) cells[key_of(pts[i])].push_back(i);
  DisjointSet sets(pts.size());
  for (const auto& [key, members] : cells)
    for (std::size_t a : members) sets.unite(members.front(), a);
  for (const auto& [key, members] : cells) {
    for (long long dx = -2; dx <= 2; ++dx)
      for (long long dy = -2; dy <= 2; ++dy)
        for (long long dz = -2; dz <= 2; ++dz) {
          const auto it = cells.find(Key{key[0] + dx, key[1] + dy, key[2] + dz});
          if (it == cells.end() || it->first <= key) continue;
          if (sets.find(members.front()) == sets.find(it->second.front())) continue;
          bool linked = false;
          for (std::size_t a : members) {
            for (std::size_t b : it->second) {
              if ((pts[a] - pts[b]).norm() <= link) {
                sets.unite(a, b);
                linked = true;
                break;
              }
            }
            if (linked) break;
          }
        }
  }
  int clusters = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) clusters += sets.find(i) == i ? 1 : 0;
  return clusters;
}

}  // namespace detail

inline RpmReport rpm_map(const IntegralConstants& k, const GyrostatParams& p, const RpmOptions& opt = {}) {
  p.require_generic();
  if (opt.nlat < 16 || opt.nlon < 32) throw InvalidInput("rpm_map resolution must be at least 16x32");

  RpmReport report;
  report.k = k;
  report.mesh = std::make_shared<const Icosphere>(Icosphere::level_for(opt.nlat, opt.nlon));
  const Icosphere& mesh = *report.mesh;
  const std::size_t nv = mesh.size();
  report.counts.assign(nv, 0);
  report.uncertain.assign(nv, 0);
  report.fibers.assign(nv, {});

  std::vector<std::string> failures(nv);
  parallel_for(nv, opt.threads, [&](std::size_t v) {
    try {
      FiberSolutionSet fiber = admissible_velocities(mesh.vertices()[v], k, p, opt.fiber);
      report.counts[v] = fiber.count();
      report.uncertain[v] = fiber.uncertain ? 1 : 0;
      report.fibers[v] = std::move(fiber.omegas);
    } catch (const SolveFailure& e) {
      std::ostringstream os;
      const Vec3& nu = mesh.vertices()[v];
      os << "vertex " << v << " (nu = " << nu[0] << ", " << nu[1] << ", " << nu[2] << "): " << e.what();
      throw SolveFailure(os.str());
    }
  });

  // Components of {count > 0} over certain vertices.
  std::vector<int> label(nv, -1);
  for (std::size_t v = 0; v < nv; ++v) {
    if (label[v] >= 0 || report.counts[v] == 0 || report.uncertain[v]) continue;
    RpmComponent comp;
    comp.representative = static_cast<int>(v);
    const int id = static_cast<int>(report.components.size());
    std::vector<std::size_t> stack{v};
    label[v] = id;
    while (!stack.empty()) {
      const std::size_t u = stack.back();
      stack.pop_back();
      ++comp.vertex_count;
      ++comp.count_profile[static_cast<std::size_t>(std::clamp(report.counts[u], 0, 4))];
      for (int w : mesh.neighbors()[u]) {
        const auto wi = static_cast<std::size_t>(w);
        if (label[wi] >= 0 || report.counts[wi] == 0 || report.uncertain[wi]) continue;
        label[wi] = id;
        stack.push_back(wi);
      }
    }
    report.components.push_back(comp);
  }

  // J_k fibres over the w-curve are circles, so its components are the
  // components of the sampled admissible velocities in w-space.
  {
    std::vector<Vec3> samples;
    for (const auto& f : report.fibers) samples.insert(samples.end(), f.begin(), f.end());
    double box = 0.0;
    for (int i = 0; i < 3; ++i) box = std::max(box, std::sqrt(std::max(k.k2, 0.0) * p.inv_inertia()[i]));
    report.sheets = detail::single_linkage_clusters(samples, opt.sheet_link * box);
  }

  if (opt.with_boundary && k.feasible()) report.boundary = generalized_boundary(k, p, opt.boundary);
  return report;
}

}  // namespace gyrostat
