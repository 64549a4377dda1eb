#pragma once

// Bifurcation set of the free gyrostat.
//
// The critical values of (K1, K2) restricted to the w-space form the parametric
// curve
//
//   k1(s) = sum_i a_i^2 l_i^2 / (s - a_i)^2,
//   k2(s) = s^2 sum_i a_i l_i^2 / (s - a_i)^2,
//
// with a_i the diagonal of A^{-1}. At parameter s the level sets of K1 and K2
// touch at m_i = a_i l_i / (a_i - s). The poles a_1 < a_2 < a_3 split the real
// line into four branches. On LOW (s < a_1) and HIGH (s > a_3) k1 is monotone
// and gives the minimum f(k1) and maximum g(k1) of K2 on the sphere |m|^2 = k1.
// On MID1 and MID2, k1 is strictly convex; above its minimum each carries a pair
// of critical values (a saddle and a local extremum) bounding a lobe in which
// the level {K1 = k1, K2 = k2} acquires a second circle.
//
// The parameter is handled through s = tan(theta) so that both infinite ends
// and the pole neighbourhoods are bounded intervals in theta.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "gyrostat/core.hpp"

namespace gyrostat {

enum class Branch { Low, Mid1, Mid2, High };

inline const char* to_string(Branch b) {
  switch (b) {
    case Branch::Low: return "LOW";
    case Branch::Mid1: return "MID1";
    case Branch::Mid2: return "MID2";
    case Branch::High: return "HIGH";
  }
  return "?";
}

struct BifurcationCurveSample {
  double sigma = 0.0;
  double k1 = 0.0;
  double k2 = 0.0;
  Branch branch = Branch::Low;
};

/// R1: one torus. R2, R3: two tori, the second one born on the MID1 (R2) or
/// MID2 (R3) arc of the curve. R4: empty level. OnSigma: within tolerance of
/// the bifurcation set.
enum class RegionLabel { R1, R2, R3, R4, OnSigma };

inline const char* to_string(RegionLabel r) {
  switch (r) {
    case RegionLabel::R1: return "R1";
    case RegionLabel::R2: return "R2";
    case RegionLabel::R3: return "R3";
    case RegionLabel::R4: return "R4";
    case RegionLabel::OnSigma: return "ON_SIGMA";
  }
  return "?";
}

/// Number of tori in J_k for a regular region; -1 on the bifurcation set.
inline int torus_count(RegionLabel r) {
  switch (r) {
    case RegionLabel::R1: return 1;
    case RegionLabel::R2:
    case RegionLabel::R3: return 2;
    case RegionLabel::R4: return 0;
    case RegionLabel::OnSigma: return -1;
  }
  return -1;
}

inline constexpr const char* kRegionConvention =
    "R1: one torus; R2: two tori, extra circle bounded by the MID1 arc (a1 < sigma < a2); "
    "R3: two tori, extra circle bounded by the MID2 arc (a2 < sigma < a3); R4: empty; "
    "a1 < a2 < a3 are the sorted diagonal entries of A^-1";

inline constexpr double kDefaultSigmaTolerance = 1e-9;
inline constexpr int kMonotoneScanSamples = 1024;

namespace detail {

inline double pole_distance_tol(const GyrostatParams& p) { return 1e-12 * p.poles()[2]; }

// theta interval (open) of a branch.
inline std::pair<double, double> theta_interval(Branch b, const GyrostatParams& p) {
  const auto& a = p.poles();
  constexpr double half_pi = std::numbers::pi / 2;
  switch (b) {
    case Branch::Low: return {-half_pi, std::atan(a[0])};
    case Branch::Mid1: return {std::atan(a[0]), std::atan(a[1])};
    case Branch::Mid2: return {std::atan(a[1]), std::atan(a[2])};
    case Branch::High: return {std::atan(a[2]), half_pi};
  }
  return {0.0, 0.0};
}

inline std::pair<double, double> sigma_interval(Branch b, const GyrostatParams& p) {
  const auto& a = p.poles();
  constexpr double inf = std::numeric_limits<double>::infinity();
  switch (b) {
    case Branch::Low: return {-inf, a[0]};
    case Branch::Mid1: return {a[0], a[1]};
    case Branch::Mid2: return {a[1], a[2]};
    case Branch::High: return {a[2], inf};
  }
  return {0.0, 0.0};
}

inline double curve_k1(double sigma, const GyrostatParams& p) {
  double k1 = 0.0;
  for (int i = 0; i < 3; ++i) {
    const double a = p.inv_inertia()[i];
    const double l = p.lambda()[i];
    const double d = sigma - a;
    k1 += a * a * l * l / (d * d);
  }
  return k1;
}

inline double curve_dk1(double sigma, const GyrostatParams& p) {
  double d1 = 0.0;
  for (int i = 0; i < 3; ++i) {
    const double a = p.inv_inertia()[i];
    const double l = p.lambda()[i];
    const double d = sigma - a;
    d1 += -2.0 * a * a * l * l / (d * d * d);
  }
  return d1;
}

inline double curve_k2(double sigma, const GyrostatParams& p) {
  if (std::isinf(sigma)) return p.inv_inertia().dot(p.lambda().cwiseAbs2());
  double s = 0.0;
  for (int i = 0; i < 3; ++i) {
    const double a = p.inv_inertia()[i];
    const double l = p.lambda()[i];
    const double d = sigma - a;
    s += a * l * l / (d * d);
  }
  return sigma * sigma * s;
}

// Bisection for a root of g on [lo, hi] given sign(g(lo)) != sign(g(hi)).
template <class F>
double bisect(F&& g, double lo, double hi) {
  double glo = g(lo);
  for (int it = 0; it < 400; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double gm = g(mid);
    if (gm == 0.0) return mid;
    if ((gm < 0.0) == (glo < 0.0)) {
      lo = mid;
      glo = gm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// Strict monotonicity of k1 over kMonotoneScanSamples interior theta samples.
inline void verify_monotone(Branch b, const GyrostatParams& p) {
  const auto [lo, hi] = theta_interval(b, p);
  const bool increasing = b == Branch::Low;
  double prev = increasing ? -1.0 : std::numeric_limits<double>::infinity();
  for (int i = 1; i <= kMonotoneScanSamples; ++i) {
    const double theta = lo + (hi - lo) * i / (kMonotoneScanSamples + 1);
    const double k1 = curve_k1(std::tan(theta), p);
    if (increasing ? !(k1 > prev) : !(k1 < prev)) {
      std::ostringstream os;
      os << "k1(sigma) is not monotone on branch " << to_string(b) << " near sigma = " << std::tan(theta);
      throw NonMonotone(os.str());
    }
    prev = k1;
  }
}

// sigma on an outer branch with k1(sigma) = k1.
inline double outer_branch_sigma(double k1, Branch b, const GyrostatParams& p) {
  p.require_generic();
  if (!(k1 > 0.0) || !std::isfinite(k1)) {
    std::ostringstream os;
    os << "k1 = " << k1 << " is outside the image (0, inf) of branch " << to_string(b);
    throw OutOfRange(os.str());
  }
  verify_monotone(b, p);
  const auto [lo, hi] = theta_interval(b, p);
  const double theta =
      bisect([&](double th) { return curve_k1(std::tan(th), p) - k1; }, lo, hi);
  return std::tan(theta);
}

}  // namespace detail

/// The bifurcation curve at parameter sigma. Throws PoleError next to a pole.
inline std::pair<double, double> curve8(double sigma, const GyrostatParams& p) {
  if (std::isinf(sigma)) return {0.0, detail::curve_k2(sigma, p)};
  for (double a : p.poles()) {
    if (std::abs(sigma - a) <= detail::pole_distance_tol(p)) {
      std::ostringstream os;
      os.precision(17);
      os << "sigma = " << sigma << " is a pole of the bifurcation curve (a = " << a << ")";
      throw PoleError(os.str());
    }
  }
  return {detail::curve_k1(sigma, p), detail::curve_k2(sigma, p)};
}

inline Branch branch_of(double sigma, const GyrostatParams& p) {
  const auto& a = p.poles();
  if (sigma < a[0]) return Branch::Low;
  if (sigma < a[1]) return Branch::Mid1;
  if (sigma < a[2]) return Branch::Mid2;
  return Branch::High;
}

/// Tangency point of the two levels at curve parameter sigma: m_i = a_i l_i / (a_i - sigma).
inline Vec3 tangency_momentum(double sigma, const GyrostatParams& p) {
  Vec3 m;
  for (int i = 0; i < 3; ++i) {
    const double a = p.inv_inertia()[i];
    m[i] = a * p.lambda()[i] / (a - sigma);
  }
  return m;
}

/// Minimum of K2 on the sphere |m|^2 = k1 (branch sigma < a1).
inline double branch_f(double k1, const GyrostatParams& p) {
  return detail::curve_k2(detail::outer_branch_sigma(k1, Branch::Low, p), p);
}

/// Maximum of K2 on the sphere |m|^2 = k1 (branch sigma > a3).
inline double branch_g(double k1, const GyrostatParams& p) {
  return detail::curve_k2(detail::outer_branch_sigma(k1, Branch::High, p), p);
}

struct LobeTip {
  double sigma = 0.0;
  double k1 = 0.0;
  double k2 = 0.0;
};

/// Minimum of the convex k1(sigma) on a middle branch; the lobe is born there.
inline LobeTip lobe_tip(Branch mid, const GyrostatParams& p) {
  p.require_generic();
  if (mid != Branch::Mid1 && mid != Branch::Mid2) throw InvalidInput("lobe_tip needs a middle branch");
  const auto [lo, hi] = detail::sigma_interval(mid, p);
  const double width = hi - lo;
  const double s = detail::bisect([&](double x) { return detail::curve_dk1(x, p); },
                                  lo + 1e-15 * width, hi - 1e-15 * width);
  return {s, detail::curve_k1(s, p), detail::curve_k2(s, p)};
}

/// Pair of critical values of K2 carried by a middle branch at level k1.
struct Lobe {
  double sigma_left = 0.0;
  double sigma_right = 0.0;
  double k2_left = 0.0;
  double k2_right = 0.0;

  double k2_low() const noexcept { return std::min(k2_left, k2_right); }
  double k2_high() const noexcept { return std::max(k2_left, k2_right); }
  bool contains(double k2) const noexcept { return k2 > k2_low() && k2 < k2_high(); }
};

inline std::optional<Lobe> mid_lobe(double k1, Branch mid, const GyrostatParams& p) {
  const LobeTip tip = lobe_tip(mid, p);
  if (!(k1 > tip.k1)) return std::nullopt;
  const auto [lo, hi] = detail::sigma_interval(mid, p);
  auto g = [&](double s) { return detail::curve_k1(s, p) - k1; };
  // k1 -> inf at both poles; shrink toward the pole until the sign flips.
  double left = lo + 1e-3 * (tip.sigma - lo);
  while (g(left) < 0.0 && left - lo > 1e-300) left = lo + 1e-3 * (left - lo);
  double right = hi - 1e-3 * (hi - tip.sigma);
  while (g(right) < 0.0 && hi - right > 1e-300) right = hi - 1e-3 * (hi - right);
  Lobe lobe;
  lobe.sigma_left = detail::bisect(g, left, tip.sigma);
  lobe.sigma_right = detail::bisect(g, tip.sigma, right);
  lobe.k2_left = detail::curve_k2(lobe.sigma_left, p);
  lobe.k2_right = detail::curve_k2(lobe.sigma_right, p);
  return lobe;
}

/// All curve parameters sigma at which k1(sigma) = k1, one or two per branch.
inline std::vector<BifurcationCurveSample> critical_points(double k1, const GyrostatParams& p) {
  std::vector<BifurcationCurveSample> out;
  if (!(k1 > 0.0)) return out;
  const double s_low = detail::outer_branch_sigma(k1, Branch::Low, p);
  out.push_back({s_low, k1, detail::curve_k2(s_low, p), Branch::Low});
  for (Branch b : {Branch::Mid1, Branch::Mid2}) {
    if (auto lobe = mid_lobe(k1, b, p)) {
      out.push_back({lobe->sigma_left, k1, lobe->k2_left, b});
      out.push_back({lobe->sigma_right, k1, lobe->k2_right, b});
    }
  }
  const double s_high = detail::outer_branch_sigma(k1, Branch::High, p);
  out.push_back({s_high, k1, detail::curve_k2(s_high, p), Branch::High});
  return out;
}

namespace detail {

inline double scaled(double x) { return std::max(1.0, std::abs(x)); }

// Coordinatewise-scaled proximity to the bifurcation set. Uses the k2-offset to
// the curve and the k1-offset to the parabolic cylinder as distance proxies.
inline bool near_sigma(const IntegralConstants& k, const GyrostatParams& p, double tol) {
  const double s1 = scaled(k.k1), s2 = scaled(k.k2), s3 = scaled(k.k3);
  const double k2_inf = curve_k2(std::numeric_limits<double>::infinity(), p);

  // Endpoint k1 = 0 shared by every piece.
  if (k.k1 <= tol * s1) {
    return std::abs(k.k1) <= tol * s1 && std::abs(k.k3) <= tol * s3 &&
           std::abs(k.k2 - k2_inf) <= tol * s2;
  }

  // Parabolic cylinder k1 = k3^2 between the extreme branches.
  const double c2_gap = std::abs(k.k1 - k.k3 * k.k3) / s1;
  if (c2_gap <= tol) {
    const double f = branch_f(k.k1, p), g = branch_g(k.k1, p);
    if (k.k2 >= f - tol * s2 && k.k2 <= g + tol * s2) return true;
  }

  // Cylinder over the curve, on the feasible side k1 >= k3^2.
  if (k.k1 >= k.k3 * k.k3 - tol * s1) {
    for (const auto& c : critical_points(k.k1, p)) {
      if (std::abs(k.k2 - c.k2) <= tol * s2) return true;
    }
    for (Branch b : {Branch::Mid1, Branch::Mid2}) {
      const LobeTip tip = lobe_tip(b, p);
      if (std::abs(k.k1 - tip.k1) <= tol * s1 && std::abs(k.k2 - tip.k2) <= tol * s2) return true;
    }
  }
  return false;
}

}  // namespace detail

inline RegionLabel classify(const IntegralConstants& k, const GyrostatParams& p,
                            double tol = kDefaultSigmaTolerance) {
  p.require_generic();
  if (!std::isfinite(k.k1) || !std::isfinite(k.k2) || !std::isfinite(k.k3))
    throw InvalidInput("integral constants must be finite");
  if (!(tol >= 0.0)) throw InvalidInput("tolerance must be non-negative");

  if (detail::near_sigma(k, p, tol)) return RegionLabel::OnSigma;
  if (k.k1 <= 0.0 || k.k1 < k.k3 * k.k3) return RegionLabel::R4;
  if (k.k2 < branch_f(k.k1, p) || k.k2 > branch_g(k.k1, p)) return RegionLabel::R4;
  if (auto lobe = mid_lobe(k.k1, Branch::Mid1, p); lobe && lobe->contains(k.k2)) return RegionLabel::R2;
  if (auto lobe = mid_lobe(k.k1, Branch::Mid2, p); lobe && lobe->contains(k.k2)) return RegionLabel::R3;
  return RegionLabel::R1;
}

/// `count` samples of the curve per branch, uniform in theta = atan(sigma).
/// The LOW branch always includes sigma = 0 when a1 > 0.
inline std::vector<BifurcationCurveSample> sample_curve(int count, const GyrostatParams& p) {
  p.require_generic();
  if (count < 2) throw InvalidInput("need at least two samples per branch");
  std::vector<BifurcationCurveSample> out;
  for (Branch b : {Branch::Low, Branch::Mid1, Branch::Mid2, Branch::High}) {
    const auto [lo, hi] = detail::theta_interval(b, p);
    std::vector<double> sigmas;
    for (int i = 1; i <= count; ++i) sigmas.push_back(std::tan(lo + (hi - lo) * i / (count + 1)));
    if (b == branch_of(0.0, p)) {
      auto it = std::lower_bound(sigmas.begin(), sigmas.end(), 0.0);
      if (it == sigmas.end() || *it != 0.0) sigmas.insert(it, 0.0);
    }
    for (double s : sigmas) {
      const auto [k1, k2] = curve8(s, p);
      out.push_back({s, k1, k2, b});
    }
  }
  return out;
}

/// One polyline of the bifurcation set cut at fixed k3, in the (k1, k2) plane.
struct SigmaSlicePiece {
  std::string kind;  // "C1_LOW", "C1_MID1", "C1_MID2", "C1_HIGH" or "C2"
  std::vector<std::pair<double, double>> points;
};

/// Bifurcation set at fixed k3: the curve restricted to k1 >= k3^2 (clipped at
/// k1_max) plus the segment k1 = k3^2, f <= k2 <= g.
inline std::vector<SigmaSlicePiece> sigma_slice(double k3, const GyrostatParams& p, int samples,
                                                double k1_max) {
  p.require_generic();
  if (samples < 2) throw InvalidInput("need at least two samples per branch");
  const double k1_min = k3 * k3;
  std::vector<SigmaSlicePiece> pieces;
  for (Branch b : {Branch::Low, Branch::Mid1, Branch::Mid2, Branch::High}) {
    const auto [lo, hi] = detail::theta_interval(b, p);
    SigmaSlicePiece current{std::string("C1_") + to_string(b), {}};
    for (int i = 0; i <= samples + 1; ++i) {
      std::pair<double, double> pt;
      bool inside;
      if (i == 0 || i == samples + 1) {
        // Infinite ends of the outer branches are genuine curve points.
        const bool infinite_end = (b == Branch::Low && i == 0) || (b == Branch::High && i == samples + 1);
        if (!infinite_end) continue;
        pt = {0.0, detail::curve_k2(std::numeric_limits<double>::infinity(), p)};
        inside = pt.first >= k1_min;
      } else {
        const double s = std::tan(lo + (hi - lo) * i / (samples + 1));
        pt = curve8(s, p);
        inside = pt.first >= k1_min && pt.first <= k1_max;
      }
      if (inside) {
        current.points.push_back(pt);
      } else if (!current.points.empty()) {
        pieces.push_back(current);
        current.points.clear();
      }
    }
    if (!current.points.empty()) pieces.push_back(current);
  }
  if (k1_min > 0.0 && k1_min <= k1_max) {
    pieces.push_back({"C2", {{k1_min, branch_f(k1_min, p)}, {k1_min, branch_g(k1_min, p)}}});
  }
  return pieces;
}

}  // namespace gyrostat
