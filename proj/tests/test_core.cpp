#include <gtest/gtest.h>

#include "common.hpp"
#include "gyrostat/core.hpp"

using namespace gyrostat;
using testing_support::reference_params;
using testing_support::Sampler;

TEST(Params, RejectsNonPositiveInertia) {
  EXPECT_THROW(GyrostatParams({1.0, 0.0, 3.0}, {0.1, 0.2, 0.3}), InvalidInput);
  EXPECT_THROW(GyrostatParams({1.0, -2.0, 3.0}, {0.1, 0.2, 0.3}), InvalidInput);
  EXPECT_NO_THROW(GyrostatParams({1.0, 2.0, 3.0}, {0.0, 0.0, 0.0}));
}

TEST(Params, Genericity) {
  EXPECT_TRUE(reference_params().is_generic());
  const GyrostatParams in_plane({1.0, 2.0, 3.0}, {0.1, 0.0, 0.3});
  EXPECT_FALSE(in_plane.is_generic());
  EXPECT_THROW(in_plane.require_generic(), NonGenericParams);
  const GyrostatParams tied({2.0, 2.0, 3.0}, {0.1, 0.2, 0.3});
  EXPECT_THROW(tied.require_generic(), NonGenericParams);
}

TEST(Params, PolesAreSortedInverseMoments) {
  const auto& a = reference_params().poles();
  EXPECT_DOUBLE_EQ(a[0], 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(a[1], 0.5);
  EXPECT_DOUBLE_EQ(a[2], 1.0);
}

TEST(State, RequiresUnitPoissonVector) {
  EXPECT_THROW(State({0, 0, 0}, {1.0, 0.0, 1e-5}), InvalidInput);
  EXPECT_NO_THROW(State({0, 0, 0}, Vec3(1.0, 2.0, 2.0) / 3.0));
}

TEST(Integrals, ZeroVelocity) {
  const auto p = reference_params();
  Sampler s(1);
  for (int i = 0; i < 20; ++i) {
    const Vec3 nu = s.unit();
    const auto k = integrals(Vec3::Zero(), nu, p);
    EXPECT_DOUBLE_EQ(k.k1, p.lambda().squaredNorm());
    EXPECT_DOUBLE_EQ(k.k2, 0.0);
    EXPECT_DOUBLE_EQ(k.k3, p.lambda().dot(nu));
  }
}

TEST(Integrals, IdentityInertia) {
  const GyrostatParams p({1, 1, 1}, {0, 0, 0});
  const auto k = integrals(State({1, 0, 0}, {0, 0, 1}), p);
  EXPECT_DOUBLE_EQ(k.k1, 1.0);
  EXPECT_DOUBLE_EQ(k.k2, 1.0);
  EXPECT_DOUBLE_EQ(k.k3, 0.0);
}

TEST(AngularMomentum, Examples) {
  const auto p = reference_params();
  EXPECT_EQ(angular_momentum(Vec3::Zero(), p), p.lambda());
  const GyrostatParams q({2, 3, 4}, {0, 0, 0});
  EXPECT_EQ(angular_momentum(Vec3(1, 1, 1), q), Vec3(2, 3, 4));
}

TEST(AngularMomentum, SquaredNormIsK1) {
  const auto p = reference_params();
  Sampler s(2);
  for (int i = 0; i < 1000; ++i) {
    const Vec3 w = s.gaussian(2.0);
    EXPECT_EQ(angular_momentum(w, p).squaredNorm(), integrals(w, s.unit(), p).k1);
  }
}

TEST(Rhs, ParallelNuIsStationary) {
  const auto p = reference_params();
  const Vec3 w(0.3, -0.4, 1.2);
  EXPECT_LT(rhs(State(w, w.normalized()), p).d_nu.norm(), 1e-15);
}

TEST(Rhs, SteadyRotation) {
  // Principal axis with lambda along it: A w + lambda is parallel to w.
  const GyrostatParams p({1, 2, 3}, {0, 0, 0.5});
  EXPECT_LT(rhs(State({0, 0, 0.7}, {1, 0, 0}), p).d_omega.norm(), 1e-15);
  // Generic lambda: w = c (a_i l_i / (s - a_i))-type steady rotation found from m = mu w.
  const auto q = reference_params();
  const double mu = 4.0;  // m = mu w  <=>  (mu - A_i) w_i = l_i
  Vec3 w;
  for (int i = 0; i < 3; ++i) w[i] = q.lambda()[i] / (mu - q.inertia()[i]);
  EXPECT_LT(rhs(State(w, Vec3(0, 0, 1)), q).d_omega.norm(), 1e-15);
}

TEST(Rhs, IntegralsAreConservedToFirstOrder) {
  const auto p = reference_params();
  Sampler s(3);
  // Each K is quadratic along a straight line, so central differences are exact
  // up to rounding and a large step is safe.
  const double h = 1e-3;
  for (int i = 0; i < 200; ++i) {
    const State x = s.state();
    const Tangent t = rhs(x, p);
    const auto plus = integrals(x.omega() + h * t.d_omega, x.nu() + h * t.d_nu, p);
    const auto minus = integrals(x.omega() - h * t.d_omega, x.nu() - h * t.d_nu, p);
    EXPECT_NEAR((plus.k1 - minus.k1) / (2 * h), 0.0, 1e-10);
    EXPECT_NEAR((plus.k2 - minus.k2) / (2 * h), 0.0, 1e-10);
    EXPECT_NEAR((plus.k3 - minus.k3) / (2 * h), 0.0, 1e-10);
    // Exact directional derivatives.
    const Vec3 m = angular_momentum(x.omega(), p);
    const Vec3 Adw = p.inertia().cwiseProduct(t.d_omega);
    EXPECT_NEAR(2 * m.dot(Adw), 0.0, 1e-12);
    EXPECT_NEAR(2 * x.omega().dot(Adw), 0.0, 1e-12);
    EXPECT_NEAR(Adw.dot(x.nu()) + m.dot(t.d_nu), 0.0, 1e-12);
  }
}

TEST(Rhs, TangentToPoissonSphere) {
  const auto p = reference_params();
  Sampler s(4);
  for (int i = 0; i < 1000; ++i) {
    const State x = s.state(3.0);
    EXPECT_LT(std::abs(x.nu().dot(rhs(x, p).d_nu)), 1e-14);
  }
}

TEST(Integrals, CauchySchwarz) {
  const auto p = reference_params();
  Sampler s(5);
  for (int i = 0; i < 1000; ++i) {
    const auto k = integrals(s.state(2.0), p);
    EXPECT_LE(k.k3 * k.k3, k.k1 * (1 + 1e-12));
    EXPECT_TRUE(k.feasible() || k.k3 * k.k3 - k.k1 < 1e-12 * k.k1);
  }
}
