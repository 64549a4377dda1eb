#pragma once

#include <cmath>
#include <random>

#include "gyrostat/core.hpp"

namespace testing_support {

using gyrostat::GyrostatParams;
using gyrostat::State;
using gyrostat::Vec3;

inline GyrostatParams reference_params() { return {{1.0, 2.0, 3.0}, {0.1, 0.2, 0.3}}; }

class Sampler {
 public:
  explicit Sampler(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  Vec3 gaussian(double scale = 1.0) {
    std::normal_distribution<double> g(0.0, scale);
    return {g(rng_), g(rng_), g(rng_)};
  }
  Vec3 unit() {
    Vec3 v = gaussian();
    while (v.norm() < 1e-8) v = gaussian();
    return v.normalized();
  }
  State state(double omega_scale = 1.0) { return {gaussian(omega_scale), unit()}; }
  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

}  // namespace testing_support
