#pragma once

// Seeded generators for property tests.

#include <Eigen/Geometry>
#include <cstdint>
#include <random>

#include "alphadyn/spectral_field.hpp"

namespace testing {

using alphadyn::cplx;
using alphadyn::SpectralField;
using alphadyn::Vec3;
using alphadyn::WaveVector;

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : g_(seed) {}
  double uniform(double a = -1.0, double b = 1.0) { return std::uniform_real_distribution<double>(a, b)(g_); }
  int integer(int a, int b) { return std::uniform_int_distribution<int>(a, b)(g_); }
  cplx complex() { return {uniform(), uniform()}; }
  Vec3 vec3(double scale = 1.0) { return scale * Vec3(uniform(), uniform(), uniform()); }
  Vec3 unit() {
    for (;;) {
      Vec3 v = vec3();
      if (v.norm() > 0.1 && v.norm() <= 1.0) return v.normalized();
    }
  }
  alphadyn::CVec3 cvec3() { return {complex(), complex(), complex()}; }

 private:
  std::mt19937_64 g_;
};

struct FieldShape {
  bool real = false;
  bool mean_free = false;
  bool div_free = false;
};

// random coefficients with |c(k)| decaying like 1 / (1 + |k|^2)
inline SpectralField random_field(int N, Rng& r, FieldShape shape = {}, double scale = 1.0) {
  SpectralField f(N);
  for (std::size_t i = 0; i < f.modes(); ++i) {
    const WaveVector k = f.wave(i);
    const double decay = 1.0 / (1.0 + k.k1 * k.k1 + k.k2 * k.k2 + k.k3 * k.k3);
    alphadyn::CVec3 v = r.cvec3() * (scale * decay);
    f.set_coeff(k, v);
  }
  if (shape.real) {
    SpectralField c = alphadyn::conjugate(f);
    f += c;
    f *= 0.5;
    f.set_kind(alphadyn::FieldKind::real_valued);
  }
  if (shape.mean_free) f = alphadyn::without_mean(f);
  if (shape.div_free) f = alphadyn::project_divergence_free(f);
  return f;
}

inline double max_abs_diff(const SpectralField& a, const SpectralField& b) {
  return (a.vec() - b.vec()).cwiseAbs().maxCoeff();
}

// plain bilinear cross; Eigen's conjugates complex operands
inline alphadyn::CVec3 bcross(const alphadyn::CVec3& a, const alphadyn::CVec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

}  // namespace testing
