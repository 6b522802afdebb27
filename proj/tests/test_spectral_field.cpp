#include <cmath>
#include <numbers>

#include "alphadyn/error.hpp"
#include "alphadyn/spectral_field.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace alphadyn;
using testing::max_abs_diff;
using testing::random_field;
using testing::Rng;

namespace {

// u = (-a sin z + c cos y, -b sin x + a cos z, -c sin y + b cos x)
Vec3 abc_closed(const AbcParams& p, const Vec3& x) {
  return {-p.a * std::sin(x[2]) + p.c * std::cos(x[1]), -p.b * std::sin(x[0]) + p.a * std::cos(x[2]),
          -p.c * std::sin(x[1]) + p.b * std::cos(x[0])};
}

CVec3 value(const SpectralField& f, const Vec3& x) {
  const FieldJet j = evaluate_jet(f, x, 0);
  return {j.value[0], j.value[1], j.value[2]};
}

}  // namespace

TEST_SUITE("spectral_field") {
  TEST_CASE("ABC coefficient at k = (0,0,1)") {
    const SpectralField U = make_abc({1, 1, 1}, 1);
    const CVec3 plus = U.coeff({0, 0, 1});
    CHECK(std::abs(plus[0] - cplx(0.0, 0.5)) < 1e-15);
    CHECK(std::abs(plus[1] - cplx(0.5, 0.0)) < 1e-15);
    CHECK(std::abs(plus[2]) < 1e-15);
    const CVec3 minus = U.coeff({0, 0, -1});
    CHECK(std::abs(minus[0] - cplx(0.0, -0.5)) < 1e-15);
    CHECK(std::abs(minus[1] - cplx(0.5, 0.0)) < 1e-15);
  }

  TEST_CASE("ABC synthesis matches the real-space formula") {
    Rng r(1);
    for (int t = 0; t < 20; ++t) {
      const AbcParams p{r.uniform(-2, 2), r.uniform(-2, 2), r.uniform(-2, 2)};
      const SpectralField U = make_abc(p, 1 + t % 3);
      const Vec3 x = r.vec3(10.0);
      const CVec3 v = value(U, x);
      const Vec3 e = abc_closed(p, x);
      CHECK((v - e.cast<cplx>()).norm() < 1e-13);
      CHECK(v.imag().norm() < 1e-14);
    }
  }

  TEST_CASE("zero amplitudes give the zero field") { CHECK(make_abc({0, 0, 0}, 2).is_zero()); }

  TEST_CASE("Parseval mass of ABC(1,2,3) is 14") {
    const SpectralField U = make_abc({1, 2, 3}, 2);
    double s = 0.0;
    for (std::size_t i = 0; i < U.size(); ++i) s += std::norm(U.data()[i]);
    CHECK(s == doctest::Approx(14.0).epsilon(1e-15));
    CHECK(l2(U) == doctest::Approx(std::sqrt(14.0)).epsilon(1e-15));
  }

  TEST_CASE("Beltrami: curl ABC = -ABC") {
    const SpectralField U = make_abc({1, 1, 1}, 2);
    CHECK(max_abs_diff(curl(U), -1.0 * U) < 1e-15);
    // componentwise i k x c(k) on the six modes
    for (WaveVector k : {WaveVector{1, 0, 0}, WaveVector{-1, 0, 0}, WaveVector{0, 1, 0}, WaveVector{0, -1, 0},
                         WaveVector{0, 0, 1}, WaveVector{0, 0, -1}}) {
      const Vec3 kv(k.k1, k.k2, k.k3);
      const CVec3 c = U.coeff(k);
      const CVec3 ikc = cplx(0, 1) * testing::bcross(kv.cast<cplx>(), c);
      CHECK((ikc + c).norm() < 1e-15);
    }
  }

  TEST_CASE("curl of constants and gradients vanishes") {
    CHECK(curl(constant_field(2, CVec3(1, 2, 3))).is_zero());
    SpectralField g(2);
    const WaveVector k{1, -2, 1};
    g.set_coeff(k, CVec3(1, -2, 1) * cplx(0.3, 0.7));
    CHECK(curl(g).vec().norm() < 1e-15);
  }

  TEST_CASE("cross products") {
    Rng r(2);
    const SpectralField f = random_field(2, r);
    CHECK(cross(f, f).vec().norm() < 1e-13);
    const SpectralField g = random_field(2, r);
    const cplx a(0.7, -1.1);
    CHECK(max_abs_diff(cross(a * f, g), a * cross(f, g)) < 1e-13);
    // ABC(1,0,0) x e3 by hand: (-sin z, cos z, 0) x e3 = (cos z, sin z, 0)
    const SpectralField h = cross(make_abc({1, 0, 0}, 1), constant_field(1, CVec3(0, 0, 1)), 1);
    const CVec3 p = h.coeff({0, 0, 1});
    CHECK(std::abs(p[0] - cplx(0.5, 0)) < 1e-15);
    CHECK(std::abs(p[1] - cplx(0, -0.5)) < 1e-15);
    CHECK(std::abs(p[2]) < 1e-15);
    const CVec3 m = h.coeff({0, 0, -1});
    CHECK(std::abs(m[0] - cplx(0.5, 0)) < 1e-15);
    CHECK(std::abs(m[1] - cplx(0, 0.5)) < 1e-15);
  }

  TEST_CASE("pointwise cross product property") {
    Rng r(3);
    for (int t = 0; t < 5; ++t) {
      const SpectralField f = random_field(2, r), g = random_field(1, r);
      const SpectralField h = cross(f, g);
      const Vec3 x = r.vec3(5.0);
      const CVec3 a = value(f, x), b = value(g, x), c = value(h, x);
      const CVec3 e(a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]);
      CHECK((c - e).norm() < 1e-12);
    }
  }

  TEST_CASE("mean_cross equals the zero mode of cross") {
    Rng r(4);
    const SpectralField f = random_field(2, r), g = random_field(2, r);
    CHECK((mean_cross(f, g) - cross(f, g).coeff({0, 0, 0})).norm() < 1e-13);
  }

  TEST_CASE("Laplacian pair") {
    SpectralField e(2);
    e.set_coeff({1, 0, 0}, CVec3(0, 1, 2));
    CHECK(max_abs_diff(laplacian(e), -1.0 * e) == 0.0);
    Rng r(5);
    const SpectralField f = random_field(3, r, {.mean_free = true});
    CHECK(max_abs_diff(inv_laplacian(laplacian(f)), f) < 1e-15);
    const SpectralField U = make_abc({1, 1, 1}, 2);
    CHECK(max_abs_diff(inv_laplacian(U), -1.0 * U) < 1e-15);
  }

  TEST_CASE("means") {
    CHECK(mean(make_abc({1, 1, 1}, 1)).norm() == 0.0);
    CHECK((mean(constant_field(1, CVec3(1, 2, 3))) - CVec3(1, 2, 3)).norm() == 0.0);
    Rng r(6);
    const SpectralField f = random_field(2, r), g = random_field(2, r);
    CHECK((mean(f + g) - mean(f) - mean(g)).norm() < 1e-15);
  }

  TEST_CASE("norms of ABC(1,1,1)") {
    const Norms z = norms(SpectralField(2));
    CHECK(z.l2 == 0.0);
    CHECK(z.sup_grad_estimate == 0.0);
    const SpectralField U = make_abc({1, 1, 1}, 1);
    const Norms n = norms(U);
    // max{|a|+|c|, |a|+|b|, |b|+|c|}
    CHECK(n.sup_grad_estimate == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(n.l2 == doctest::Approx(std::sqrt(3.0)).epsilon(1e-14));
    const Norms s = norms(-2.5 * U);
    CHECK(s.l2 == doctest::Approx(2.5 * n.l2).epsilon(1e-14));
  }

  TEST_CASE("rescale_flow") {
    const SpectralField U = make_abc({1, 2, 0.5}, 1);
    CHECK(max_abs_diff(rescale_flow(U, 0.9, 0), U) == 0.0);
    const double g0 = norms(U).sup_grad_estimate;
    Rng r(7);
    for (int n : {1, 2, 5}) {
      const SpectralField Un = rescale_flow(U, 0.9, n);
      CHECK(norms(Un).sup_grad_estimate == doctest::Approx(g0).epsilon(1e-12));
      // pointwise: U_n(x) = zeta^{n/2} U(zeta^{-n/2} x)
      const double s = std::pow(0.9, 0.5 * n);
      const Vec3 x = r.vec3(4.0);
      CHECK((value(Un, x) - s * value(U, x / s)).norm() < 1e-13);
      // cell mass: mean square times zeta^n, cell volume times zeta^{3n/2}
      const Norms a = norms(U), b = norms(Un);
      CHECK(b.l2 == doctest::Approx(s * a.l2).epsilon(1e-13));
      CHECK(b.cell_l2 == doctest::Approx(a.cell_l2 * s * std::pow(s, 1.5)).epsilon(1e-13));
    }
  }

  TEST_CASE("reality and conjugation") {
    Rng r(8);
    const SpectralField f = random_field(2, r, {.real = true});
    CHECK(reality_defect(f) < 1e-15);
    const SpectralField g = random_field(2, r);
    CHECK(reality_defect(g) > 1e-3);
    const Vec3 x = r.vec3(3.0);
    CHECK((value(conjugate(g), x) - value(g, x).conjugate()).norm() < 1e-13);
  }

  TEST_CASE("divergence projection and streamfunction") {
    Rng r(9);
    const Vec3 j(0.1, -0.2, 0.05);
    const SpectralField f = project_divergence_free(random_field(2, r), j);
    CHECK(max_divergence(f, j) < 1e-14);
    const SpectralField U = random_field(2, r, {.real = true, .mean_free = true, .div_free = true});
    const SpectralField psi = streamfunction(U);
    CHECK(max_abs_diff(curl(psi), U) < 1e-14);
    CHECK_THROWS_AS(streamfunction(constant_field(1, CVec3(1, 0, 0))), Error);
  }

  TEST_CASE("jet derivatives agree with finite differences") {
    Rng r(10);
    const SpectralField f = random_field(2, r);
    const Vec3 x = r.vec3(2.0);
    const FieldJet J = evaluate_jet(f, x, 2);
    const double h = 1e-5;
    for (int b = 0; b < 3; ++b) {
      Vec3 e = Vec3::Zero();
      e[b] = h;
      const CVec3 d = (value(f, x + e) - value(f, x - e)) / (2 * h);
      for (int a = 0; a < 3; ++a) CHECK(std::abs(J.grad[a][b] - d[a]) < 1e-8);
    }
  }

  TEST_CASE("truncation guards") {
    CHECK_THROWS_AS(SpectralField(-1), Error);
    SpectralField a(1), b(2);
    CHECK_THROWS_AS(a += b, Error);
    CHECK(max_abs_diff(resized(resized(make_abc({1, 1, 1}, 1), 3), 1), make_abc({1, 1, 1}, 1)) == 0.0);
  }
}
