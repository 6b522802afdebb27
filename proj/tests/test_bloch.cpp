#include <cmath>
#include <filesystem>

#include "alphadyn/bloch.hpp"
#include "alphadyn/error.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace alphadyn;
using testing::random_field;
using testing::Rng;

namespace {

constexpr cplx I(0.0, 1.0);

CVec3 field_at(const SpectralField& G, const Vec3& x) {
  CVec3 v = CVec3::Zero();
  for (std::size_t m = 0; m < G.modes(); ++m) {
    const WaveVector k = G.wave(m);
    const double ph = (k.k1 * x[0] + k.k2 * x[1] + k.k3 * x[2]) / G.period_scale();
    v += std::exp(I * ph) * G.coeff(k);
  }
  return v;
}

// int_{-J}^{J} exp(i t x) dt
double sinc_integral(double J, double x) { return x == 0.0 ? 2.0 * J : 2.0 * std::sin(J * x) / x; }

// composite Simpson for J int_{-1}^{1} l_a(t) exp(i J t x) dt
cplx profile_oracle(const std::vector<double>& t, int a, double J, double x) {
  const int n = 20000;
  const double h = 2.0 / n;
  cplx s = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double u = -1.0 + i * h;
    double l = 1.0;
    for (std::size_t b = 0; b < t.size(); ++b)
      if (static_cast<int>(b) != a) l *= (u - t[b]) / (t[a] - t[b]);
    const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    s += w * l * std::exp(I * (J * u * x));
  }
  return J * s * h / 3.0;
}

}  // namespace

TEST_SUITE("bloch") {
  TEST_CASE("Gauss-Legendre exactness") {
    for (int n : {1, 3, 5, 8}) {
      const GaussRule g = gauss_legendre(n);
      REQUIRE(g.t.size() == static_cast<std::size_t>(n));
      for (int p = 0; p <= 2 * n - 1; ++p) {
        double s = 0.0;
        for (int i = 0; i < n; ++i) s += g.w[i] * std::pow(g.t[i], p);
        const double exact = p % 2 ? 0.0 : 2.0 / (p + 1);
        CHECK(s == doctest::Approx(exact).epsilon(1e-14).scale(1.0));
      }
    }
  }

  TEST_CASE("Lagrange profiles against direct quadrature") {
    const GaussRule g = gauss_legendre(5);
    for (int a : {0, 2, 4})
      for (double x : {0.0, 3.0, 250.0, 4000.0}) {
        const cplx o = profile_oracle(g.t, a, 0.01, x);
        CHECK(std::abs(lagrange_profile(g, a, 0.01, x) - o) < 1e-12);
      }
    // far from the origin the profile must still decay, not lose digits
    CHECK(std::abs(lagrange_profile(g, 2, 4e-4, 1e9)) < 1e-8);
  }

  TEST_CASE("point and constant families have closed forms") {
    Rng r(501);
    const SpectralField G = random_field(2, r);
    const Vec3 j(0.01, -0.02, 0.005);
    const BlochFamily p = point_family(G, j, 0.3);
    const BlochFamily c = constant_band(G, j, 0.04);
    for (int t = 0; t < 4; ++t) {
      const Vec3 x = r.vec3(60.0);
      const CVec3 g = field_at(G, x);
      CHECK((evaluate(p, x) - 0.3 * std::exp(I * j.dot(x)) * g).norm() < 1e-12);
      const double prof = sinc_integral(0.04, x[0]) * sinc_integral(0.04, x[1]) * sinc_integral(0.04, x[2]);
      CHECK((evaluate(c, x) - prof * std::exp(I * j.dot(x)) * g).norm() < 1e-12);
    }
    const double n2 = l2(G) * l2(G);
    CHECK(family_mass(c) == doctest::Approx(std::pow(2 * M_PI, 3) * std::pow(0.08, 3) * n2).epsilon(1e-13));
  }

  TEST_CASE("dilation preserves mass and rescales space") {
    Rng r(502);
    const SpectralField G = random_field(1, r);
    const BlochFamily f = sample_family(
        [&](const Vec3& j) {
          SpectralField g = G;
          g *= cplx(1.0 + 10 * j[0], -5 * j[2]);
          return g;
        },
        Vec3(0.02, 0.01, 0.0), 0.005, 3, true);
    CHECK(f.conjugate_paired);
    CHECK(f.boxes.size() == 2);
    for (double s : {3.0, 0.5}) {
      const BlochFamily d = dilate(f, s);
      CHECK(family_mass(d) == doctest::Approx(family_mass(f)).epsilon(1e-13));
      const Vec3 x = r.vec3(40.0);
      CHECK((evaluate(d, x) - std::pow(s, -1.5) * evaluate(f, x / s)).norm() < 1e-12 * (1 + evaluate(f, x / s).norm()));
    }
    BlochFamily g = f;
    scale(g, 2.0);
    CHECK(family_mass(g) == doctest::Approx(4.0 * family_mass(f)).epsilon(1e-14));
    // the mirror box makes F real
    const CVec3 v = evaluate(f, Vec3(3.0, -7.0, 11.0));
    CHECK(v.imag().norm() < 1e-13 * v.norm());
  }

  TEST_CASE("validation rejects bad families") {
    const SpectralField G(1);
    BlochFamily f = constant_band(G, Vec3::Zero(), 0.1);
    BlochFamily g = f;
    g.boxes.push_back(f.boxes[0]);
    g.fields.push_back(f.fields[0]);
    g.exponents.push_back({});
    CHECK_THROWS_AS(validate(g), Error);
    CHECK_THROWS_AS(constant_band(G, Vec3(0.45, 0, 0), 0.1), Error);
    CHECK_THROWS_AS(constant_band(G, Vec3::Zero(), 0.0), Error);
    g = f;
    g.fields[0][0] = SpectralField(2);
    g.boxes.push_back({Vec3(0.3, 0, 0), 0.05, 1, 1.0});
    g.fields.push_back({SpectralField(1)});
    g.exponents.push_back({});
    CHECK_THROWS_AS(validate(g), Error);
  }

  TEST_CASE("synthesis on a grid and volume files") {
    Rng r(503);
    const BlochFamily f = constant_band(random_field(1, r), Vec3(0.05, 0, 0), 0.1);
    const SampledVolume v = synthesize(f, {4.0, 1.0});
    CHECK(v.n == 9);
    const int m1 = 2, m2 = 7, m3 = 4;
    const Vec3 x(-4.0 + m1, -4.0 + m2, -4.0 + m3);
    const std::size_t idx = static_cast<std::size_t>((m1 * v.n + m2) * v.n + m3);
    const CVec3 e = evaluate(f, x);
    for (int c = 0; c < 3; ++c) CHECK(std::abs(v.values[c][idx] - e[c]) < 1e-12);
    const auto path = std::filesystem::temp_directory_path() / "alphadyn_test.avol";
    save_volume(path, v);
    const SampledVolume w = load_volume(path);
    std::filesystem::remove(path);
    CHECK(w.n == v.n);
    CHECK(w.R == v.R);
    for (int c = 0; c < 3; ++c) CHECK(w.values[c] == v.values[c]);
  }

  TEST_CASE("Parseval on growing cubes") {
    Rng r(504);
    const SpectralField G = random_field(1, r, {.div_free = true});
    const BlochFamily f = constant_band(G, Vec3::Zero(), 0.1);
    const ParsevalReport p = parseval_check(f, {50, 100, 200, 400});
    CHECK(p.rhs == doctest::Approx(family_mass(f)));
    CHECK(p.decreasing);
    CHECK(p.converged);
    CHECK(p.rows.back().rel_err <= 0.05);
    // the sinc tail makes the defect halve with R
    CHECK(p.rows[2].rel_err / p.rows[3].rel_err == doctest::Approx(2.0).epsilon(0.1));
    const double R = concentration_radius(f, 0.1);
    BoxMass bm(f, {R});
    CHECK(bm.mass(0) >= 0.9 * bm.rhs());
  }

  TEST_CASE("scale index") {
    CHECK(scale_index(1.0, 0.9) == 0);
    CHECK(scale_index(0.9, 0.9) == 1);
    CHECK(scale_index(0.85, 0.9) == 1);
    CHECK(scale_index(0.81, 0.9) == 2);
    CHECK_THROWS_AS(scale_index(0.0, 0.9), Error);
  }

  TEST_CASE("band datum around the growing mode") {
    const SpectralField U = 0.05 * make_abc({1, 1, 1}, 1);
    const Vec3 js(0.001, 0.00075, 0.0);
    BandOptions opt;
    opt.order = 3;
    const BandDatum d = build_band_datum(U, js, 4e-4, 0.9, 0.9, 1, opt);
    CHECK(d.n == 1);
    CHECK(d.eps_modal == doctest::Approx(1.0));
    CHECK(d.p_star.real() > 0);
    CHECK(d.min_re_p >= 0.5 * d.p_star.real());
    CHECK(family_mass(d.family) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(d.family.conjugate_paired);
    CHECK(d.family.node_count() == 2 * 27);
    CHECK_THROWS_AS(build_band_datum(U, js, 4e-4, 0.9, 0.9, 3, opt), Error);
  }
}
